"""
改进常数计算 - 谱距离 d / d*、指数和、可证改进常数 c_cert 以及窗口积分与重排不等式的数值检查

带形区域映射 z → πz 后使用宽度为 π 的带形 Poisson 核
P(x, y) = sin x / (cosh y - cos x)，∫ P(x, y) dy = 2(π - x)。
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .config_manager import get_config_manager
from .errors import InputError, NormalizationError, PreconditionError, SoundnessError
from .inequalities import (
    CordesInstance,
    InequalityReport,
    McIntoshInstance,
    evaluate_cordes,
    evaluate_mcintosh,
    normalize_cordes,
    normalize_mcintosh,
)
from .quadrature import adaptive_simpson, integrate_pieces, dense_sup

logger = logging.getLogger(__name__)

SIDES = ("left", "right")


# ===== 谱距离 =====

@dataclass(frozen=True)
class SpectralGap:
    """
    d = term1 + term2

    mcintosh: term1 = min|α_i + α_j - 2β_k|, term2 = min|2α_i - β_j - β_k|
    cordes:   term1 = min|α_i + α_j + 2β_k|, term2 = min|2α_i + β_j + β_k|
    其中 α = log σ(A)，β = log σ(B)。
    """
    term1: float
    term2: float
    d: float
    witness1: Tuple[int, int, int]
    witness2: Tuple[int, int, int]
    sign_mode: str

    def side_gap(self, side: str) -> float:
        """left 对应 term2（strip 函数自身的频率族），right 对应 term1（伴随实例）"""
        return self.term2 if side == "left" else self.term1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'term1': self.term1,
            'term2': self.term2,
            'd': self.d,
            'witness1': list(self.witness1),
            'witness2': list(self.witness2),
            'sign_mode': self.sign_mode,
        }


def _log_spectrum(spectrum: Sequence[float], name: str) -> np.ndarray:
    values = np.asarray(spectrum, dtype=float).reshape(-1)
    if values.size == 0:
        raise InputError(f"{name} 的谱为空")
    if np.any(values <= 0):
        raise InputError(f"{name} 的谱必须严格为正 (对数未定义): {values[values <= 0].tolist()}")
    return np.log(values)


def _gap_terms(alpha: np.ndarray, beta: np.ndarray, sign_mode: str) -> Tuple[np.ndarray, np.ndarray]:
    if sign_mode == "mcintosh":
        first = np.abs((alpha[:, None, None] + alpha[None, :, None]) - 2.0 * beta[None, None, :])
        second = np.abs((beta[None, :, None] + beta[None, None, :]) - 2.0 * alpha[:, None, None])
    elif sign_mode == "cordes":
        first = np.abs((alpha[:, None, None] + alpha[None, :, None]) + 2.0 * beta[None, None, :])
        second = np.abs((beta[None, :, None] + beta[None, None, :]) + 2.0 * alpha[:, None, None])
    else:
        raise InputError(f"未知的符号模式: {sign_mode}")
    return first, second


def compute_d(
    spectrum_a: Sequence[float],
    spectrum_b: Sequence[float],
    sign_mode: str = "mcintosh",
    normalized: bool = True,
) -> SpectralGap:
    """对所有 O(n³) 三元组穷举求最小值"""
    if not normalized:
        raise NormalizationError("谱距离只对归一化实例有定义")
    alpha = _log_spectrum(spectrum_a, "A")
    beta = _log_spectrum(spectrum_b, "B")
    first, second = _gap_terms(alpha, beta, sign_mode)
    w1 = tuple(int(i) for i in np.unravel_index(np.argmin(first), first.shape))
    w2 = tuple(int(i) for i in np.unravel_index(np.argmin(second), second.shape))
    term1 = float(first[w1])
    term2 = float(second[w2])
    return SpectralGap(term1, term2, term1 + term2, w1, w2, sign_mode)


# ===== 指数和 =====

@dataclass(frozen=True, eq=False)
class ExponentialSum:
    """Σ c_j e^{i d_j t}，频率升序且互不相同"""
    coefficients: np.ndarray
    frequencies: np.ndarray

    @classmethod
    def from_terms(
        cls,
        coefficients: Sequence[float],
        frequencies: Sequence[float],
        drop_zeros: bool = True,
    ) -> "ExponentialSum":
        """精确合并相同频率（系数相加）"""
        coeffs = np.asarray(coefficients, dtype=float).reshape(-1)
        freqs = np.asarray(frequencies, dtype=float).reshape(-1)
        if coeffs.shape != freqs.shape:
            raise InputError(f"系数与频率个数不一致: {coeffs.size} vs {freqs.size}")
        unique, inverse = np.unique(freqs, return_inverse=True)
        merged = np.bincount(inverse.reshape(-1), weights=coeffs, minlength=unique.size)
        if drop_zeros:
            keep = merged != 0.0
            unique, merged = unique[keep], merged[keep]
        unique.setflags(write=False)
        merged.setflags(write=False)
        return cls(merged, unique)

    @property
    def size(self) -> int:
        return int(self.frequencies.size)

    @property
    def nonconstant(self) -> np.ndarray:
        return self.frequencies != 0.0

    @property
    def min_abs_freq(self) -> Optional[float]:
        mask = self.nonconstant
        return float(np.min(np.abs(self.frequencies[mask]))) if np.any(mask) else None

    @property
    def sigma_lo(self) -> Optional[float]:
        return float(self.frequencies[0]) if self.size else None

    @property
    def sigma_hi(self) -> Optional[float]:
        return float(self.frequencies[-1]) if self.size else None

    @property
    def constant_term(self) -> float:
        mask = self.frequencies == 0.0
        return float(self.coefficients[mask].sum()) if np.any(mask) else 0.0

    def extreme_coefficients(self) -> Tuple[Optional[float], Optional[float]]:
        """σ̲ 与 σ̄ 处的系数"""
        if not self.size:
            return None, None
        return float(self.coefficients[0]), float(self.coefficients[-1])

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients)))

    @property
    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.coefficients ** 2)))

    def evaluate(self, t: Union[float, np.ndarray]) -> Union[complex, np.ndarray]:
        ts = np.asarray(t, dtype=float)
        values = np.exp(1j * np.multiply.outer(ts, self.frequencies)) @ self.coefficients
        return complex(values) if ts.ndim == 0 else values

    def real_part(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        ts = np.asarray(t, dtype=float)
        values = np.cos(np.multiply.outer(ts, self.frequencies)) @ self.coefficients
        return float(values) if ts.ndim == 0 else values

    def integral(self, a: float, b: float) -> complex:
        """∫_a^b Σ c_j e^{i d_j t} dt 闭式"""
        d = self.frequencies
        c = self.coefficients
        nz = d != 0.0
        total = complex(np.sum(c[~nz]) * (b - a))
        total += complex(np.sum(c[nz] * (np.exp(1j * d[nz] * b) - np.exp(1j * d[nz] * a)) / (1j * d[nz])))
        return total

    def sup_norm(self, window: float, samples: int = 20001) -> float:
        """[-window, window] 上等距采样的 sup|·|（下界估计）"""
        ts = np.linspace(-window, window, samples)
        chunk = 4096
        best = 0.0
        for start in range(0, samples, chunk):
            best = max(best, float(np.max(np.abs(self.evaluate(ts[start:start + chunk])))))
        return best

    def to_dict(self) -> Dict[str, Any]:
        lo_c, hi_c = self.extreme_coefficients()
        return {
            'terms': [[float(c), float(d)] for c, d in zip(self.coefficients, self.frequencies)],
            'min_abs_freq': self.min_abs_freq,
            'sigma_lo': self.sigma_lo,
            'sigma_hi': self.sigma_hi,
            'sigma_lo_coefficient': lo_c,
            'sigma_hi_coefficient': hi_c,
        }


# ===== 带形 Poisson 核 =====

def _check_abscissa(x: float) -> None:
    if not 0.0 < x < math.pi:
        raise InputError(f"Poisson 核横坐标必须位于 (0, π): {x}")


def poisson_kernel(x: float, y: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """P(x, y) = sin x / (cosh y - cos x)"""
    _check_abscissa(x)
    ys = np.asarray(y, dtype=float)
    with np.errstate(over="ignore"):
        values = math.sin(x) / (np.cosh(ys) - math.cos(x))
    return float(values) if ys.ndim == 0 else values


def poisson_mass(x: float) -> float:
    """∫_{-∞}^{∞} P(x, y) dy = 2(π - x)"""
    _check_abscissa(x)
    return 2.0 * (math.pi - x)


def kernel_antiderivative(x: float, y: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """∫_0^y P(x, u) du = 2 arctan(tanh(y/2) / tan(x/2))"""
    _check_abscissa(x)
    ys = np.asarray(y, dtype=float)
    values = 2.0 * np.arctan(np.tanh(ys / 2.0) / math.tan(x / 2.0))
    return float(values) if ys.ndim == 0 else values


def kernel_tail(x: float, a: float) -> float:
    """∫_a^∞ P(x, y) dy（a ≥ 0），无相消"""
    _check_abscissa(x)
    if a < 0:
        raise InputError(f"尾部起点必须非负: {a}")
    k = 1.0 / math.tan(x / 2.0)
    e = math.exp(-a)
    one_minus_tau = 2.0 * e / (1.0 + e)
    tau = (1.0 - e) / (1.0 + e)
    return 2.0 * math.atan(k * one_minus_tau / (1.0 + k * k * tau))


def _log_cosh(u: float) -> float:
    u = abs(u)
    return u + math.log1p(math.exp(-2.0 * u)) - math.log(2.0)


def _log_sinh(u: float) -> float:
    return u + math.log1p(-math.exp(-2.0 * u)) - math.log(2.0)


def log_kernel_window_mass(x: float, a: float, b: float) -> float:
    """log ∫_a^b P(x, y) dy（0 ≤ a < b），闭式，窗口很远时也不下溢"""
    _check_abscissa(x)
    if not 0.0 <= a < b:
        raise InputError(f"需要 0 ≤ a < b: a={a}, b={b}")
    k = 1.0 / math.tan(x / 2.0)
    log_diff = _log_sinh((b - a) / 2.0) - _log_cosh(a / 2.0) - _log_cosh(b / 2.0)
    tau_a = math.tanh(a / 2.0)
    tau_b = math.tanh(b / 2.0)
    log_q = math.log(k) + log_diff - math.log1p(k * k * tau_a * tau_b)
    if log_q < -30.0:
        # arctan(q) = q(1 - q²/3 + ...)
        return math.log(2.0) + log_q
    return math.log(2.0 * math.atan(math.exp(log_q)))


def _log_annulus_fraction(x: float, ell: float) -> float:
    """log m(ℓ)，m = 2∫_{3L/4}^{L} P / (2(π - x))，L = πℓ"""
    L = math.pi * ell
    return math.log(2.0) + log_kernel_window_mass(x, 0.75 * L, L) - math.log(poisson_mass(x))


def optimal_window(x: float) -> float:
    """使环形质量分数 m 最大的窗口半长 ℓ*"""
    res = minimize_scalar(
        lambda u: -_log_annulus_fraction(x, math.exp(u)),
        bounds=(math.log(1e-4), math.log(1e3)),
        method="bounded",
        options={'xatol': 1e-10},
    )
    return float(math.exp(res.x))


# ===== 可证改进常数 =====

@dataclass
class CertifiedBound:
    """证明流程的中间量与改进常数 c_cert"""
    n: int
    r: float
    d: float
    delta: float
    ell: float
    ell_star: float
    ell_used: float
    window_rule: str
    strip_side: str
    mode: str
    abscissa: float
    side_weight: float
    kernel_mass: float
    poisson_gain: float
    log_poisson_gain: float
    c_cert: float
    log_c_cert: float
    quad_error: float
    quad_converged: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _side_geometry(r: float, side: str, mode: str) -> Tuple[float, float]:
    """返回 (Poisson 核横坐标, 边界线的调和测度权重)；Cordes 两侧相同"""
    if mode == "mcintosh" and side == "left":
        return math.pi * (1.0 - r), r
    return math.pi * r, 1.0 - r


def certified_improvement(
    n: int,
    r: float,
    d: float,
    side_hint: Optional[str] = None,
    mode: str = "mcintosh",
    window_rule: Optional[str] = None,
    quad_tol: Optional[float] = None,
) -> CertifiedBound:
    """
    由证明流程计算 c_cert

    δ = d/2，ℓ = 2√n/δ（window_rule='coefficient' 时 ℓ = 2n/δ）；
    实际窗口 ℓ_used = max(ℓ, ℓ*)，ℓ* 使环形质量分数最大（窗口加长时窗口积分界仍成立）。
    c_cert = w · m，m = 2∫_{3L/4}^{L} P(x,y)dy / 2(π-x)，L = πℓ_used，w 为所用边界线的权重。
    环形积分在 u = y - 3L/4 上对 P·e^{3L/4} 做自适应 Simpson，远窗口不下溢。
    """
    settings = get_config_manager().refinement_settings
    window_rule = window_rule or settings.window_rule
    quad_tol = settings.quad_tol if quad_tol is None else quad_tol

    if int(n) < 1:
        raise InputError(f"n 必须 ≥ 1: {n}")
    if not 0.0 < r < 1.0:
        raise InputError(f"指数必须位于 (0, 1): {r}")
    if mode not in ("mcintosh", "cordes"):
        raise InputError(f"未知模式: {mode}")
    if not d > 0:
        raise PreconditionError(f"d = {d} ≤ 0: no refinement certified")
    side = "left" if side_hint in (None, "auto") else side_hint
    if side not in SIDES:
        raise InputError(f"未知的边界侧: {side_hint}")

    n = int(n)
    delta = d / 2.0
    if window_rule == "sqrt_n":
        ell = 2.0 * math.sqrt(n) / delta
    elif window_rule == "coefficient":
        ell = 2.0 * n / delta
    else:
        raise InputError(f"未知的窗口规则: {window_rule}")

    x, weight = _side_geometry(r, side, mode)
    ell_star = optimal_window(x)
    ell_used = max(ell, ell_star)

    L = math.pi * ell_used
    a = 0.75 * L
    span = L - a
    sin_x = math.sin(x)
    cos_x = math.cos(x)
    log_scale_a = -a

    def rescaled(u: np.ndarray) -> np.ndarray:
        # P(x, a+u)·e^a
        return sin_x / (0.5 * (np.exp(u) + np.exp(-2.0 * a - u)) - cos_x * math.exp(log_scale_a))

    oracle_log = log_kernel_window_mass(x, a, L)
    scale = math.exp(oracle_log + a)
    quad = adaptive_simpson(
        rescaled, 0.0, span, tol=quad_tol * scale,
        max_intervals=settings.max_intervals, vectorized=True,
    )
    integral = float(quad.value)
    if integral <= 0:
        raise SoundnessError(f"环形积分非正: {integral!r}")
    log_half = math.log(integral) - a
    rel = abs(log_half - oracle_log)
    if rel > 1e-6:
        logger.warning(f"⚠️ 环形积分与闭式结果相差 {rel:.3e} (对数)")

    mass = poisson_mass(x)
    log_gain = math.log(2.0) + log_half
    log_m = log_gain - math.log(mass)
    log_c = math.log(weight) + log_m
    c_cert = math.exp(log_c)

    logger.debug(
        f"c_cert: n={n}, r={r}, d={d}, side={side}, ℓ={ell:.6g}, ℓ*={ell_star:.6g}, c={c_cert:.6e}"
    )
    return CertifiedBound(
        n=n, r=float(r), d=float(d), delta=delta, ell=ell, ell_star=ell_star, ell_used=ell_used,
        window_rule=window_rule, strip_side=side, mode=mode, abscissa=x, side_weight=weight,
        kernel_mass=mass, poisson_gain=math.exp(log_gain), log_poisson_gain=log_gain,
        c_cert=c_cert, log_c_cert=log_c, quad_error=quad.error * math.exp(-a),
        quad_converged=quad.converged,
    )


@dataclass
class ShapeFitReport:
    """log c_cert 对 √n/d 的线性拟合"""
    points: List[Dict[str, float]]
    slope: Optional[float]
    intercept: Optional[float]
    a: Optional[float]
    b: Optional[float]
    lower_envelope_holds: Optional[bool]
    monotone_in_d: bool
    status: str  # fitted / degenerate

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def asymptotic_shape_check(
    n_grid: Sequence[int],
    d_grid: Sequence[float],
    r: float,
    side: str = "left",
    mode: str = "mcintosh",
) -> ShapeFitReport:
    """
    拟合 log c_cert ≈ a - b·√n/d，并检查网格上的下包络 log c ≥ a - b·√n/d

    只报告形状一致性，不声称任何具体的常数 c_r。
    """
    points = []
    for n in n_grid:
        for d in d_grid:
            bound = certified_improvement(int(n), r, float(d), side, mode)
            points.append({'n': int(n), 'd': float(d), 'x': math.sqrt(n) / d, 'log_c_cert': bound.log_c_cert})

    monotone = True
    for n in n_grid:
        series = sorted((p['d'], p['log_c_cert']) for p in points if p['n'] == int(n))
        for (_, lo), (_, hi) in zip(series, series[1:]):
            if hi < lo - 1e-12:
                monotone = False

    xs = np.array([p['x'] for p in points])
    ys = np.array([p['log_c_cert'] for p in points])
    if len(points) < 2 or np.ptp(xs) == 0.0:
        return ShapeFitReport(points, None, None, None, None, None, monotone, "degenerate")

    slope, intercept = np.polyfit(xs, ys, 1)
    b = -float(slope)
    if b <= 0:
        return ShapeFitReport(points, float(slope), float(intercept), None, None, False, monotone, "fitted")
    a = float(np.min(ys + b * xs))
    holds = bool(np.all(ys >= a - b * xs - 1e-12))
    return ShapeFitReport(points, float(slope), float(intercept), a, b, holds, monotone, "fitted")


# ===== 辅助界的数值检查 =====

@dataclass
class BoundCheckReport:
    """辅助界检查结果"""
    name: str
    lhs: Optional[float]
    rhs: Optional[float]
    margin: Optional[float]
    holds: Optional[bool]
    status: str  # holds / violated / precondition-unmet
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def window_integral_check(
    exp_sum: ExponentialSum,
    eta: float,
    samples: int = 20001,
    quad_tol: float = 1e-10,
) -> BoundCheckReport:
    """
    |∫_{-ℓ}^{ℓ} Σ c_j e^{i d_j t} dt| ≤ ℓ · sup|Σ c_j e^{i d_j t}|，ℓ = 2√N/η

    左侧用闭式 Σ c_j 2 sin(d_j ℓ)/d_j，并用求积交叉校验；
    sup 取采样估计与 ‖c‖₂ 的较大者（二者都是真实 sup 的下界）。
    """
    if not eta > 0:
        raise PreconditionError(f"η 必须为正: {eta}")
    if exp_sum.size == 0:
        raise PreconditionError("指数和为空")
    below = np.abs(exp_sum.frequencies) < eta
    if np.any(below):
        raise PreconditionError(f"频率 {exp_sum.frequencies[below].tolist()} 小于 η = {eta}")

    count = exp_sum.size
    ell = 2.0 * math.sqrt(count) / eta
    d = exp_sum.frequencies
    exact = float(np.sum(exp_sum.coefficients * 2.0 * np.sin(d * ell) / d))
    quad = adaptive_simpson(exp_sum.real_part, -ell, ell, tol=quad_tol, vectorized=True)
    sampled = exp_sum.sup_norm(max(ell, 50.0), samples)
    sup_est = max(sampled, exp_sum.l2_norm)

    lhs = abs(exact)
    rhs = ell * sup_est
    holds = lhs <= rhs * (1.0 + 1e-12)
    if not holds:
        logger.error(f"❌ 窗口积分界检查失败: {lhs!r} > {rhs!r}")
    return BoundCheckReport(
        "window-integral", lhs, rhs, rhs - lhs, holds, "holds" if holds else "violated",
        {
            'ell': ell, 'eta': eta, 'terms': count, 'integral_exact': exact,
            'integral_quadrature': float(quad.value), 'sup_sampled': sampled,
            'coefficient_l2': exp_sum.l2_norm,
        },
    )


def rearrangement_check(
    f: Callable,
    g: Callable,
    x: float,
    bound: Optional[float] = None,
    samples: int = 4001,
    tol: float = 1e-8,
    vectorized: bool = True,
) -> BoundCheckReport:
    """
    f 在 [0, x] 上单调不增且非负，|g| ≤ M，∫_0^x g ≤ xM/2 时
    ∫_0^x f g ≤ M(∫_0^{3x/4} f - ∫_{3x/4}^x f)

    M 缺省时用稠密采样估计；同时报告极值函数 h = +M·1[0,3x/4] - M·1(3x/4,x] 的配对值。
    """
    if not x > 0:
        raise InputError(f"区间长度必须为正: {x}")
    grid = np.linspace(0.0, x, samples)
    fv = np.asarray(f(grid)) if vectorized else np.array([f(float(t)) for t in grid])
    monotone = bool(np.all(np.diff(fv) <= 1e-12 * max(1.0, float(np.max(np.abs(fv))))))
    nonneg = bool(np.all(fv >= -1e-15))
    M = float(bound) if bound is not None else dense_sup(g, 0.0, x, samples, vectorized)

    breaks = [0.0, 0.5 * x, 0.75 * x, x]
    g_mass = float(np.real(integrate_pieces(g, breaks, tol * 1e-2, vectorized=vectorized).value))
    details: Dict[str, Any] = {'x': x, 'M': M, 'g_integral': g_mass, 'f_monotone': monotone, 'f_nonnegative': nonneg}
    if not (monotone and nonneg) or g_mass > 0.5 * x * M + tol:
        logger.warning("⚠️ 重排不等式前提不满足, 不作断言")
        return BoundCheckReport("rearrangement", None, None, None, None, "precondition-unmet", details)

    fg = integrate_pieces(lambda t: f(t) * g(t), breaks, tol * 1e-2, vectorized=vectorized)
    head = integrate_pieces(f, breaks[:3], tol * 1e-2, vectorized=vectorized)
    tail = integrate_pieces(f, breaks[2:], tol * 1e-2, vectorized=vectorized)
    lhs = float(np.real(fg.value))
    extremal = float(np.real(head.value - tail.value))
    rhs = M * extremal
    holds = lhs <= rhs + tol
    details['extremal_pairing'] = rhs
    if not holds:
        logger.error(f"❌ 重排不等式检查失败: {lhs!r} > {rhs!r}")
    return BoundCheckReport("rearrangement", lhs, rhs, rhs - lhs, holds, "holds" if holds else "violated", details)


# ===== 改进的不等式 =====

@dataclass
class RefinedReport:
    """改进不等式的结果：普通报告 + 谱距离 + 可证常数"""
    report: InequalityReport
    gap: Optional[SpectralGap]
    bound: Optional[CertifiedBound]
    margin: Optional[float]
    status: str  # certified / no-certificate / violated
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'report': self.report.to_dict(),
            'gap': None if self.gap is None else self.gap.to_dict(),
            'bound': None if self.bound is None else self.bound.to_dict(),
            'margin': self.margin,
            'status': self.status,
            'notes': list(self.notes),
        }


def select_side(gap: SpectralGap, side_hint: Optional[str] = None) -> str:
    """自动选择间隙较大的一侧，相等时取 left"""
    if side_hint in SIDES:
        return side_hint
    return "left" if gap.term2 >= gap.term1 else "right"


def _certify(
    report: InequalityReport,
    gap: SpectralGap,
    n: int,
    exponent: float,
    side_hint: Optional[str],
    mode: str,
) -> RefinedReport:
    notes: List[str] = []
    if gap.d <= 0.0:
        notes.append("d = 0: no refinement certified")
        return RefinedReport(report, gap, None, None, "no-certificate", notes)
    side = select_side(gap, side_hint)
    side_gap = gap.side_gap(side)
    if side_gap <= 0.0:
        notes.append(f"{side} 侧频率间隙为 0: no refinement certified")
        return RefinedReport(report, gap, None, None, "no-certificate", notes)
    d_eff = min(gap.d, 2.0 * side_gap)
    bound = certified_improvement(n, exponent, d_eff, side, mode)

    slack = get_config_manager().refinement_settings.soundness_slack
    ratio = report.ratio if report.ratio is not None else 0.0
    margin = (1.0 - bound.c_cert) - ratio
    if ratio > 1.0 - bound.c_cert + slack:
        note = f"{mode} 比值 {ratio!r} 超过可证上界 1 - c_cert = {1.0 - bound.c_cert!r}"
        logger.error(f"❌ {note}")
        notes.append(note)
        return RefinedReport(report, gap, bound, margin, "violated", notes)
    return RefinedReport(report, gap, bound, margin, "certified", notes)


def refined_mcintosh(inst: McIntoshInstance, side_hint: Optional[str] = None) -> RefinedReport:
    """‖A^r X B^{1-r}‖ ≤ (1 - c) ‖AX‖^r ‖XB‖^{1-r}"""
    if not 0.0 < inst.r < 1.0:
        raise PreconditionError(f"改进不等式要求 r ∈ (0, 1): {inst.r}")
    if inst.decomp_a.status() != "spd" or inst.decomp_b.status() != "spd":
        report = evaluate_mcintosh(inst)
        note = "半正定输入: 谱距离 d 不可用"
        logger.warning(f"⚠️ {note}")
        return RefinedReport(report, None, None, None, "no-certificate", [note])
    norm = normalize_mcintosh(inst)
    report = evaluate_mcintosh(norm)
    gap = compute_d(norm.decomp_a.eigenvalues, norm.decomp_b.eigenvalues, "mcintosh", norm.normalized)
    return _certify(report, gap, norm.n, norm.r, side_hint, "mcintosh")


def refined_cordes(inst: CordesInstance, side_hint: Optional[str] = None) -> RefinedReport:
    """‖A^s B^s‖ ≤ (1 - c) ‖AB‖^s"""
    if not 0.0 < inst.s < 1.0:
        raise PreconditionError(f"改进不等式要求 s ∈ (0, 1): {inst.s}")
    if inst.decomp_a.status() != "spd" or inst.decomp_b.status() != "spd":
        report = evaluate_cordes(inst)
        note = "半正定输入: 谱距离 d* 不可用"
        logger.warning(f"⚠️ {note}")
        return RefinedReport(report, None, None, None, "no-certificate", [note])
    norm = normalize_cordes(inst)
    report = evaluate_cordes(norm)
    gap = compute_d(norm.decomp_a.eigenvalues, norm.decomp_b.eigenvalues, "cordes", norm.normalized)
    return _certify(report, gap, norm.n, norm.s, side_hint, "cordes")
