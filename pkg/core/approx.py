"""
逼近问题探索 - 函数类 𝓕 的求值、sup 范数估计、与 Poisson 密度的配对、𝓗/𝓖 成员判定和上确界搜索

f(t) = Σ_k e^{-2i a_k t} (Σ_l c_{k,l} e^{i b_l t})²
g(y) = P(πr, y) / (2π(1 - r))，是概率密度。
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config_manager import get_config_manager
from .errors import InputError
from .quadrature import adaptive_simpson
from .refinement import ExponentialSum, certified_improvement, kernel_tail, poisson_kernel

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ApproxInstance:
    """(a, b, C, r)"""
    a: np.ndarray
    b: np.ndarray
    C: np.ndarray
    r: float

    @classmethod
    def create(cls, a: Sequence[float], b: Sequence[float], C: Sequence[Sequence[float]], r: float) -> "ApproxInstance":
        av = np.array(a, dtype=float).reshape(-1)
        bv = np.array(b, dtype=float).reshape(-1)
        cm = np.array(C, dtype=float).reshape(av.size, bv.size) if np.size(C) == av.size * bv.size else None
        if cm is None or av.size != bv.size or av.size < 1:
            raise InputError(f"维度不匹配: a {av.size}, b {bv.size}, C {np.shape(C)}")
        if not (np.all(np.isfinite(av)) and np.all(np.isfinite(bv)) and np.all(np.isfinite(cm))):
            raise InputError("实例含有非有限元素")
        if not 0.0 < r < 1.0:
            raise InputError(f"r 必须位于 (0, 1): {r}")
        for arr in (av, bv, cm):
            arr.setflags(write=False)
        return cls(av, bv, cm, float(r))

    @property
    def n(self) -> int:
        return int(self.a.size)

    def with_coefficients(self, C: np.ndarray) -> "ApproxInstance":
        return ApproxInstance.create(self.a, self.b, C, self.r)

    def to_dict(self) -> Dict[str, Any]:
        return {'a': self.a.tolist(), 'b': self.b.tolist(), 'C': self.C.tolist(), 'r': self.r}


def cos2_example(r: float = 0.5, omega: float = 0.2) -> ApproxInstance:
    """cos²(ωt) ∈ 𝓕：a = (0, 0)，b = (ω, -ω)，第一行系数 (1/2, 1/2)"""
    return ApproxInstance.create([0.0, 0.0], [omega, -omega], [[0.5, 0.5], [0.0, 0.0]], r)


def eval_f(inst: ApproxInstance, t: Union[float, np.ndarray]) -> Union[complex, np.ndarray]:
    ts = np.asarray(t, dtype=float)
    flat = ts.reshape(-1)
    inner = np.exp(1j * np.outer(flat, inst.b)) @ inst.C.T
    values = np.sum(np.exp(-2j * np.outer(flat, inst.a)) * inner * inner, axis=1)
    return complex(values[0]) if ts.ndim == 0 else values.reshape(ts.shape)


def expand(inst: ApproxInstance) -> ExponentialSum:
    """系数 c_{k,l} c_{k,l'}，频率 b_l + b_l' - 2a_k"""
    coeffs = inst.C[:, :, None] * inst.C[:, None, :]
    freqs = (inst.b[None, :, None] + inst.b[None, None, :]) - 2.0 * inst.a[:, None, None]
    return ExponentialSum.from_terms(coeffs.reshape(-1), np.broadcast_to(freqs, coeffs.shape).reshape(-1))


def kernel_density(r: float, y: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """g(y) = P(πr, y) / (2π(1 - r))"""
    return poisson_kernel(math.pi * r, y) / (2.0 * math.pi * (1.0 - r))


@dataclass
class SupNormEstimate:
    """sup|f| 的下界估计及网格信息"""
    value: float
    argmax: float
    window: float
    samples: int
    spacing: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _golden_max(func, lo: np.ndarray, hi: np.ndarray, iters: int = 60) -> Tuple[np.ndarray, np.ndarray]:
    """对多个区间同时做黄金分割搜索（func 接受数组）"""
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    c = hi - inv * (hi - lo)
    d = lo + inv * (hi - lo)
    fc, fd = func(c), func(d)
    for _ in range(iters):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = np.where(left, hi - inv * (hi - lo), d)
        new_d = np.where(left, c, lo + inv * (hi - lo))
        probe = np.where(left, new_c, new_d)
        fp = func(probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = new_c, new_d
    return np.where(fc >= fd, c, d), np.maximum(fc, fd)


def sup_norm(
    inst: Union[ApproxInstance, ExponentialSum],
    window: Optional[float] = None,
    samples: Optional[int] = None,
    refine_top: Optional[int] = None,
) -> SupNormEstimate:
    """
    在 [-window, window] 的均匀网格上取 max|f|，再对前 refine_top 个局部极大做黄金分割细化
    """
    settings = get_config_manager().approx_settings
    window = settings.window if window is None else window
    samples = settings.samples if samples is None else samples
    refine_top = settings.refine_top if refine_top is None else refine_top
    if window <= 0:
        raise InputError(f"窗口必须为正: {window}")
    if samples < 3:
        raise InputError(f"采样点数过少: {samples}")

    evaluate = inst.evaluate if isinstance(inst, ExponentialSum) else (lambda t: eval_f(inst, t))
    ts = np.linspace(-window, window, samples)
    values = np.abs(evaluate(ts))
    spacing = float(ts[1] - ts[0])

    best_idx = int(np.argmax(values))
    best_t, best_v = float(ts[best_idx]), float(values[best_idx])

    interior = values[1:-1]
    peaks = np.nonzero((interior >= values[:-2]) & (interior >= values[2:]))[0] + 1
    if peaks.size:
        top = peaks[np.argsort(-values[peaks], kind="stable")[:refine_top]]
        t_ref, v_ref = _golden_max(lambda t: np.abs(evaluate(t)), ts[top] - spacing, ts[top] + spacing)
        k = int(np.argmax(v_ref))
        if v_ref[k] > best_v:
            best_t, best_v = float(t_ref[k]), float(v_ref[k])
    return SupNormEstimate(best_v, best_t, window, samples, spacing)


def pairing_exact(exp_sum: ExponentialSum, r: float) -> float:
    """
    闭式配对 Σ c_j φ(d_j)，φ(d) = ∫ e^{idy} g(y) dy = sinh(π(1-r)d) / ((1-r) sinh(πd))
    """
    d = np.abs(exp_sum.frequencies)
    phi = np.ones_like(d)
    nz = d > 0
    dn = d[nz]
    # sinh(π(1-r)d)/sinh(πd) = e^{-πrd} (1 - e^{-2π(1-r)d}) / (1 - e^{-2πd})
    phi[nz] = (
        np.exp(-math.pi * r * dn)
        * (-np.expm1(-2.0 * math.pi * (1.0 - r) * dn))
        / (-np.expm1(-2.0 * math.pi * dn))
        / (1.0 - r)
    )
    return float(np.sum(exp_sum.coefficients * phi))


@dataclass
class PairingResult:
    """∫ f g 的截断求积"""
    value: float
    imag: float
    tail_bound: float
    quad_error: float
    closed_form: float
    truncation: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def pairing(inst: ApproxInstance, truncation: Optional[float] = None, tol: Optional[float] = None) -> PairingResult:
    """Re ∫_{-Y}^{Y} f(y) g(y) dy，尾部界 ‖c‖₁ · 2∫_Y^∞ g；Y 与容差缺省取 approx_settings"""
    settings = get_config_manager().approx_settings
    truncation = settings.pairing_cutoff if truncation is None else truncation
    tol = settings.pairing_tol if tol is None else tol
    r = inst.r
    quad = adaptive_simpson(
        lambda y: eval_f(inst, y) * kernel_density(r, y),
        -truncation, truncation, tol=tol, vectorized=True,
    )
    exp_sum = expand(inst)
    tail = exp_sum.l1_norm * 2.0 * kernel_tail(math.pi * r, truncation) / (2.0 * math.pi * (1.0 - r))
    value = complex(quad.value)
    if abs(value.imag) > 1e-6:
        logger.warning(f"⚠️ 配对虚部 {value.imag:.3e} 超过 1e-6")
    return PairingResult(value.real, value.imag, tail, quad.error, pairing_exact(exp_sum, r), truncation)


@dataclass(frozen=True)
class ClassConstraint:
    """H: min|b_i + b_j - 2a_k| ≥ δ；G: min|a_i - b_j| ≥ δ"""
    kind: str
    delta: float

    def __post_init__(self):
        if self.kind not in ("H", "G"):
            raise InputError(f"未知的函数类: {self.kind}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise InputError(f"δ 必须为正有限数: {self.delta}")


@dataclass
class MembershipResult:
    member: bool
    min_gap: float
    witness: Tuple[int, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {'member': self.member, 'min_gap': self.min_gap, 'witness': list(self.witness)}


def membership(inst: Union[ApproxInstance, Tuple[np.ndarray, np.ndarray]], constraint: ClassConstraint) -> MembershipResult:
    """穷举最小间隙并给出见证下标"""
    a, b = (inst.a, inst.b) if isinstance(inst, ApproxInstance) else (np.asarray(inst[0]), np.asarray(inst[1]))
    if constraint.kind == "H":
        gaps = np.abs((b[:, None, None] + b[None, :, None]) - 2.0 * a[None, None, :])
    else:
        gaps = np.abs(a[:, None] - b[None, :])
    witness = tuple(int(i) for i in np.unravel_index(np.argmin(gaps), gaps.shape))
    min_gap = float(gaps[witness])
    return MembershipResult(min_gap >= constraint.delta, min_gap, witness)


def repair_frequencies(a: np.ndarray, b: np.ndarray, constraint: ClassConstraint) -> np.ndarray:
    """平移 a_k 到最近的可行位置"""
    delta = constraint.delta
    pad = delta * (1.0 + 1e-12)
    repaired = np.array(a, dtype=float)
    if constraint.kind == "H":
        centers = (b[:, None] + b[None, :]).reshape(-1)
        for k in range(repaired.size):
            u = 2.0 * repaired[k]
            if np.all(np.abs(centers - u) >= delta):
                continue
            candidates = np.concatenate([centers - pad, centers + pad])
            ok = np.array([np.all(np.abs(centers - c) >= delta) for c in candidates])
            chosen = candidates[ok][np.argmin(np.abs(candidates[ok] - u))]
            repaired[k] = chosen / 2.0
    else:
        centers = np.asarray(b, dtype=float)
        for k in range(repaired.size):
            u = repaired[k]
            if np.all(np.abs(centers - u) >= delta):
                continue
            candidates = np.concatenate([centers - pad, centers + pad])
            ok = np.array([np.all(np.abs(centers - c) >= delta) for c in candidates])
            repaired[k] = candidates[ok][np.argmin(np.abs(candidates[ok] - u))]
    return repaired


@dataclass
class SearchReport:
    """上确界搜索结果"""
    best_value: float
    best_instance: Optional[ApproxInstance]
    history: List[Tuple[int, int, float]]
    evaluations: int
    restarts: int
    c_cert: Optional[float]
    consistent: Optional[bool]
    certificate_applies: bool
    status: str  # ok / infeasible
    grid: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'best_value': self.best_value,
            'best_instance': None if self.best_instance is None else self.best_instance.to_dict(),
            'evaluations': self.evaluations,
            'restarts': self.restarts,
            'c_cert': self.c_cert,
            'consistent': self.consistent,
            'certificate_applies': self.certificate_applies,
            'status': self.status,
            'grid': dict(self.grid),
            'history_length': len(self.history),
        }


def _restart_stream(seed: int, restart: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(restart)])))


def search_sup(
    n: int,
    constraint: ClassConstraint,
    r: float,
    budget: int,
    seed: Optional[int] = None,
    window: Optional[float] = None,
    samples: Optional[int] = None,
) -> SearchReport:
    """
    随机重启 + 坐标下降，在约束类中搜索 ∫ f g 的下界

    第 0 次重启从常数种子 (a = b = 0, c_11 = 1) 出发，其余从 a, b ∈ [-5, 5]、C ∈ [-1, 1] 均匀抽样。
    每次求值先修复频率，再把 C 缩放到 sup|f| ≤ deflation，best_value 即缩放后实例的闭式配对值。
    """
    cfg = get_config_manager()
    settings = cfg.approx_settings
    seed = cfg.resolve_seed(seed)
    window = settings.window if window is None else window
    samples = settings.samples if samples is None else samples
    if budget < 1:
        raise InputError(f"budget 必须 ≥ 1: {budget}")
    if n < 1:
        raise InputError(f"n 必须 ≥ 1: {n}")

    evaluations = 0
    history: List[Tuple[int, int, float]] = []
    best_value = -math.inf
    best_instance: Optional[ApproxInstance] = None
    infeasible = False

    def evaluate(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> Tuple[float, Optional[ApproxInstance]]:
        nonlocal evaluations, infeasible
        evaluations += 1
        fixed = repair_frequencies(a, b, constraint)
        if not membership((fixed, b), constraint).member:
            infeasible = True
            return -math.inf, None
        inst = ApproxInstance.create(fixed, b, C, r)
        sup = sup_norm(inst, window, samples).value
        if sup <= 0.0:
            return -math.inf, None
        scaled = inst.with_coefficients(C * math.sqrt(settings.deflation / sup))
        return pairing_exact(expand(scaled), r), scaled

    restart = 0
    while evaluations < budget:
        if restart == 0:
            a = np.zeros(n)
            b = np.zeros(n)
            C = np.zeros((n, n))
            C[0, 0] = 1.0
        else:
            rng = _restart_stream(seed, restart)
            a = rng.uniform(-5.0, 5.0, n)
            b = rng.uniform(-5.0, 5.0, n)
            C = rng.uniform(-1.0, 1.0, (n, n))

        value, inst = evaluate(a, b, C)
        a = inst.a.copy() if inst is not None else a
        if value > best_value:
            best_value, best_instance = value, inst
        iteration = 0
        history.append((restart, iteration, best_value))

        steps = np.concatenate([np.full(2 * n, 0.5), np.full(n * n, 0.25)])
        stall = 0
        coord = 0
        while evaluations < budget and stall < settings.stall_limit and inst is not None:
            iteration += 1
            theta = np.concatenate([a, b, C.reshape(-1)])
            improved = False
            for sign in (1.0, -1.0):
                if evaluations >= budget:
                    break
                trial = theta.copy()
                trial[coord] += sign * steps[coord]
                ta, tb, tc = trial[:n], trial[n:2 * n], trial[2 * n:].reshape(n, n)
                t_value, t_inst = evaluate(ta, tb, tc)
                if t_value > value:
                    value, inst = t_value, t_inst
                    a, b, C = t_inst.a.copy(), tb.copy(), tc.copy()
                    improved = True
                    break
            if improved:
                stall = 0
            else:
                steps[coord] *= 0.5
                stall += 1
            if value > best_value:
                best_value, best_instance = value, inst
            history.append((restart, iteration, best_value))
            coord = (coord + 1) % steps.size
        logger.debug(f"重启 {restart} 结束: value={value!r}, best={best_value!r}")
        restart += 1

    bound = certified_improvement(n, r, 2.0 * constraint.delta, "right")
    applies = constraint.kind == "H"
    status = "infeasible" if best_instance is None else "ok"
    if infeasible and best_instance is None:
        logger.warning("⚠️ 约束不可满足")
    best = best_value if best_instance is not None else 0.0
    consistent = (best <= 1.0 - bound.c_cert + 1e-6) if applies else None
    logger.info(
        f"🔍 上确界搜索完成: kind={constraint.kind}, δ={constraint.delta}, best={best!r}, 求值 {evaluations} 次"
    )
    return SearchReport(
        best_value=best,
        best_instance=best_instance,
        history=history,
        evaluations=evaluations,
        restarts=restart,
        c_cert=bound.c_cert,
        consistent=consistent,
        certificate_applies=applies,
        status=status,
        grid={'window': window, 'samples': samples, 'deflation': settings.deflation},
    )


def pairing_profile(
    inst: Optional[ApproxInstance] = None,
    ys: Optional[Sequence[float]] = None,
) -> List[Tuple[float, float, float]]:
    """(y, Re f(y), g(y)) 剖面，默认 cos²(0.2y) 与 r = 1/2 的密度"""
    inst = cos2_example() if inst is None else inst
    grid = np.linspace(-30.0, 30.0, 601) if ys is None else np.asarray(ys, dtype=float)
    f_values = np.real(eval_f(inst, grid))
    g_values = kernel_density(inst.r, grid)
    return [(float(y), float(f), float(g)) for y, f, g in zip(grid, f_values, g_values)]
