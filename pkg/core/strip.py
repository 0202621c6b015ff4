"""
带形区域函数 - F(z) 在 0 ≤ Re z ≤ 1 上的求值、指数和展开、Poisson 重构与极大模检查

mcintosh: F(z) = ⟨A^{1-z} X B^z v, A^{1-z} X B^z v⟩_ℝ
cordes:   F(z) = ⟨A^z B^z v, A^z B^z v⟩_ℝ
配对是不取共轭的双线性形式，F 在带形内全纯。
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .config_manager import get_config_manager
from .errors import InputError, NormalizationError
from .inequalities import CordesInstance, McIntoshInstance
from .quadrature import adaptive_simpson
from .refinement import ExponentialSum, kernel_tail, poisson_kernel
from .spectral import ArrayLike, log_eigenvalues, operator_norm

logger = logging.getLogger(__name__)

Instance = Union[McIntoshInstance, CordesInstance]
_EDGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StripFunction:
    """归一化实例 + 单位向量 v"""
    instance: Instance
    v: np.ndarray
    mode: str
    # 在 A、B 特征基下的预计算量
    log_a: np.ndarray
    log_b: np.ndarray
    coupling: np.ndarray
    coeff_b: np.ndarray

    @classmethod
    def create(cls, instance: Instance, v: ArrayLike) -> "StripFunction":
        if not instance.normalized:
            raise NormalizationError("带形函数要求归一化实例")
        vec = np.array(v, dtype=float).reshape(-1)
        if vec.shape != (instance.n,):
            raise InputError(f"向量维度 {vec.shape} 与实例维度 {instance.n} 不匹配")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-8:
            raise InputError(f"v 必须是单位向量: ‖v‖ = {norm!r}")
        log_a = log_eigenvalues(instance.decomp_a)
        log_b = log_eigenvalues(instance.decomp_b)
        qa = instance.decomp_a.eigenvectors
        qb = instance.decomp_b.eigenvectors
        if isinstance(instance, McIntoshInstance):
            mode = "mcintosh"
            coupling = qa.T @ instance.X @ qb
        else:
            mode = "cordes"
            coupling = qa.T @ qb
        vec.setflags(write=False)
        return cls(instance, vec, mode, log_a, log_b, coupling, qb.T @ vec)

    def evaluate(self, z: Union[complex, np.ndarray]) -> Union[complex, np.ndarray]:
        zs = np.asarray(z, dtype=complex)
        flat = zs.reshape(-1)
        re = flat.real
        if np.any(re < -_EDGE_TOL) or np.any(re > 1.0 + _EDGE_TOL):
            raise InputError("z 必须位于带形 0 ≤ Re z ≤ 1 内")
        inner = (np.exp(np.outer(flat, self.log_b)) * self.coeff_b) @ self.coupling.T
        if self.mode == "mcintosh":
            outer = np.exp(np.outer(2.0 - 2.0 * flat, self.log_a))
        else:
            outer = np.exp(np.outer(2.0 * flat, self.log_a))
        values = np.sum(outer * inner * inner, axis=1)
        return complex(values[0]) if zs.ndim == 0 else values.reshape(zs.shape)

    def vector(self, z: complex) -> np.ndarray:
        """A^{1-z} X B^z v（或 A^z B^z v）在标准基下的坐标"""
        inner = self.coupling @ (np.exp(complex(z) * self.log_b) * self.coeff_b)
        power = (1.0 - complex(z)) if self.mode == "mcintosh" else complex(z)
        return self.instance.decomp_a.eigenvectors @ (np.exp(power * self.log_a) * inner)

    def interior_bound(self) -> float:
        """平凡上界 (max(‖A‖,1)·‖X‖·max(‖B‖,1))²"""
        a = max(self.instance.decomp_a.source_norm, 1.0)
        b = max(self.instance.decomp_b.source_norm, 1.0)
        x = operator_norm(self.instance.X).value if self.mode == "mcintosh" else 1.0
        return (a * x * b) ** 2


def eval_strip(fn: StripFunction, z: complex) -> complex:
    """F(z)"""
    return fn.evaluate(complex(z))


def expansion(fn: StripFunction, line: str = "left") -> ExponentialSum:
    """
    F 在边界线上的指数和展开（t ↦ F(it) 或 F(1+it)）

    按聚类投影分组：mcintosh 的频率族为 β_l + β_l' - 2α_k，
    cordes 为 2α_k + β_l + β_l'。
    """
    if line not in ("left", "right"):
        raise InputError(f"未知的边界线: {line}")
    inst = fn.instance
    da, db = inst.decomp_a, inst.decomp_b
    # 按 B 的聚类合并: h[k, m] = Σ_{l∈cluster m} coupling[k,l] coeff_b[l] (· μ_l 若在右边界)
    b_weights = fn.coeff_b.copy()
    if line == "right":
        b_weights = b_weights * np.exp(fn.log_b)
    h = np.column_stack([
        fn.coupling[:, list(cl.indices)] @ b_weights[list(cl.indices)] for cl in db.clusters
    ])
    beta = np.array([math.log(cl.value) for cl in db.clusters])

    coeffs: List[np.ndarray] = []
    freqs: List[np.ndarray] = []
    for cl in da.clusters:
        idx = list(cl.indices)
        alpha = math.log(cl.value)
        block = h[idx, :]
        # Σ_{k∈cluster} h_k,m h_k,m'
        gram = block.T @ block
        if fn.mode == "mcintosh":
            weight = math.exp(2.0 * alpha) if line == "left" else 1.0
            freq = beta[:, None] + beta[None, :] - 2.0 * alpha
        else:
            weight = 1.0 if line == "left" else math.exp(2.0 * alpha)
            freq = beta[:, None] + beta[None, :] + 2.0 * alpha
        coeffs.append((weight * gram).reshape(-1))
        freqs.append(freq.reshape(-1))
    return ExponentialSum.from_terms(np.concatenate(coeffs), np.concatenate(freqs))


def boundary_values(fn: StripFunction, ts: np.ndarray, line: str = "left") -> np.ndarray:
    x = 0.0 if line == "left" else 1.0
    return fn.evaluate(x + 1j * np.asarray(ts, dtype=float))


@dataclass
class StripGrid:
    """带形网格上的 F 值"""
    xs: np.ndarray
    ts: np.ndarray
    values: np.ndarray  # (len(xs), len(ts))

    @property
    def column_max(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)

    @property
    def boundary_max(self) -> float:
        mask = (self.xs <= _EDGE_TOL) | (self.xs >= 1.0 - _EDGE_TOL)
        return float(np.max(self.column_max[mask])) if np.any(mask) else float("nan")

    @property
    def interior_max(self) -> float:
        mask = (self.xs > _EDGE_TOL) & (self.xs < 1.0 - _EDGE_TOL)
        return float(np.max(self.column_max[mask])) if np.any(mask) else float("nan")

    def rows(self):
        """CSV 行 (re_z, im_z, re_F, im_F, abs_F)"""
        for i, x in enumerate(self.xs):
            for j, t in enumerate(self.ts):
                value = self.values[i, j]
                yield float(x), float(t), float(value.real), float(value.imag), float(abs(value))


def evaluate_grid(
    fn: StripFunction,
    xs: Optional[Sequence[float]] = None,
    ts: Optional[Sequence[float]] = None,
) -> StripGrid:
    settings = get_config_manager().strip_settings
    x_arr = np.linspace(0.0, 1.0, settings.x_points) if xs is None else np.asarray(xs, dtype=float)
    t_arr = np.linspace(-settings.t_max, settings.t_max, settings.t_points) if ts is None else np.asarray(ts, dtype=float)
    z = x_arr[:, None] + 1j * t_arr[None, :]
    return StripGrid(x_arr, t_arr, fn.evaluate(z))


@dataclass
class ReconstructionReport:
    """Poisson 重构结果"""
    z0: complex
    value: complex
    direct: complex
    error: float
    tail_bound: float
    quad_error: float
    weights: Dict[str, float]
    within_tolerance: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            'z0': [self.z0.real, self.z0.imag],
            'value': [self.value.real, self.value.imag],
            'direct': [self.direct.real, self.direct.imag],
            'error': self.error,
            'tail_bound': self.tail_bound,
            'quad_error': self.quad_error,
            'weights': dict(self.weights),
            'within_tolerance': self.within_tolerance,
        }


def poisson_reconstruct(
    fn: StripFunction,
    z0: complex,
    t_window: Optional[float] = None,
    quad_tol: Optional[float] = None,
) -> ReconstructionReport:
    """
    由两条边界线上的值重构 F(z0)

    映射 z → πz 后，Re z = 0 线上的密度为 P(πx0, π(t - y0))/2（质量 1 - x0），
    Re z = 1 线上为 P(π(1 - x0), π(t - y0))/2（质量 x0）。|t - y0| > t_window 的尾部用 |F| ≤ 1 界定。
    """
    settings = get_config_manager().strip_settings
    t_window = settings.t_window if t_window is None else t_window
    quad_tol = settings.reconstruct_tol if quad_tol is None else quad_tol
    z0 = complex(z0)
    x0, y0 = z0.real, z0.imag
    if not 0.0 < x0 < 1.0:
        raise InputError(f"z0 必须位于带形内部: {z0}")

    x_left = math.pi * x0
    x_right = math.pi * (1.0 - x0)

    def integrand(t: np.ndarray) -> np.ndarray:
        u = math.pi * (t - y0)
        left = 0.5 * poisson_kernel(x_left, u) * fn.evaluate(1j * t)
        right = 0.5 * poisson_kernel(x_right, u) * fn.evaluate(1.0 + 1j * t)
        return left + right

    def weight(t: np.ndarray) -> np.ndarray:
        u = math.pi * (t - y0)
        return 0.5 * (poisson_kernel(x_left, u) + poisson_kernel(x_right, u))

    quad = adaptive_simpson(integrand, y0 - t_window, y0 + t_window, tol=quad_tol * 0.5, vectorized=True)
    mass = adaptive_simpson(weight, y0 - t_window, y0 + t_window, tol=quad_tol * 0.5, vectorized=True)
    # 每条线两侧尾部（t 变量下质量除以 π）
    tail = (kernel_tail(x_left, math.pi * t_window) + kernel_tail(x_right, math.pi * t_window)) / math.pi
    direct = fn.evaluate(z0)
    value = complex(quad.value)
    error = abs(value - direct)
    within = error <= quad_tol + tail + quad.error
    if not within:
        logger.warning(f"⚠️ Poisson 重构误差 {error:.3e} 超过容差")
    return ReconstructionReport(
        z0=z0, value=value, direct=direct, error=error, tail_bound=tail, quad_error=quad.error,
        weights={'left': 1.0 - x0, 'right': x0, 'total_quadrature': float(mass.value) + tail},
        within_tolerance=bool(within),
    )


@dataclass
class ThreeLinesReport:
    """‖A^r X B^{1-r} v‖ ≤ sup_left^r · sup_right^{1-r} ≤ ‖AX‖^r ‖XB‖^{1-r}"""
    mid: float
    sup_left: float
    sup_right: float
    interpolated: float
    rhs: float
    chain_holds: bool
    refinement_shift: float
    refinement_flag: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _boundary_norms(inst: McIntoshInstance, v: np.ndarray, ts: np.ndarray) -> Dict[str, np.ndarray]:
    da, db = inst.decomp_a, inst.decomp_b
    qa, qb = da.eigenvectors, db.eigenvectors
    la, lb = log_eigenvalues(da), log_eigenvalues(db)
    coupling = qa.T @ inst.X @ qb
    cb = qb.T @ v
    # ‖A^{1+it} X B^{-it} v‖ 与 ‖A^{it} X B^{1-it} v‖，A^{it} 为酉矩阵
    phases = np.exp(-1j * np.outer(ts, lb))
    left = (phases * cb) @ coupling.T * np.exp(la)
    right = (phases * (cb * np.exp(lb))) @ coupling.T
    return {
        'left': np.linalg.norm(left, axis=1),
        'right': np.linalg.norm(right, axis=1),
    }


def three_lines_bounds(
    inst: McIntoshInstance,
    v: ArrayLike,
    r: Optional[float] = None,
    t_grid: Optional[Sequence[float]] = None,
    tol: float = 1e-9,
) -> ThreeLinesReport:
    """三线定理链，并以加倍网格检查上确界的稳定性"""
    if not inst.normalized:
        raise NormalizationError("三线链要求归一化实例")
    r = inst.r if r is None else r
    vec = np.asarray(v, dtype=float)
    ts = np.linspace(-40.0, 40.0, 400) if t_grid is None else np.asarray(t_grid, dtype=float)

    mid = float(np.linalg.norm(inst.operator(r) @ vec))
    norms = _boundary_norms(inst, vec, ts)
    sup_left = float(np.max(norms['left']))
    sup_right = float(np.max(norms['right']))
    interpolated = sup_left ** r * sup_right ** (1.0 - r)
    ax = operator_norm(inst.A @ inst.X).value
    xb = operator_norm(inst.X @ inst.B).value
    rhs = ax ** r * xb ** (1.0 - r)

    fine = np.linspace(ts[0], ts[-1], 2 * len(ts) - 1)
    fine_norms = _boundary_norms(inst, vec, fine)
    shift = max(
        float(np.max(fine_norms['left'])) - sup_left,
        float(np.max(fine_norms['right'])) - sup_right,
    )
    chain = mid <= interpolated + tol and interpolated <= rhs + tol
    return ThreeLinesReport(mid, sup_left, sup_right, interpolated, rhs, bool(chain), shift, shift > 1e-6)


@dataclass
class MaxPrincipleReport:
    """极大模检查"""
    interior_max: float
    boundary_max: float
    argmax: complex
    verdict: str  # constant-one / strict / inconsistent
    interior_dominated: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            'interior_max': self.interior_max,
            'boundary_max': self.boundary_max,
            'argmax': [self.argmax.real, self.argmax.imag],
            'verdict': self.verdict,
            'interior_dominated': self.interior_dominated,
        }


def max_principle_probe(fn: StripFunction, grid: Optional[StripGrid] = None) -> MaxPrincipleReport:
    """内部 |F| 触及 1 时 F 应在网格上恒为 1"""
    grid = evaluate_grid(fn) if grid is None else grid
    interior = (grid.xs > _EDGE_TOL) & (grid.xs < 1.0 - _EDGE_TOL)
    block = np.abs(grid.values[interior])
    i, j = np.unravel_index(np.argmax(block), block.shape)
    x_int = grid.xs[interior]
    argmax = complex(x_int[i], grid.ts[j])
    interior_max = float(block[i, j])
    boundary_max = grid.boundary_max

    if interior_max >= 1.0 - 1e-9:
        constant = bool(np.all(np.abs(grid.values - 1.0) <= 1e-7))
        verdict = "constant-one" if constant else "inconsistent"
        if not constant:
            logger.warning("⚠️ 内部达到 1 但 F 不是常数 1")
    else:
        verdict = "strict"
    return MaxPrincipleReport(interior_max, boundary_max, argmax, verdict, interior_max <= boundary_max + 1e-8)


@dataclass
class HolomorphyReport:
    """离散 Cauchy–Riemann 残差在 h 与 h/2 下的比值"""
    h: float
    residual_h: float
    residual_half: float
    ratio: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def cauchy_riemann_residuals(
    fn: StripFunction,
    points: Optional[Sequence[complex]] = None,
    h: float = 1e-2,
) -> HolomorphyReport:
    """|∂F/∂x + i ∂F/∂y| 的中心差分，截断误差为 O(h²)"""
    if points is None:
        xs = np.linspace(0.2, 0.8, 4)
        ts = np.linspace(-3.0, 3.0, 5)
        points = (xs[:, None] + 1j * ts[None, :]).reshape(-1)
    z = np.asarray(points, dtype=complex)

    def residual(step: float) -> float:
        dx = (fn.evaluate(z + step) - fn.evaluate(z - step)) / (2.0 * step)
        dy = (fn.evaluate(z + 1j * step) - fn.evaluate(z - 1j * step)) / (2.0 * step)
        return float(np.max(np.abs(dx + 1j * dy)))

    coarse = residual(h)
    fine = residual(h / 2.0)
    ratio = coarse / fine if fine > 0 else None
    return HolomorphyReport(h, coarse, fine, ratio)
