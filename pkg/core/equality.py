"""
等号情形分析 - 公共特征值检测、谱投影映射条件与等号在指数间的传递
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from .config_manager import get_config_manager
from .errors import InputError, NormalizationError
from .inequalities import CordesInstance, McIntoshInstance
from .spectral import ArrayLike, SpectralDecomposition, operator_norm, spectral_projector

logger = logging.getLogger(__name__)

Instance = Union[McIntoshInstance, CordesInstance]

DEFAULT_EXPONENT_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class CommonEigenvalue:
    """λ_i ∈ σ(A) 与 μ_j ∈ σ(B) 在容差内相等"""
    lam: float
    mu: float
    distance: float
    cluster_a: int
    cluster_b: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            'lambda': self.lam,
            'mu': self.mu,
            'distance': self.distance,
            'cluster_a': self.cluster_a,
            'cluster_b': self.cluster_b,
        }


@dataclass
class ClusterRecord:
    """B 的一个特征值聚类上的检查结果"""
    mu: float
    target: float
    proj_norm: float
    visible: bool
    is_eigvec: bool
    achieved_eigenvalue: Optional[float]
    residual: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class EqualityVerdict:
    """等号特征刻画的逐聚类判定"""
    mode: str
    clusters: List[ClusterRecord]
    common_eigenvalues: List[CommonEigenvalue]
    achieved: float
    near_equality: bool
    overall: str  # consistent-with-equality / inconsistent
    tol: float
    notes: List[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.overall == "consistent-with-equality"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mode': self.mode,
            'clusters': [c.to_dict() for c in self.clusters],
            'common_eigenvalues': [c.to_dict() for c in self.common_eigenvalues],
            'achieved': self.achieved,
            'near_equality': self.near_equality,
            'overall': self.overall,
            'tol': self.tol,
            'notes': list(self.notes),
        }


def _match_clusters(
    values_a: Sequence[float],
    values_b: Sequence[float],
    tol: float,
) -> List[CommonEigenvalue]:
    pairs: List[CommonEigenvalue] = []
    for i, lam in enumerate(values_a):
        for j, mu in enumerate(values_b):
            distance = abs(lam - mu)
            if distance <= tol * max(1.0, abs(lam), abs(mu)):
                pairs.append(CommonEigenvalue(float(lam), float(mu), float(distance), i, j))
    return pairs


def find_common_eigenvalues(
    DA: SpectralDecomposition,
    DB: SpectralDecomposition,
    tol: Optional[float] = None,
) -> List[CommonEigenvalue]:
    """按聚类去重的公共特征值 |λ_i - μ_j| ≤ tol·max(1, |λ_i|, |μ_j|)"""
    tol = get_config_manager().numerics_settings.cluster_rel_tol if tol is None else tol
    return _match_clusters(
        [c.value for c in DA.clusters],
        [c.value for c in DB.clusters],
        tol,
    )


def _unit_vector(v: ArrayLike, n: int) -> np.ndarray:
    vec = np.asarray(v, dtype=float).reshape(-1)
    if vec.size != n:
        raise InputError(f"向量维度 {vec.size} 与实例维度 {n} 不一致")
    norm = float(np.linalg.norm(vec))
    if abs(norm - 1.0) > 1e-9:
        raise InputError(f"v 必须是单位向量: ‖v‖ = {norm!r}")
    return vec


def _require_normalized(inst: Instance) -> None:
    if inst.normalized:
        return
    if isinstance(inst, McIntoshInstance):
        norms = (operator_norm(inst.A @ inst.X).value, operator_norm(inst.X @ inst.B).value)
    else:
        norms = (operator_norm(inst.A @ inst.B).value,)
    if any(abs(x - 1.0) > 1e-9 for x in norms):
        raise NormalizationError(f"等号分析需要归一化实例, 实际范数 {norms}")


def _cluster_records(
    A: np.ndarray,
    DB: SpectralDecomposition,
    vectors: Sequence[np.ndarray],
    targets: Sequence[float],
    tol: float,
    visibility: float,
) -> List[ClusterRecord]:
    records = []
    for cluster, w, target in zip(DB.clusters, vectors, targets):
        w_norm = float(np.linalg.norm(w))
        visible = w_norm > visibility
        if visible and not math.isfinite(target):
            residual, achieved, is_eigvec = math.inf, None, False
        elif visible:
            Aw = A @ w
            residual = float(np.linalg.norm(Aw - target * w) / w_norm)
            achieved = float(w @ Aw / (w @ w))
            is_eigvec = residual <= tol
        else:
            residual, achieved, is_eigvec = 0.0, None, False
        records.append(ClusterRecord(float(cluster.value), float(target), w_norm, visible, is_eigvec, achieved, residual))
    return records


def _verdict(
    mode: str,
    records: List[ClusterRecord],
    common: List[CommonEigenvalue],
    achieved: float,
    tol: float,
) -> EqualityVerdict:
    near = achieved >= 1.0 - get_config_manager().numerics_settings.near_equality
    visible = [r for r in records if r.visible]
    passing = bool(visible) and all(r.is_eigvec for r in visible)
    overall = "consistent-with-equality" if passing else "inconsistent"
    notes: List[str] = []
    if not near:
        notes.append(f"达到值 {achieved!r} < 1 - near_equality, 判定仅作报告")
    if passing and near and not common:
        notes.append("逐聚类检查通过但未检测到公共特征值")
        logger.warning("⚠️ 等号判定一致但未找到公共特征值")
    return EqualityVerdict(mode, records, common, achieved, near, overall, tol, notes)


def analyze_mcintosh_equality(inst: McIntoshInstance, v: ArrayLike, tol: Optional[float] = None) -> EqualityVerdict:
    """
    对 B 的每个聚类 μ：w = Xπ_μ v，若 w 可见则检查 Aw = μw

    可见阈值 ‖w‖ > visibility_rel_tol·‖X‖，残差容差默认 equality_rel_tol·max(1, ‖A‖)。
    """
    _require_normalized(inst)
    settings = get_config_manager().numerics_settings
    vec = _unit_vector(v, inst.n)
    norm_a = operator_norm(inst.A).value
    tol = settings.equality_rel_tol * max(1.0, norm_a) if tol is None else tol
    visibility = settings.visibility_rel_tol * operator_norm(inst.X).value

    DB = inst.decomp_b
    vectors = [inst.X @ (spectral_projector(DB, c.index) @ vec) for c in DB.clusters]
    records = _cluster_records(inst.A, DB, vectors, [c.value for c in DB.clusters], tol, visibility)
    common = find_common_eigenvalues(inst.decomp_a, DB)
    achieved = float(np.linalg.norm(inst.operator() @ vec))
    verdict = _verdict("mcintosh", records, common, achieved, tol)
    logger.debug(f"McIntosh 等号分析: {verdict.overall}, achieved={achieved!r}")
    return verdict


def analyze_cordes_equality(inst: CordesInstance, v: ArrayLike, tol: Optional[float] = None) -> EqualityVerdict:
    """对 B 的每个聚类 μ：w = π_μ v，若 w 可见则检查 Aw = (1/μ)w"""
    _require_normalized(inst)
    settings = get_config_manager().numerics_settings
    vec = _unit_vector(v, inst.n)
    norm_a = operator_norm(inst.A).value
    tol = settings.equality_rel_tol * max(1.0, norm_a) if tol is None else tol
    visibility = settings.visibility_rel_tol

    DB = inst.decomp_b
    targets = [1.0 / c.value if c.value > 0 else math.inf for c in DB.clusters]
    vectors = [spectral_projector(DB, c.index) @ vec for c in DB.clusters]
    records = _cluster_records(inst.A, DB, vectors, targets, tol, visibility)
    # 与 B^{-1} 的公共特征值
    common = [
        CommonEigenvalue(p.lam, 1.0 / p.mu, p.distance, p.cluster_a, p.cluster_b)
        for p in _match_clusters(
            [c.value for c in inst.decomp_a.clusters],
            [t if math.isfinite(t) else math.nan for t in targets],
            settings.cluster_rel_tol,
        )
    ]
    achieved = float(np.linalg.norm(inst.operator() @ vec))
    return _verdict("cordes", records, common, achieved, tol)


@dataclass
class TransferReport:
    """等号在指数网格上的传递"""
    mode: str
    base_exponent: float
    base_value: float
    exponents: List[float]
    values: List[float]
    max_deviation: Optional[float]
    tol: float
    status: str  # transfers / fails / not-an-equality-instance

    @property
    def holds(self) -> bool:
        return self.status == "transfers"

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def _norm_at(inst: Instance, exponent: float, vec: np.ndarray) -> float:
    return float(np.linalg.norm(inst.operator(exponent) @ vec))


def equality_transfer_check(
    inst: Instance,
    v: ArrayLike,
    exponent_grid: Optional[Sequence[float]] = None,
    tol: Optional[float] = None,
) -> TransferReport:
    """若在给定指数处 ‖Op v‖ = 1，则对网格上每个指数 ‖Op v‖ = 1（容差 10·tol）"""
    _require_normalized(inst)
    tol = get_config_manager().numerics_settings.near_equality if tol is None else tol
    grid = list(DEFAULT_EXPONENT_GRID if exponent_grid is None else exponent_grid)
    for s in grid:
        if not 0.0 < s < 1.0:
            raise InputError(f"指数网格必须位于 (0, 1): {s}")
    vec = _unit_vector(v, inst.n)
    mode = "mcintosh" if isinstance(inst, McIntoshInstance) else "cordes"
    base = inst.r if mode == "mcintosh" else inst.s
    base_value = _norm_at(inst, base, vec)

    if abs(base_value - 1.0) > tol:
        logger.info(f"ℹ️ 基准值 {base_value!r} 不是等号: 跳过传递检查")
        return TransferReport(mode, base, base_value, grid, [], None, tol, "not-an-equality-instance")

    values = [_norm_at(inst, s, vec) for s in grid]
    deviation = max(abs(x - 1.0) for x in values) if values else 0.0
    status = "transfers" if deviation <= 10.0 * tol else "fails"
    if status == "fails":
        logger.error(f"❌ 等号传递失败: 最大偏差 {deviation!r}")
    return TransferReport(mode, base, base_value, grid, values, deviation, tol, status)


def extremal_vector(inst: Instance, exponent: Optional[float] = None) -> np.ndarray:
    """算子的最大右奇异向量；顶部奇异值重复时取下标最小者"""
    witness = operator_norm(inst.operator(exponent)).witness
    return np.asarray(np.real(witness), dtype=float)

