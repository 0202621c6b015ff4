"""
算子范数不等式求值 - McIntosh / Fujii–Furuta / Cordes / Heinz–Kato / Löwner–Heinz

每个 evaluate_* 返回 InequalityReport，包含两侧数值、比值、松弛量和达到左侧范数的见证向量。
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional, Union

import numpy as np

from .config_manager import get_config_manager
from .errors import DegenerateInstanceError, InputError
from .spectral import (
    ArrayLike,
    SpectralDecomposition,
    ensure_decomposition,
    min_eigenvalue,
    operator_norm,
    psd_order,
    real_power,
    scale_decomposition,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class McIntoshInstance:
    """(A, X, B, r)，A、B 对称半正定，X 任意"""
    decomp_a: SpectralDecomposition
    X: np.ndarray
    decomp_b: SpectralDecomposition
    r: float
    normalized: bool = False

    @classmethod
    def from_matrices(
        cls,
        A: Union[ArrayLike, SpectralDecomposition],
        X: ArrayLike,
        B: Union[ArrayLike, SpectralDecomposition],
        r: float,
        normalized: bool = False,
    ) -> "McIntoshInstance":
        da = ensure_decomposition(A, "A")
        db = ensure_decomposition(B, "B")
        x = np.array(X, dtype=float)
        if x.shape != (da.n, db.n) or da.n != db.n:
            raise InputError(f"维度不匹配: A {da.n}, X {x.shape}, B {db.n}")
        if not np.all(np.isfinite(x)):
            raise InputError("X 含有非有限元素")
        x.setflags(write=False)
        return cls(da, x, db, float(r), normalized)

    @property
    def A(self) -> np.ndarray:
        return self.decomp_a.source

    @property
    def B(self) -> np.ndarray:
        return self.decomp_b.source

    @property
    def n(self) -> int:
        return self.decomp_a.n

    def with_exponent(self, r: float) -> "McIntoshInstance":
        return McIntoshInstance(self.decomp_a, self.X, self.decomp_b, float(r), self.normalized)

    def adjoint(self) -> "McIntoshInstance":
        """(B, X^T, A, 1-r)：‖A^r X B^{1-r}‖ = ‖B^{1-r} X^T A^r‖"""
        xt = np.array(self.X.T)
        xt.setflags(write=False)
        return McIntoshInstance(self.decomp_b, xt, self.decomp_a, 1.0 - self.r, self.normalized)

    def operator(self, r: Optional[float] = None) -> np.ndarray:
        """A^r X B^{1-r}"""
        r = self.r if r is None else r
        return real_power(self.decomp_a, r) @ self.X @ real_power(self.decomp_b, 1.0 - r)


@dataclass(frozen=True, eq=False)
class CordesInstance:
    """(A, B, s)"""
    decomp_a: SpectralDecomposition
    decomp_b: SpectralDecomposition
    s: float
    normalized: bool = False

    @classmethod
    def from_matrices(
        cls,
        A: Union[ArrayLike, SpectralDecomposition],
        B: Union[ArrayLike, SpectralDecomposition],
        s: float,
        normalized: bool = False,
    ) -> "CordesInstance":
        da = ensure_decomposition(A, "A")
        db = ensure_decomposition(B, "B")
        if da.n != db.n:
            raise InputError(f"维度不匹配: A {da.n}, B {db.n}")
        return cls(da, db, float(s), normalized)

    @property
    def A(self) -> np.ndarray:
        return self.decomp_a.source

    @property
    def B(self) -> np.ndarray:
        return self.decomp_b.source

    @property
    def n(self) -> int:
        return self.decomp_a.n

    def with_exponent(self, s: float) -> "CordesInstance":
        return CordesInstance(self.decomp_a, self.decomp_b, float(s), self.normalized)

    def adjoint(self) -> "CordesInstance":
        """(B, A, s)：‖A^s B^s‖ = ‖B^s A^s‖"""
        return CordesInstance(self.decomp_b, self.decomp_a, self.s, self.normalized)

    def operator(self, s: Optional[float] = None) -> np.ndarray:
        """A^s B^s"""
        s = self.s if s is None else s
        return real_power(self.decomp_a, s) @ real_power(self.decomp_b, s)


@dataclass
class InequalityReport:
    """一次不等式求值的结果"""
    name: str
    lhs: float
    rhs: float
    ratio: Optional[float]
    slack: float
    witness: Optional[np.ndarray]
    status: str  # holds / violated / trivial / hypotheses-unmet / precondition-unmet
    notes: List[str] = field(default_factory=list)
    parameters: Dict[str, Any] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status in ("holds", "trivial")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'ratio': self.ratio,
            'slack': self.slack,
            'witness': None if self.witness is None else [float(x) for x in np.real(self.witness)],
            'status': self.status,
            'notes': list(self.notes),
            'parameters': dict(self.parameters),
        }


def _finish(name: str, lhs: float, rhs: float, witness, parameters: Dict[str, Any], tol: Optional[float] = None) -> InequalityReport:
    tol = get_config_manager().numerics_settings.inequality_tol if tol is None else tol
    notes: List[str] = []
    if rhs <= 0.0:
        status = "trivial"
        ratio = None
        notes.append("右侧为 0, 不等式平凡成立")
    else:
        ratio = lhs / rhs
        status = "holds" if ratio <= 1.0 + tol else "violated"
        if status == "violated":
            logger.error(f"❌ {name} 不等式被违反: ratio={ratio!r}")
    return InequalityReport(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        ratio=ratio,
        slack=float(rhs - lhs),
        witness=witness,
        status=status,
        notes=notes,
        parameters=parameters,
    )


def normalize_mcintosh(inst: McIntoshInstance) -> McIntoshInstance:
    """A' = A/‖AX‖, B' = B/‖XB‖"""
    c1 = operator_norm(inst.A @ inst.X).value
    c2 = operator_norm(inst.X @ inst.B).value
    if c1 == 0.0 or c2 == 0.0:
        raise DegenerateInstanceError(f"‖AX‖={c1!r}, ‖XB‖={c2!r}: 不等式退化为 0 ≤ 0")
    return McIntoshInstance(
        scale_decomposition(inst.decomp_a, 1.0 / c1),
        inst.X,
        scale_decomposition(inst.decomp_b, 1.0 / c2),
        inst.r,
        normalized=True,
    )


def normalize_cordes(inst: CordesInstance) -> CordesInstance:
    """A' = A/‖AB‖"""
    c = operator_norm(inst.A @ inst.B).value
    if c == 0.0:
        raise DegenerateInstanceError("‖AB‖ = 0: 不等式退化为 0 ≤ 0")
    return CordesInstance(scale_decomposition(inst.decomp_a, 1.0 / c), inst.decomp_b, inst.s, normalized=True)


def _check_exponent(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise InputError(f"{name} 必须位于 [0, 1]: {value}")


def evaluate_mcintosh(inst: McIntoshInstance, tol: Optional[float] = None) -> InequalityReport:
    """‖A^r X B^{1-r}‖ ≤ ‖AX‖^r ‖XB‖^{1-r}"""
    _check_exponent(inst.r, "r")
    lhs = operator_norm(inst.operator())
    ax = operator_norm(inst.A @ inst.X).value
    xb = operator_norm(inst.X @ inst.B).value
    rhs = ax ** inst.r * xb ** (1.0 - inst.r)
    return _finish(
        "mcintosh", lhs.value, rhs, lhs.witness,
        {'r': inst.r, 'n': inst.n, 'norm_ax': ax, 'norm_xb': xb}, tol,
    )


def evaluate_fujii_furuta(A: ArrayLike, X: ArrayLike, B: ArrayLike, tol: Optional[float] = None) -> InequalityReport:
    """‖AXB‖ ≤ ‖A²X‖^{1/2} ‖XB²‖^{1/2}，即 (A², X, B², 1/2) 的 McIntosh 不等式"""
    da = ensure_decomposition(A, "A")
    db = ensure_decomposition(B, "B")
    relabeled = McIntoshInstance.from_matrices(real_power(da, 2.0), X, real_power(db, 2.0), 0.5)
    report = evaluate_mcintosh(relabeled, tol)
    report.name = "fujii-furuta"
    report.parameters = {'n': relabeled.n}
    return report


def evaluate_cordes(inst: CordesInstance, tol: Optional[float] = None) -> InequalityReport:
    """‖A^s B^s‖ ≤ ‖AB‖^s"""
    _check_exponent(inst.s, "s")
    lhs = operator_norm(inst.operator())
    ab = operator_norm(inst.A @ inst.B).value
    rhs = ab ** inst.s
    return _finish("cordes", lhs.value, rhs, lhs.witness, {'s': inst.s, 'n': inst.n, 'norm_ab': ab}, tol)


def _probe_vectors(n: int, extra: List[np.ndarray], count: int = 100) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([n, count])))
    probes = rng.standard_normal((count, n))
    probes /= np.linalg.norm(probes, axis=1, keepdims=True)
    rows = [p / np.linalg.norm(p) for p in extra if np.linalg.norm(p) > 0]
    return np.vstack(rows + [probes]) if rows else probes


def evaluate_heinz_kato(
    T: ArrayLike,
    A: Union[ArrayLike, SpectralDecomposition],
    B: Union[ArrayLike, SpectralDecomposition],
    alpha: float,
    x: ArrayLike,
    y: ArrayLike,
    tol: Optional[float] = None,
) -> InequalityReport:
    """
    |⟨Tx, y⟩| ≤ ‖A^α x‖ ‖B^{1-α} y‖

    假设 ‖Tv‖ ≤ ‖Av‖、‖T^T w‖ ≤ ‖Bw‖ 精确地检查为 T^T T ≤ A²、T T^T ≤ B²，
    随机探针作为快速预筛。
    """
    _check_exponent(alpha, "alpha")
    da = ensure_decomposition(A, "A")
    db = ensure_decomposition(B, "B")
    t = np.array(T, dtype=float)
    xv = np.array(x, dtype=float)
    yv = np.array(y, dtype=float)
    n = da.n
    if t.shape != (n, n) or db.n != n or xv.shape != (n,) or yv.shape != (n,):
        raise InputError(f"维度不匹配: T {t.shape}, A {n}, B {db.n}, x {xv.shape}, y {yv.shape}")

    settings = get_config_manager().numerics_settings
    a2 = real_power(da, 2.0)
    b2 = real_power(db, 2.0)
    scale = max(1.0, da.source_norm, db.source_norm) ** 2
    hyp_tol = settings.inequality_tol * scale

    notes: List[str] = []
    probes = _probe_vectors(n, [xv, yv])
    prefilter = (
        np.all(np.linalg.norm(probes @ t.T, axis=1) <= np.linalg.norm(probes @ da.source.T, axis=1) * (1 + 1e-9) + 1e-12)
        and np.all(np.linalg.norm(probes @ t, axis=1) <= np.linalg.norm(probes @ db.source.T, axis=1) * (1 + 1e-9) + 1e-12)
    )
    hypotheses = bool(prefilter) and psd_order(a2, t.T @ t, hyp_tol) and psd_order(b2, t @ t.T, hyp_tol)

    lhs = abs(float(np.dot(t @ xv, yv)))
    rhs = float(np.linalg.norm(real_power(da, alpha) @ xv) * np.linalg.norm(real_power(db, 1.0 - alpha) @ yv))
    params = {'alpha': alpha, 'n': n, 'hypotheses_verified': hypotheses}
    if not hypotheses:
        notes.append("假设 ‖Tv‖ ≤ ‖Av‖ 或 ‖T^T w‖ ≤ ‖Bw‖ 不成立, 不作断言")
        logger.warning("⚠️ Heinz–Kato 假设不满足")
        return InequalityReport(
            "heinz-kato", lhs, rhs, lhs / rhs if rhs > 0 else None, rhs - lhs, None,
            "hypotheses-unmet", notes, params,
        )
    return _finish("heinz-kato", lhs, rhs, None, params, tol)


@dataclass
class LoewnerHeinzReport:
    """A ≥ B ≥ 0 ⟹ A^α ≥ B^α"""
    alpha: float
    holds: Optional[bool]
    min_eigenvalue: Optional[float]
    status: str  # holds / violated / precondition-unmet
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': 'loewner-heinz',
            'alpha': self.alpha,
            'holds': self.holds,
            'min_eigenvalue': self.min_eigenvalue,
            'status': self.status,
            'notes': list(self.notes),
        }


def evaluate_loewner_heinz(
    A: Union[ArrayLike, SpectralDecomposition],
    B: Union[ArrayLike, SpectralDecomposition],
    alpha: float,
    tol: float = 1e-8,
) -> LoewnerHeinzReport:
    """检查 A^α - B^α 的最小特征值 ≥ -tol"""
    _check_exponent(alpha, "alpha")
    da = ensure_decomposition(A, "A")
    db = ensure_decomposition(B, "B")
    pre_tol = get_config_manager().numerics_settings.inequality_tol * max(1.0, da.source_norm)
    if db.status() == "indefinite" or not psd_order(da, db, pre_tol):
        logger.warning("⚠️ Löwner–Heinz 前提 A ≥ B ≥ 0 不满足")
        return LoewnerHeinzReport(alpha, None, None, "precondition-unmet", ["前提 A ≥ B ≥ 0 不满足, 不作断言"])
    diff = real_power(da, alpha) - real_power(db, alpha)
    lam = min_eigenvalue(diff)
    holds = lam >= -tol
    if not holds:
        logger.error(f"❌ Löwner–Heinz 被违反: λ_min(A^α - B^α) = {lam!r}")
    return LoewnerHeinzReport(alpha, holds, lam, "holds" if holds else "violated")


@dataclass
class WorkedExample:
    """diag(a,0), I, diag(1,b) 实例及闭式两侧"""
    instance: McIntoshInstance
    expected_lhs: float
    expected_rhs: float


def worked_example(a: float, b: float, r: float) -> WorkedExample:
    """
    A = diag(a, 0), X = I, B = diag(1, b)

    lhs = a^r，rhs = a^r · max(1, b^{1-r})；b ≤ 1 时等号成立。
    """
    inst = McIntoshInstance.from_matrices(np.diag([a, 0.0]), np.eye(2), np.diag([1.0, b]), r)
    return WorkedExample(inst, a ** r, a ** r * max(1.0, b ** (1.0 - r)))
