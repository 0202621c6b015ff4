"""
谱计算模块 - 对称矩阵的特征分解、谱聚类、实/复矩阵幂、算子范数与谱投影

所有返回值在构造后不可变，函数都是输入的纯函数。
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union, Sequence

import numpy as np

from .config_manager import get_config_manager
from .errors import (
    ConvergenceError,
    InputError,
    PsdOnlyError,
    SPDViolationError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Sequence[Sequence[float]]]


@dataclass(frozen=True)
class SpectralCluster:
    """一组（在容差内）相等的特征值"""
    index: int
    indices: Tuple[int, ...]
    value: float

    @property
    def multiplicity(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class SpectralDecomposition:
    """
    对称矩阵 M = Q diag(λ) Q^T 的分解

    eigenvalues 升序，eigenvectors 的列为正交特征向量。
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    clusters: Tuple[SpectralCluster, ...]
    source_norm: float
    cluster_tol: float
    source: np.ndarray
    sweeps: int = 0

    @property
    def n(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    def default_floor(self) -> float:
        rel = get_config_manager().numerics_settings.spd_floor_rel
        return rel * max(1.0, self.source_norm)

    def status(self, floor: Optional[float] = None) -> str:
        """返回 'spd' / 'psd-only' / 'indefinite'"""
        floor = self.default_floor() if floor is None else floor
        if self.min_eigenvalue >= floor:
            return "spd"
        if self.min_eigenvalue >= -floor:
            return "psd-only"
        return "indefinite"

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


@dataclass(frozen=True)
class NormResult:
    """算子范数及达到范数的单位见证向量"""
    value: float
    witness: np.ndarray


def as_symmetric(M: ArrayLike, tol: float = 1e-8, name: str = "matrix") -> np.ndarray:
    """检查对称性并精确对称化，非对称超过 tol·max(1,‖M‖_max) 时报错"""
    arr = np.array(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise InputError(f"{name} 必须是非空方阵, 实际形状 {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} 含有非有限元素")
    scale = max(1.0, float(np.max(np.abs(arr))))
    asym = float(np.max(np.abs(arr - arr.T)))
    if asym > tol * scale:
        raise InputError(f"{name} 不对称: max|M - M^T| = {asym:.3e}")
    return 0.5 * (arr + arr.T)


def jacobi_eigh(
    M: np.ndarray,
    max_sweeps: int = 100,
    offdiag_rel_tol: float = 1e-14,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    循环 Jacobi 旋转对角化（固定扫描顺序 (0,1),(0,2),...,(n-2,n-1)）

    Returns:
        (未排序的特征值, 特征向量矩阵, 使用的扫描轮数)
    """
    A = np.array(M, dtype=float, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    scale = float(np.linalg.norm(A))
    if n == 1 or scale == 0.0:
        return np.diag(A).copy(), V, 0

    threshold = offdiag_rel_tol * scale
    off = 0.0
    for sweep in range(1, max_sweeps + 1):
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                sign = 1.0 if theta >= 0.0 else -1.0
                t = sign / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0

                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq

        off = float(np.sqrt(np.sum(A * A) - np.sum(np.diag(A) ** 2)))
        logger.debug(f"Jacobi 第 {sweep} 轮: off={off:.3e}")
        if off <= threshold:
            return np.diag(A).copy(), V, sweep

    raise ConvergenceError("Jacobi 特征值迭代未收敛", residual=off, sweeps=max_sweeps)


def _cluster(eigenvalues: np.ndarray, tol: float) -> Tuple[SpectralCluster, ...]:
    groups = []
    current = [0]
    for i in range(1, len(eigenvalues)):
        if eigenvalues[i] - eigenvalues[i - 1] > tol:
            groups.append(current)
            current = [i]
        else:
            current.append(i)
    groups.append(current)

    clusters = []
    for k, idx in enumerate(groups):
        values = eigenvalues[idx]
        spread = float(values[-1] - values[0])
        if spread > tol:
            logger.warning(f"谱聚类 {k} 的跨度 {spread:.3e} 超过容差 {tol:.3e}")
        clusters.append(SpectralCluster(index=k, indices=tuple(idx), value=float(np.mean(values))))
    return tuple(clusters)


def eigendecompose(
    M: ArrayLike,
    cluster_tol: Optional[float] = None,
    solver: Optional[str] = None,
) -> SpectralDecomposition:
    """
    对称矩阵特征分解

    Args:
        M: 对称矩阵（调用方负责对称化，见 as_symmetric）
        cluster_tol: 聚类容差，默认 cluster_rel_tol · max(1, ‖M‖)
        solver: 'jacobi' 或 'lapack'，默认取配置

    Returns:
        SpectralDecomposition
    """
    settings = get_config_manager().numerics_settings
    arr = np.array(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise InputError(f"特征分解需要方阵, 实际形状 {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("特征分解的输入含有非有限元素")
    if not np.array_equal(arr, arr.T):
        raise InputError("特征分解的输入必须精确对称")
    if cluster_tol is not None and cluster_tol <= 0:
        raise InputError(f"cluster_tol 必须为正: {cluster_tol}")

    solver = solver or settings.eigensolver
    if solver == "lapack":
        w, V = np.linalg.eigh(arr)
        sweeps = 0
    elif solver == "jacobi":
        w, V, sweeps = jacobi_eigh(arr, settings.max_sweeps, settings.offdiag_rel_tol)
    else:
        raise InputError(f"未知的特征值求解器: {solver}")

    order = np.argsort(w, kind="stable")
    w = w[order]
    V = V[:, order]
    # 符号规范化：每列绝对值最大分量为正
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivots, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    V = V * signs

    source_norm = float(np.max(np.abs(w))) if w.size else 0.0
    tol = cluster_tol if cluster_tol is not None else settings.cluster_rel_tol * max(1.0, source_norm)

    w.setflags(write=False)
    V.setflags(write=False)
    source = arr.copy()
    source.setflags(write=False)
    return SpectralDecomposition(
        eigenvalues=w,
        eigenvectors=V,
        clusters=_cluster(w, tol),
        source_norm=source_norm,
        cluster_tol=tol,
        source=source,
        sweeps=sweeps,
    )


def scale_decomposition(D: SpectralDecomposition, c: float) -> SpectralDecomposition:
    """c·M 的分解（c > 0），特征向量和聚类结构不变"""
    if not c > 0:
        raise InputError(f"缩放因子必须为正: {c}")
    w = D.eigenvalues * c
    w.setflags(write=False)
    source = D.source * c
    source.setflags(write=False)
    clusters = tuple(
        SpectralCluster(index=cl.index, indices=cl.indices, value=cl.value * c) for cl in D.clusters
    )
    return SpectralDecomposition(
        eigenvalues=w,
        eigenvectors=D.eigenvectors,
        clusters=clusters,
        source_norm=D.source_norm * c,
        cluster_tol=D.cluster_tol * c,
        source=source,
        sweeps=D.sweeps,
    )


def ensure_decomposition(M: Union[SpectralDecomposition, ArrayLike], name: str = "matrix") -> SpectralDecomposition:
    """矩阵则对称化后分解，已是分解则原样返回"""
    if isinstance(M, SpectralDecomposition):
        return M
    return eigendecompose(as_symmetric(M, name=name))


def assert_spd(D: SpectralDecomposition, floor: Optional[float] = None) -> str:
    """
    检查正定性

    Returns:
        'spd' 或 'psd-only'（最小特征值位于 [-floor, floor)，允许实数幂，禁止对数/复数幂）

    Raises:
        SPDViolationError: 存在负特征值
    """
    floor = D.default_floor() if floor is None else floor
    status = D.status(floor)
    if status == "indefinite":
        offending = [float(x) for x in D.eigenvalues if x < -floor]
        raise SPDViolationError("矩阵不是半正定的, 负特征值", offending)
    if status == "psd-only":
        logger.warning(f"⚠️ 矩阵仅半正定 (最小特征值 {D.min_eigenvalue:.3e})")
    return status


def real_power(D: SpectralDecomposition, p: float) -> np.ndarray:
    """Q diag(λ^p) Q^T，约定 0^p = 0 (p > 0)；零特征值配 p ≤ 0 报错"""
    floor = D.default_floor()
    lam = D.eigenvalues
    if np.any(lam < -floor):
        raise SPDViolationError("实数幂要求特征值非负", [x for x in lam if x < -floor])
    lam = np.clip(lam, 0.0, None)
    zero = lam <= floor if D.status(floor) != "spd" else np.zeros_like(lam, dtype=bool)
    if p <= 0 and np.any(zero):
        raise SPDViolationError(f"零特征值不能取 {p} 次幂", lam[zero].tolist())
    if p == 0:
        powered = np.ones_like(lam)
    elif np.any(zero):
        powered = np.where(zero, 0.0, np.power(np.where(zero, 1.0, lam), p))
    else:
        powered = np.power(lam, p)
    Q = D.eigenvectors
    out = (Q * powered) @ Q.T
    return 0.5 * (out + out.T)


def _require_positive(D: SpectralDecomposition) -> None:
    status = D.status()
    if status == "indefinite":
        raise SPDViolationError("复数幂要求正定矩阵", [x for x in D.eigenvalues if x < 0])
    if status == "psd-only":
        raise PsdOnlyError("半正定矩阵不能取对数或复数幂, 最小特征值", [D.min_eigenvalue])


def log_eigenvalues(D: SpectralDecomposition) -> np.ndarray:
    """log λ_k（仅限正定）"""
    _require_positive(D)
    return np.log(D.eigenvalues)


def complex_power_matrix(D: SpectralDecomposition, z: complex) -> np.ndarray:
    """A^z = Q diag(e^{z log λ}) Q^T，复矩阵"""
    logs = log_eigenvalues(D)
    Q = D.eigenvectors
    return (Q * np.exp(complex(z) * logs)) @ Q.T


def complex_power_apply(D: SpectralDecomposition, z: complex, v: ArrayLike) -> np.ndarray:
    """A^z v = Σ λ_k^z ⟨v, a_k⟩ a_k"""
    logs = log_eigenvalues(D)
    vec = np.asarray(v, dtype=complex)
    if vec.shape != (D.n,):
        raise InputError(f"向量维度 {vec.shape} 与矩阵维度 {D.n} 不匹配")
    Q = D.eigenvectors
    coeffs = Q.T @ vec
    return Q @ (np.exp(complex(z) * logs) * coeffs)


def complex_power_columns(D: SpectralDecomposition, zs: ArrayLike, v: ArrayLike) -> np.ndarray:
    """批量计算 A^{z_j} v，返回形状 (len(zs), n)"""
    logs = log_eigenvalues(D)
    z_arr = np.asarray(zs, dtype=complex).reshape(-1)
    vec = np.asarray(v, dtype=complex)
    Q = D.eigenvectors
    coeffs = Q.T @ vec
    phases = np.exp(np.outer(z_arr, logs))
    return (phases * coeffs) @ Q.T


def operator_norm(M: ArrayLike, solver: Optional[str] = None) -> NormResult:
    """
    最大奇异值及见证向量

    实矩阵用 M^T M 的特征分解；复矩阵用 2n×2n 实嵌入 [[Re, -Im], [Im, Re]]。
    """
    arr = np.asarray(M)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.size == 0:
        raise InputError(f"算子范数需要非空二维矩阵, 实际形状 {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("算子范数的输入含有非有限元素")

    cols = arr.shape[1]
    is_complex = np.iscomplexobj(arr) and np.any(arr.imag != 0)
    if is_complex:
        re, im = arr.real, arr.imag
        real = np.block([[re, -im], [im, re]])
    else:
        real = arr.real.astype(float)

    gram = real.T @ real
    gram = 0.5 * (gram + gram.T)
    D = eigendecompose(gram, solver=solver)
    top = float(max(D.eigenvalues[-1], 0.0))
    # 顶部聚类内取下标最小的特征向量（单位矩阵返回 e1）
    u = np.array(D.eigenvectors[:, D.clusters[-1].indices[0]])

    if is_complex:
        witness = u[:cols] + 1j * u[cols:]
        witness = witness / np.linalg.norm(witness)
    else:
        witness = u
    return NormResult(value=float(np.sqrt(top)), witness=witness)


def spectral_projector(D: SpectralDecomposition, cluster_index: int) -> np.ndarray:
    """π_μ = Σ_{k∈cluster} b_k b_k^T"""
    if not 0 <= cluster_index < len(D.clusters):
        raise InputError(f"聚类下标越界: {cluster_index} (共 {len(D.clusters)} 个)")
    idx = list(D.clusters[cluster_index].indices)
    Qc = D.eigenvectors[:, idx]
    return Qc @ Qc.T


def psd_order(
    A: Union[SpectralDecomposition, ArrayLike],
    B: Union[SpectralDecomposition, ArrayLike],
    tol: float = 0.0,
) -> bool:
    """A ≥ B 当且仅当 A - B 的最小特征值 ≥ -tol"""
    a = A.source if isinstance(A, SpectralDecomposition) else np.asarray(A, dtype=float)
    b = B.source if isinstance(B, SpectralDecomposition) else np.asarray(B, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"维度不匹配: {a.shape} vs {b.shape}")
    diff = a - b
    D = eigendecompose(0.5 * (diff + diff.T))
    return bool(D.min_eigenvalue >= -tol)


def min_eigenvalue(M: ArrayLike) -> float:
    arr = np.asarray(M, dtype=float)
    return eigendecompose(0.5 * (arr + arr.T)).min_eigenvalue


def bilinear(v: ArrayLike, w: ArrayLike) -> complex:
    """实双线性配对 ⟨v, w⟩_ℝ = Σ v_i w_i（不取共轭）"""
    return complex(np.sum(np.asarray(v, dtype=complex) * np.asarray(w, dtype=complex)))
