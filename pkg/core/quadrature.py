"""
数值积分 - 自适应 Simpson 求积

按层批量细分：每一层所有未收敛子区间的新节点一次性求值，
被积函数可以是向量化的（接收 ndarray 返回 ndarray），也可以是标量函数。
支持复值被积函数。
"""
import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

Number = Union[float, complex]


@dataclass(frozen=True)
class QuadratureResult:
    """求积结果"""
    value: Number
    error: float
    intervals: int
    evaluations: int
    converged: bool


def _batched(f: Callable, vectorized: bool) -> Callable[[np.ndarray], np.ndarray]:
    if vectorized:
        return lambda xs: np.asarray(f(xs))
    return lambda xs: np.array([f(float(x)) for x in xs])


def adaptive_simpson(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-10,
    max_intervals: int = 200000,
    vectorized: bool = False,
    initial_panels: int = 8,
) -> QuadratureResult:
    """
    自适应 Simpson 积分

    每个子区间的误差估计 |S2 - S1|/15 与按宽度分配的容差比较，
    收敛区间取 Richardson 外推值 S2 + (S2 - S1)/15。

    Args:
        f: 被积函数
        a, b: 积分区间
        tol: 绝对误差容差
        max_intervals: 子区间数上限，超过后接受当前值并标记未收敛
        vectorized: f 是否接受数组
        initial_panels: 初始均分段数

    Returns:
        QuadratureResult
    """
    if a == b:
        return QuadratureResult(0.0, 0.0, 0, 0, True)
    if a > b:
        res = adaptive_simpson(f, b, a, tol, max_intervals, vectorized, initial_panels)
        return QuadratureResult(-res.value, res.error, res.intervals, res.evaluations, res.converged)

    fn = _batched(f, vectorized)
    width = b - a
    min_width = width * 1e-13

    edges = np.linspace(a, b, initial_panels + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    f_edges = fn(edges)
    f_mids = fn(mids)
    evaluations = len(edges) + len(mids)

    lo = edges[:-1]
    hi = edges[1:]
    flo = f_edges[:-1]
    fhi = f_edges[1:]
    fm = f_mids
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi)

    total = 0.0 + 0.0j if np.iscomplexobj(whole) else 0.0
    error = 0.0
    accepted = 0
    converged = True

    while lo.size:
        m = 0.5 * (lo + hi)
        lm = 0.5 * (lo + m)
        rm = 0.5 * (m + hi)
        f_new = fn(np.concatenate([lm, rm]))
        evaluations += f_new.size
        flm = f_new[: lo.size]
        frm = f_new[lo.size:]

        h = hi - lo
        left = h / 12.0 * (flo + 4.0 * flm + fm)
        right = h / 12.0 * (fm + 4.0 * frm + fhi)
        combined = left + right
        err = np.abs(combined - whole) / 15.0
        local_tol = tol * h / width

        done = (err <= local_tol) | (h <= min_width)
        if np.any(done):
            total = total + np.sum(combined[done] + (combined[done] - whole[done]) / 15.0)
            error += float(np.sum(err[done]))
            accepted += int(np.count_nonzero(done))

        keep = ~done
        if accepted + 2 * int(np.count_nonzero(keep)) > max_intervals and np.any(keep):
            total = total + np.sum(combined[keep])
            error += float(np.sum(err[keep]))
            accepted += int(np.count_nonzero(keep))
            converged = False
            logger.warning(
                f"⚠️ 自适应 Simpson 达到区间上限 {max_intervals}, 误差估计 {error:.3e}"
            )
            break

        lo, hi = np.concatenate([lo[keep], m[keep]]), np.concatenate([m[keep], hi[keep]])
        flo, fhi, fm_next = (
            np.concatenate([flo[keep], fm[keep]]),
            np.concatenate([fm[keep], fhi[keep]]),
            np.concatenate([flm[keep], frm[keep]]),
        )
        whole = np.concatenate([left[keep], right[keep]])
        fm = fm_next

    if isinstance(total, np.generic):
        total = total.item()
    return QuadratureResult(total, error, accepted, evaluations, converged)


def integrate_pieces(
    f: Callable,
    breakpoints: Sequence[float],
    tol: float = 1e-10,
    max_intervals: int = 200000,
    vectorized: bool = False,
) -> QuadratureResult:
    """在断点分段上积分（被积函数在断点处可以不连续）"""
    points = list(breakpoints)
    span = points[-1] - points[0]
    value: Number = 0.0
    error = 0.0
    intervals = 0
    evaluations = 0
    converged = True
    for left, right in zip(points[:-1], points[1:]):
        share = tol * (right - left) / span if span else tol
        res = adaptive_simpson(f, left, right, share, max_intervals, vectorized)
        value = value + res.value
        error += res.error
        intervals += res.intervals
        evaluations += res.evaluations
        converged = converged and res.converged
    return QuadratureResult(value, error, intervals, evaluations, converged)


def dense_sup(f: Callable, a: float, b: float, samples: int = 4001, vectorized: bool = False) -> float:
    """等距采样估计 sup|f|（下界估计）"""
    xs = np.linspace(a, b, samples)
    values = _batched(f, vectorized)(xs)
    return float(np.max(np.abs(values)))
