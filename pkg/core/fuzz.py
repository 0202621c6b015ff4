"""
随机测试 - 指定谱的随机 SPD 矩阵、等号实例合成、比值上升搜索和随机测试活动

所有随机数来自 numpy 的 Philox 计数器生成器，子流由 SeedSequence([seed, *keys]) 派生，
因此每个试验的结果与执行顺序和并行度无关。
"""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from .config_manager import get_config_manager
from .equality import analyze_mcintosh_equality, equality_transfer_check
from .errors import InputError, OpNormError, SoundnessError
from .inequalities import (
    CordesInstance,
    McIntoshInstance,
    evaluate_mcintosh,
    normalize_mcintosh,
)
from .refinement import refined_cordes, refined_mcintosh
from .spectral import ArrayLike, ensure_decomposition, operator_norm, real_power

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent / "configs"
MODES = ("mcintosh", "cordes", "fujii")


@dataclass
class FuzzConfig:
    """随机测试活动配置"""
    n_min: int = 2
    n_max: int = 6
    spectrum_min: float = 1e-2
    spectrum_max: float = 1e2
    trials: int = 100
    seed: int = 20240813
    r_grid: List[float] = field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    mode: str = "mcintosh"
    ascent_iters: int = 0
    equality_trials: int = 10
    jobs: int = 1

    def __post_init__(self):
        if not 1 <= self.n_min <= self.n_max:
            raise InputError(f"n 范围无效: [{self.n_min}, {self.n_max}]")
        if not 0.0 < self.spectrum_min <= self.spectrum_max:
            raise InputError(f"谱范围无效: [{self.spectrum_min}, {self.spectrum_max}]")
        if self.trials < 1:
            raise InputError(f"trials 必须 ≥ 1: {self.trials}")
        if self.mode not in MODES:
            raise InputError(f"未知模式: {self.mode}")
        if not self.r_grid or any(not 0.0 < r < 1.0 for r in self.r_grid):
            raise InputError(f"r 网格必须非空且位于 (0, 1): {self.r_grid}")
        if self.ascent_iters < 0 or self.equality_trials < 0 or self.jobs < 1:
            raise InputError("ascent_iters / equality_trials 不能为负, jobs 必须 ≥ 1")
        self.r_grid = [float(r) for r in self.r_grid]

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "FuzzConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"未知的活动配置项: {sorted(unknown)}")
        return cls(**dict(data))

    @classmethod
    def from_settings(cls) -> "FuzzConfig":
        s = get_config_manager().fuzz_settings
        return cls(
            n_min=s.n_min, n_max=s.n_max, spectrum_min=s.spectrum_min, spectrum_max=s.spectrum_max,
            trials=s.trials, seed=s.seed, r_grid=list(s.r_grid), mode=s.mode, jobs=s.parallel_jobs,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def load_campaign_config(source: Optional[Union[str, Path]] = None, **overrides) -> FuzzConfig:
    """
    读取活动配置

    source 可以是 JSON/YAML 文件路径、core/configs 下的预设名，或 None（使用全局设置）。
    OPNORM_SEED 环境变量覆盖种子。
    """
    if source is None:
        data = FuzzConfig.from_settings().to_dict()
    else:
        path = Path(source)
        if not path.exists():
            preset = PRESET_DIR / f"{source}.yaml"
            if not preset.exists():
                raise InputError(f"找不到活动配置: {source}")
            path = preset
        try:
            with open(path, 'r', encoding='utf-8') as f:
                loaded = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise InputError(f"活动配置解析失败 {path}: {e}") from e
        if not isinstance(loaded, dict):
            raise InputError(f"活动配置必须是映射: {path}")
        data = loaded
    data = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    data['seed'] = get_config_manager().resolve_seed(data.get('seed'))
    return FuzzConfig.from_mapping(data)


def list_presets() -> List[str]:
    """列出 core/configs 下的预设名"""
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


# ===== 随机对象 =====

def random_stream(seed: int, *keys: int) -> np.random.Generator:
    """Philox 子流，键为 (seed, *keys)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *(int(k) for k in keys)])))


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """高斯矩阵 QR 分解，按 R 的对角符号修正得到 Haar 分布正交阵"""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def random_spectrum(n: int, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    """[lo, hi] 上对数均匀的 n 个特征值"""
    return np.exp(rng.uniform(math.log(lo), math.log(hi), n))


def _spd_from_stream(spectrum: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    Q = random_orthogonal(spectrum.size, rng)
    M = (Q * spectrum) @ Q.T
    return 0.5 * (M + M.T)


def random_spd(n: int, spectrum: Sequence[float], seed: int) -> np.ndarray:
    """Q diag(spectrum) Q^T，相同种子给出逐位相同的结果"""
    lam = np.asarray(spectrum, dtype=float).reshape(-1)
    if lam.size != n:
        raise InputError(f"谱长度 {lam.size} 与 n = {n} 不一致")
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise InputError(f"谱必须为正有限数: {lam.tolist()}")
    return _spd_from_stream(lam, random_stream(seed))


# ===== 等号实例合成 =====

@dataclass
class SynthesizedInstance:
    """按对角配方构造并经正交共轭的等号实例"""
    instance: McIntoshInstance
    v: np.ndarray
    shared_eigenvalue: float
    diagonal: Dict[str, List[float]]


def synthesize_equality_instance(
    n: int,
    shared_eigenvalue: float,
    seed: int,
    r: float = 0.5,
) -> SynthesizedInstance:
    """
    λ_1 = μ_1 = shared，x_1 = 1/shared，其余 |x_i| = u_i·min(1/λ_i, 1/μ_i)，u_i ∈ [0.1, 0.9]

    再以独立随机正交阵 U、W 共轭：A' = UAU^T，B' = WBW^T，X' = UXW^T，v = We_1。
    """
    if not shared_eigenvalue > 0:
        raise InputError(f"公共特征值必须为正: {shared_eigenvalue}")
    if n < 1:
        raise InputError(f"n 必须 ≥ 1: {n}")
    rng = random_stream(seed)
    lam = np.empty(n)
    mu = np.empty(n)
    x = np.empty(n)
    lam[0] = mu[0] = shared_eigenvalue
    x[0] = 1.0 / shared_eigenvalue
    if n > 1:
        lam[1:] = shared_eigenvalue * np.exp(rng.uniform(-2.0, 2.0, n - 1))
        mu[1:] = shared_eigenvalue * np.exp(rng.uniform(-2.0, 2.0, n - 1))
        u = rng.uniform(0.1, 0.9, n - 1)
        signs = np.where(rng.random(n - 1) < 0.5, -1.0, 1.0)
        x[1:] = signs * u * np.minimum(1.0 / lam[1:], 1.0 / mu[1:])

    U = random_orthogonal(n, rng)
    W = random_orthogonal(n, rng)
    A = (U * lam) @ U.T
    B = (W * mu) @ W.T
    X = (U * x) @ W.T
    v = np.array(W[:, 0])

    inst = normalize_mcintosh(McIntoshInstance.from_matrices(A, X, B, r))
    return SynthesizedInstance(
        inst, v, float(shared_eigenvalue),
        {'lambda': lam.tolist(), 'mu': mu.tolist(), 'x': x.tolist()},
    )


# ===== 比值上升 =====

@dataclass
class AscentResult:
    """McIntosh 比值的交替上升结果"""
    X: np.ndarray
    v: np.ndarray
    ratio: float
    iterations: int
    accepted: int
    history: List[float]


def maximize_ratio(
    A: ArrayLike,
    B: ArrayLike,
    r: float,
    iters: int,
    seed: int,
) -> AscentResult:
    """
    交替上升：给定 X 取 v 为极值向量；给定 v 沿比值的中心差分梯度回溯上升

    梯度近乎退化时改用随机扰动；比值在接受的步之间单调不减。
    """
    da = ensure_decomposition(A, "A")
    db = ensure_decomposition(B, "B")
    n = da.n
    if db.n != n:
        raise InputError(f"维度不匹配: A {n}, B {db.n}")
    rng = random_stream(seed)
    A_src, B_src = da.source, db.source
    Ar = real_power(da, r)
    Bs = real_power(db, 1.0 - r)

    def rhs(X: np.ndarray) -> float:
        return (
            operator_norm(A_src @ X, solver="lapack").value ** r
            * operator_norm(X @ B_src, solver="lapack").value ** (1.0 - r)
        )

    def ratio(X: np.ndarray) -> float:
        den = rhs(X)
        return operator_norm(Ar @ X @ Bs, solver="lapack").value / den if den > 0 else 0.0

    def vector_ratio(X: np.ndarray, v: np.ndarray) -> float:
        den = rhs(X)
        return float(np.linalg.norm(Ar @ X @ Bs @ v)) / den if den > 0 else 0.0

    X = rng.standard_normal((n, n))
    best = ratio(X)
    history = [best]
    accepted = 0

    for _ in range(iters):
        v = np.real(operator_norm(Ar @ X @ Bs, solver="lapack").witness)
        h = 1e-6 * float(np.linalg.norm(X))
        grad = np.zeros_like(X)
        for i in range(n):
            for j in range(n):
                E = np.zeros_like(X)
                E[i, j] = h
                grad[i, j] = (vector_ratio(X + E, v) - vector_ratio(X - E, v)) / (2.0 * h)
        g_norm = float(np.linalg.norm(grad))

        moved = False
        if g_norm > 1e-12:
            step = 0.1 * float(np.linalg.norm(X)) / g_norm
            for _ in range(30):
                trial = X + step * grad
                value = ratio(trial)
                if value > best:
                    X, best, moved = trial, value, True
                    break
                step *= 0.5
        if not moved:
            trial = X + 0.1 * float(np.linalg.norm(X)) / max(n, 1) * rng.standard_normal((n, n))
            value = ratio(trial)
            if value > best:
                X, best, moved = trial, value, True
        if moved:
            accepted += 1
        history.append(best)

    v = np.real(operator_norm(Ar @ X @ Bs).witness)
    final = float(evaluate_mcintosh(McIntoshInstance.from_matrices(da, X, db, r)).ratio or 0.0)
    logger.debug(f"比值上升: {iters} 次迭代, 接受 {accepted} 步, ratio={final!r}")
    return AscentResult(X, v, final, iters, accepted, history)


# ===== 随机测试活动 =====

@dataclass
class TrialRecord:
    """单次试验记录（导出为 CSV 行）"""
    trial: int
    n: int
    r: float
    d: Optional[float]
    ratio: Optional[float]
    c_cert: Optional[float]
    verdict: str
    message: str = ""

    @property
    def violation(self) -> bool:
        return self.verdict in ("violated", "soundness-failure")


@dataclass
class EqualityRecord:
    """等号合成记录"""
    index: int
    n: int
    shared_eigenvalue: float
    ratio: float
    verdict: str
    common_detected: bool
    transfer: str


@dataclass
class CampaignReport:
    """随机测试活动汇总"""
    config: FuzzConfig
    records: List[TrialRecord]
    equality: List[EqualityRecord]

    @property
    def violations(self) -> int:
        return sum(1 for rec in self.records if rec.violation)

    @property
    def errors(self) -> int:
        return sum(1 for rec in self.records if rec.verdict == "error")

    def summary(self) -> Dict[str, Any]:
        ratios = [rec.ratio for rec in self.records if rec.ratio is not None]
        margins = [
            (1.0 - rec.c_cert) - rec.ratio
            for rec in self.records
            if rec.c_cert is not None and rec.ratio is not None
        ]
        return {
            'trials': len(self.records),
            'violations': self.violations,
            'soundness_failures': sum(1 for rec in self.records if rec.verdict == "soundness-failure"),
            'errors': self.errors,
            'certified': sum(1 for rec in self.records if rec.verdict == "certified"),
            'min_slack': min((1.0 - x for x in ratios), default=None),
            'max_ratio': max(ratios, default=None),
            'min_certified_margin': min(margins, default=None),
            'equality': {
                'trials': len(self.equality),
                'consistent': sum(1 for e in self.equality if e.verdict == "consistent-with-equality"),
                'common_detected': sum(1 for e in self.equality if e.common_detected),
                'transfers': sum(1 for e in self.equality if e.transfer == "transfers"),
            },
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            'config': self.config.to_dict(),
            'summary': self.summary(),
            'equality': [asdict(e) for e in self.equality],
        }


def _trial_instance(config: FuzzConfig, trial: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int, float]:
    rng = random_stream(config.seed, trial)
    n = int(rng.integers(config.n_min, config.n_max + 1))
    r = float(config.r_grid[int(rng.integers(0, len(config.r_grid)))])
    A = _spd_from_stream(random_spectrum(n, config.spectrum_min, config.spectrum_max, rng), rng)
    B = _spd_from_stream(random_spectrum(n, config.spectrum_min, config.spectrum_max, rng), rng)
    X = rng.standard_normal((n, n))
    return A, X, B, n, r


def run_trial(config: FuzzConfig, trial: int) -> TrialRecord:
    """执行一次试验；单次失败只记录，不中断活动"""
    A, X, B, n, r = _trial_instance(config, trial)
    try:
        if config.mode == "cordes":
            refined = refined_cordes(CordesInstance.from_matrices(A, B, r))
        else:
            da = ensure_decomposition(A, "A")
            db = ensure_decomposition(B, "B")
            if config.mode == "fujii":
                # ‖AXB‖ ≤ ‖A²X‖^{1/2}‖XB²‖^{1/2} 即 (A², X, B², 1/2)
                da = ensure_decomposition(real_power(da, 2.0), "A²")
                db = ensure_decomposition(real_power(db, 2.0), "B²")
                r = 0.5
            if config.ascent_iters > 0:
                X = maximize_ratio(da, db, r, config.ascent_iters, seed=config.seed + trial).X
            refined = refined_mcintosh(McIntoshInstance.from_matrices(da, X, db, r))
    except SoundnessError as e:
        logger.error(f"❌ 试验 {trial}: {e}")
        return TrialRecord(trial, n, r, None, None, None, "soundness-failure", str(e))
    except OpNormError as e:
        logger.warning(f"⚠️ 试验 {trial} 失败: {e}")
        return TrialRecord(trial, n, r, None, None, None, "error", str(e))

    report = refined.report
    d = refined.gap.d if refined.gap is not None else None
    c_cert = refined.bound.c_cert if refined.bound is not None else None
    message = ""
    if report.status == "violated":
        verdict = "violated"
    elif refined.status == "violated":
        message = refined.notes[-1]
        logger.error(f"❌ 试验 {trial}: {message}")
        verdict = "soundness-failure"
    elif refined.status == "certified":
        verdict = "certified"
    else:
        verdict = report.status
    return TrialRecord(trial, n, r, d, report.ratio, c_cert, verdict, message)


def run_equality_trial(config: FuzzConfig, index: int) -> EqualityRecord:
    """合成等号实例并检查判定、公共特征值和传递"""
    rng = random_stream(config.seed, config.trials + index)
    n = int(rng.integers(config.n_min, config.n_max + 1))
    shared = float(random_spectrum(1, config.spectrum_min, config.spectrum_max, rng)[0])
    r = float(config.r_grid[int(rng.integers(0, len(config.r_grid)))])
    synth = synthesize_equality_instance(n, shared, int(rng.integers(0, 2**63 - 1)), r)
    verdict = analyze_mcintosh_equality(synth.instance, synth.v)
    transfer = equality_transfer_check(synth.instance, synth.v)
    return EqualityRecord(
        index, n, shared, verdict.achieved, verdict.overall,
        bool(verdict.common_eigenvalues), transfer.status,
    )


def run_campaign(config: FuzzConfig, jobs: Optional[int] = None) -> CampaignReport:
    """
    执行随机测试活动

    并行执行时每个试验仍使用 (seed, trial) 子流，结果按试验编号排序。
    """
    jobs = config.jobs if jobs is None else jobs
    logger.info(f"🎲 开始随机测试: mode={config.mode}, trials={config.trials}, seed={config.seed}, jobs={jobs}")
    indices = range(config.trials)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(lambda t: run_trial(config, t), indices))
            equality = list(pool.map(lambda i: run_equality_trial(config, i), range(config.equality_trials)))
    else:
        records = [run_trial(config, t) for t in indices]
        equality = [run_equality_trial(config, i) for i in range(config.equality_trials)]
    records.sort(key=lambda rec: rec.trial)

    report = CampaignReport(config, records, equality)
    summary = report.summary()
    if summary['violations']:
        logger.error(f"❌ 随机测试发现 {summary['violations']} 次违反")
    else:
        logger.info(f"✅ 随机测试完成: {summary['trials']} 次试验, 无违反")
    return report


def dump_campaign_config(config: FuzzConfig, path: Union[str, Path]) -> None:
    """保存活动配置（.yaml/.yml 写 YAML，其余写 JSON）"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8') as f:
        if target.suffix in (".yaml", ".yml"):
            yaml.safe_dump(config.to_dict(), f, allow_unicode=True, sort_keys=True)
        else:
            json.dump(config.to_dict(), f, indent=2, sort_keys=True)
