"""
内置验收套件 - selftest 子命令逐项运行并报告通过/失败

quick 模式把各项的试验次数缩小约十倍，用于冒烟检查。
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .approx import ApproxInstance, ClassConstraint, pairing, search_sup
from .equality import analyze_mcintosh_equality, equality_transfer_check, extremal_vector
from .errors import OpNormError, PreconditionError, SoundnessError
from .fuzz import (
    FuzzConfig,
    random_spectrum,
    random_spd,
    random_stream,
    run_campaign,
    synthesize_equality_instance,
)
from .inequalities import McIntoshInstance, evaluate_mcintosh, normalize_mcintosh, worked_example
from .quadrature import adaptive_simpson
from .refinement import (
    ExponentialSum,
    certified_improvement,
    compute_d,
    kernel_tail,
    window_integral_check,
    rearrangement_check,
    poisson_kernel,
    poisson_mass,
    refined_mcintosh,
)
from .reporting import campaign_rows, dumps, render_csv, CAMPAIGN_HEADER
from .spectral import complex_power_apply, eigendecompose
from .strip import StripFunction, three_lines_bounds, evaluate_grid, expansion, poisson_reconstruct

logger = logging.getLogger(__name__)

SELFTEST_SEED = 7


@dataclass
class CriterionResult:
    """单项验收结果"""
    index: int
    name: str
    passed: bool
    detail: Dict[str, Any]
    duration: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class SelftestReport:
    quick: bool
    results: List[CriterionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'quick': self.quick,
            'passed': self.passed,
            'results': [r.to_dict() for r in self.results],
            'total_duration': sum(r.duration for r in self.results),
        }


def _scaled(count: int, quick: bool) -> int:
    return max(1, count // 10) if quick else count


def _random_normalized(seed: int, trial: int, n_range: Tuple[int, int] = (2, 4)) -> Tuple[McIntoshInstance, np.ndarray]:
    return _normalized_from_stream(random_stream(seed, trial), n_range)


def _normalized_from_stream(rng: np.random.Generator, n_range: Tuple[int, int]) -> Tuple[McIntoshInstance, np.ndarray]:
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    r = float(rng.uniform(0.1, 0.9))
    A = random_spd(n, random_spectrum(n, 0.1, 10.0, rng), int(rng.integers(0, 2**62)))
    B = random_spd(n, random_spectrum(n, 0.1, 10.0, rng), int(rng.integers(0, 2**62)))
    X = rng.standard_normal((n, n))
    inst = normalize_mcintosh(McIntoshInstance.from_matrices(A, X, B, r))
    v = rng.standard_normal(n)
    return inst, v / np.linalg.norm(v)


def _separated_normalized(seed: int, trial: int, min_gap: float = 1e-2, attempts: int = 100) -> McIntoshInstance:
    """拒绝采样：归一化后 log 谱两两相距 ≥ min_gap，且谱距离两项均 ≥ min_gap"""
    for attempt in range(attempts):
        inst, _ = _normalized_from_stream(random_stream(seed, trial, attempt), (2, 4))
        alpha = np.log(inst.decomp_a.eigenvalues)
        beta = np.log(inst.decomp_b.eigenvalues)
        if np.min(np.abs(alpha[:, None] - beta[None, :])) < min_gap:
            continue
        gap = compute_d(inst.decomp_a.eigenvalues, inst.decomp_b.eigenvalues, "mcintosh", inst.normalized)
        if min(gap.term1, gap.term2) >= min_gap:
            return inst
    raise PreconditionError(f"试验 {trial}: {attempts} 次采样内未得到谱分离实例")


# ===== 各验收项 =====

def check_worked_example(quick: bool) -> Dict[str, Any]:
    worst = 0.0
    for a in (1.0, 2.0, 5.0):
        for b in (0.5, 1.0, 2.0):
            for r in (0.3, 0.5, 0.7):
                ex = worked_example(a, b, r)
                report = evaluate_mcintosh(ex.instance)
                worst = max(
                    worst,
                    abs(report.lhs - ex.expected_lhs) / ex.expected_lhs,
                    abs(report.rhs - ex.expected_rhs) / ex.expected_rhs,
                )
    return {'passed': worst <= 1e-10, 'max_relative_error': worst}


def check_inequality_fuzzing(quick: bool) -> Dict[str, Any]:
    counts = {'mcintosh': 1000, 'cordes': 1000, 'fujii': 500}
    detail: Dict[str, Any] = {}
    ok = True
    for mode, trials in counts.items():
        config = FuzzConfig(n_min=2, n_max=8, trials=_scaled(trials, quick), seed=SELFTEST_SEED, mode=mode, equality_trials=0)
        summary = run_campaign(config).summary()
        detail[mode] = {k: summary[k] for k in ('trials', 'violations', 'soundness_failures', 'errors')}
        ok &= summary['violations'] == 0 and summary['errors'] == 0
    detail['passed'] = ok
    return detail


def check_unitarity(quick: bool) -> Dict[str, Any]:
    worst = 0.0
    for trial in range(_scaled(1000, quick)):
        rng = random_stream(SELFTEST_SEED, 3, trial)
        n = int(rng.integers(1, 9))
        D = eigendecompose(random_spd(n, random_spectrum(n, 1e-2, 1e2, rng), trial))
        v = rng.standard_normal(n)
        t = float(rng.uniform(-50.0, 50.0))
        w = complex_power_apply(D, 1j * t, v)
        worst = max(worst, abs(np.linalg.norm(w) - np.linalg.norm(v)) / np.linalg.norm(v))
    return {'passed': worst <= 1e-9, 'max_relative_deviation': worst}


def check_expansion_identity(quick: bool) -> Dict[str, Any]:
    ts = np.linspace(-20.0, 20.0, 200)
    worst = 0.0
    for trial in range(_scaled(200, quick)):
        inst, v = _random_normalized(SELFTEST_SEED + 4, trial)
        fn = StripFunction.create(inst, v)
        worst = max(worst, float(np.max(np.abs(expansion(fn, "left").evaluate(ts) - fn.evaluate(1j * ts)))))
    return {'passed': worst <= 1e-8, 'max_error': worst}


def check_max_modulus(quick: bool) -> Dict[str, Any]:
    ts = np.linspace(-40.0, 40.0, 161)
    xs = np.linspace(0.0, 1.0, 21)
    worst = 0.0
    for trial in range(_scaled(200, quick)):
        inst, v = _random_normalized(SELFTEST_SEED + 4, trial)
        grid = evaluate_grid(StripFunction.create(inst, v), xs, ts)
        worst = max(worst, float(np.max(np.abs(grid.values))))
    return {'passed': worst <= 1.0 + 1e-8, 'max_abs_F': worst}


def check_poisson(quick: bool) -> Dict[str, Any]:
    mass_error = 0.0
    for x in np.linspace(0.05, math.pi - 0.05, 30):
        quad = adaptive_simpson(lambda y: poisson_kernel(float(x), y), 0.0, 60.0, tol=1e-10, vectorized=True)
        total = 2.0 * (quad.value + kernel_tail(float(x), 60.0))
        mass_error = max(mass_error, abs(total - poisson_mass(float(x))), abs(total - 2.0 * (math.pi - x)))
    recon_error = 0.0
    for trial in range(_scaled(50, quick)):
        inst, v = _random_normalized(SELFTEST_SEED + 6, trial)
        report = poisson_reconstruct(StripFunction.create(inst, v), 0.5)
        recon_error = max(recon_error, report.error)
    return {
        'passed': mass_error <= 1e-6 and recon_error <= 1e-6,
        'max_mass_error': mass_error,
        'max_reconstruction_error': recon_error,
    }


def check_equality_desk_scale(quick: bool) -> Dict[str, Any]:
    consistent = 0
    detected = 0
    count = _scaled(100, quick)
    for trial in range(count):
        rng = random_stream(SELFTEST_SEED, 7, trial)
        n = int(rng.integers(1, 5))
        synth = synthesize_equality_instance(n, float(rng.uniform(0.5, 5.0)), trial, float(rng.uniform(0.1, 0.9)))
        verdict = analyze_mcintosh_equality(synth.instance, synth.v)
        consistent += verdict.consistent
        detected += bool(verdict.common_eigenvalues)

    certified = 0
    unsound = 0
    for trial in range(count):
        inst = _separated_normalized(SELFTEST_SEED + 70, trial)
        try:
            refined = refined_mcintosh(inst)
        except SoundnessError:
            unsound += 1
            continue
        unsound += refined.status == "violated"
        certified += refined.status == "certified"
    return {
        'passed': consistent == count and detected == count and certified == count and unsound == 0,
        'equality_consistent': consistent,
        'common_detected': detected,
        'certified': certified,
        'soundness_failures': unsound,
    }


def check_certificate(quick: bool) -> Dict[str, Any]:
    d_grid = [round(0.1 * k, 10) for k in range(1, 51)]
    positive = True
    monotone = True
    for n in (2, 4, 8):
        previous = -math.inf
        for d in d_grid:
            log_c = certified_improvement(n, 0.5, d).log_c_cert
            positive &= math.isfinite(log_c)
            monotone &= log_c >= previous - 1e-12
            previous = log_c
    return {'passed': positive and monotone, 'positive': positive, 'monotone': monotone}


def check_auxiliary_bounds(quick: bool) -> Dict[str, Any]:
    count = _scaled(500, quick)
    window_ok = 0
    rearrangement_ok = 0
    for trial in range(count):
        rng = random_stream(SELFTEST_SEED, 9, trial)
        eta = float(rng.uniform(0.2, 2.0))
        size = int(rng.integers(1, 7))
        freqs = rng.uniform(eta, 5.0 * eta, size) * np.where(rng.random(size) < 0.5, -1.0, 1.0)
        exp_sum = ExponentialSum.from_terms(rng.standard_normal(size), freqs)
        if exp_sum.size == 0 or window_integral_check(exp_sum, eta, samples=4001).holds:
            window_ok += 1

        x = float(rng.uniform(0.5, 3.0))
        k, base, M = rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.5, 2.0)
        omega, phase = rng.uniform(0.5, 10.0), rng.uniform(0.0, 2.0 * math.pi)
        sign = 1.0
        # ∫g 超过 xM/2 时取 -g
        if M * (math.cos(phase) - math.cos(omega * x + phase)) / omega > 0.5 * x * M:
            sign = -1.0
        report = rearrangement_check(
            lambda t, k=k, base=base: np.exp(-k * t) + base,
            lambda t, M=M, omega=omega, phase=phase, sign=sign: sign * M * np.sin(omega * t + phase),
            x, bound=M, samples=2001,
        )
        rearrangement_ok += bool(report.holds)
    return {
        'passed': window_ok == count and rearrangement_ok == count,
        'window_integral_holds': window_ok,
        'rearrangement_holds': rearrangement_ok,
        'trials': count,
    }


def check_interpolation_chains(quick: bool) -> Dict[str, Any]:
    count = _scaled(100, quick)
    transfers = 0
    for trial in range(count):
        rng = random_stream(SELFTEST_SEED, 10, trial)
        n = int(rng.integers(1, 5))
        synth = synthesize_equality_instance(n, float(rng.uniform(0.5, 5.0)), trial + 1000)
        transfers += equality_transfer_check(synth.instance, synth.v, tol=1e-9).holds
    chains = 0
    chain_count = _scaled(200, quick)
    for trial in range(chain_count):
        inst, _ = _random_normalized(SELFTEST_SEED + 11, trial)
        chains += three_lines_bounds(inst, extremal_vector(inst)).chain_holds
    return {
        'passed': transfers == count and chains == chain_count,
        'transfers': transfers,
        'chains': chains,
    }


def check_explorer(quick: bool) -> Dict[str, Any]:
    worst = 0.0
    for r in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9):
        one = ApproxInstance.create([0.0], [0.0], [[1.0]], r)
        worst = max(worst, abs(pairing(one).value - 1.0))
    budget = 500 if quick else 20000
    constraint = ClassConstraint("H", 1.0)
    first = search_sup(2, constraint, 0.5, budget, seed=SELFTEST_SEED)
    second = search_sup(2, constraint, 0.5, budget, seed=SELFTEST_SEED)
    upper = 1.0 - certified_improvement(2, 0.5, 2.0).c_cert + 1e-6
    in_range = 0.0 < first.best_value <= upper
    deterministic = first.best_value == second.best_value and first.history == second.history
    return {
        'passed': worst <= 1e-6 and in_range and deterministic,
        'pairing_max_error': worst,
        'best_value': first.best_value,
        'upper_bound': upper,
        'deterministic': deterministic,
    }


def check_reproducibility(quick: bool) -> Dict[str, Any]:
    config = FuzzConfig(trials=_scaled(50, quick), seed=SELFTEST_SEED, equality_trials=2)
    outputs = []
    for _ in range(2):
        report = run_campaign(config)
        outputs.append((render_csv(CAMPAIGN_HEADER, campaign_rows(report.records)), dumps(report)))
    same = outputs[0] == outputs[1]
    return {'passed': same, 'identical': same}


CRITERIA: List[Tuple[str, Callable[[bool], Dict[str, Any]]]] = [
    ("worked-example", check_worked_example),
    ("inequality-fuzzing", check_inequality_fuzzing),
    ("unitarity", check_unitarity),
    ("expansion-identity", check_expansion_identity),
    ("max-modulus", check_max_modulus),
    ("poisson-machinery", check_poisson),
    ("equality-desk-scale", check_equality_desk_scale),
    ("certificate", check_certificate),
    ("auxiliary-bounds", check_auxiliary_bounds),
    ("interpolation-chains", check_interpolation_chains),
    ("explorer", check_explorer),
    ("reproducibility", check_reproducibility),
]


def run_selftest(quick: bool = False, only: Optional[List[str]] = None) -> SelftestReport:
    """逐项运行验收套件，单项异常记为失败"""
    report = SelftestReport(quick)
    for index, (name, check) in enumerate(CRITERIA, start=1):
        if only and name not in only:
            continue
        start = time.perf_counter()
        try:
            detail = check(quick)
            passed = bool(detail.pop('passed'))
        except OpNormError as e:
            detail, passed = {'error': str(e)}, False
        duration = time.perf_counter() - start
        report.results.append(CriterionResult(index, name, passed, detail, duration))
        logger.info(f"{'✅' if passed else '❌'} [{index}] {name} ({duration:.2f}s)")
    return report
