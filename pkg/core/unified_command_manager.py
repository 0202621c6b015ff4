"""
统一命令管理器 - 每个子命令一个命令类，CLI 与 MCP 服务器共用
"""
import asyncio
import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .approx import ClassConstraint, pairing_profile, search_sup
from .config_manager import get_config_manager
from .equality import (
    analyze_cordes_equality,
    analyze_mcintosh_equality,
    equality_transfer_check,
    extremal_vector,
)
from .errors import InputError, OpNormError
from .fuzz import load_campaign_config, run_campaign
from .inequalities import (
    CordesInstance,
    McIntoshInstance,
    evaluate_cordes,
    evaluate_fujii_furuta,
    evaluate_heinz_kato,
    evaluate_loewner_heinz,
    evaluate_mcintosh,
    normalize_cordes,
    normalize_mcintosh,
)
from .matrix_files import MatrixFile, load_matrix, load_vector
from .refinement import refined_cordes, refined_mcintosh
from .reporting import (
    CAMPAIGN_HEADER,
    HISTORY_HEADER,
    PROFILE_HEADER,
    STRIP_HEADER,
    RunReport,
    campaign_rows,
    render_csv,
    write_text_async,
)
from .selftest import run_selftest
from .spectral import assert_spd, ensure_decomposition
from .strip import StripFunction, evaluate_grid, max_principle_probe, poisson_reconstruct

INEQUALITIES = ("mcintosh", "cordes", "fujii", "heinz-kato", "loewner-heinz")


@dataclass
class CommandOutput:
    """命令的计算结果：报告、退出码、待写出的文件"""
    report: RunReport
    exit_code: int = 0
    message: str = ""
    files: Dict[str, str] = field(default_factory=dict)


class BaseCommand(ABC):
    """命令基类"""

    def __init__(self, config_manager):
        self.config = config_manager
        self.logger = logging.getLogger(f"core.commands.{self.get_name()}")

    @abstractmethod
    def get_name(self) -> str:
        """子命令名"""
        pass

    @abstractmethod
    def get_description(self) -> str:
        """命令说明"""
        pass

    @abstractmethod
    def run(self, **kwargs) -> CommandOutput:
        """同步执行计算"""
        pass

    async def execute(self, **kwargs) -> Dict[str, Any]:
        """
        执行命令

        Returns:
            {success, exit_code, message, report, outputs, duration}
        """
        start_time = time.time()
        try:
            output = await asyncio.to_thread(self.run, **kwargs)
            written = []
            for path, text in output.files.items():
                written.append(str(await write_text_async(path, text)))
            return {
                'success': output.exit_code == 0,
                'exit_code': output.exit_code,
                'message': output.message,
                'report': output.report,
                'outputs': written,
                'duration': round(time.time() - start_time, 2),
            }
        except OpNormError as e:
            self.logger.error(f"❌ {self.get_name()} 失败: {e}")
            return {
                'success': False,
                'exit_code': e.exit_code,
                'message': str(e),
                'report': None,
                'outputs': [],
                'duration': round(time.time() - start_time, 2),
            }

    # ===== 共用的输入处理 =====

    @staticmethod
    def _load_slots(files: Sequence[str], slots: Sequence[str]) -> Dict[str, MatrixFile]:
        if len(files) != len(slots):
            raise InputError(f"需要 {len(slots)} 个矩阵文件 ({', '.join(slots)}), 实际 {len(files)} 个")
        return {
            slot: load_matrix(path, symmetric=slot in ("A", "B"))
            for slot, path in zip(slots, files)
        }

    @staticmethod
    def _exponent(value: Optional[float], name: str, default: float = 0.5) -> float:
        value = default if value is None else float(value)
        if not 0.0 <= value <= 1.0:
            raise InputError(f"{name} 必须位于 [0, 1]: {value}")
        return value

    @staticmethod
    def _spd_inputs(*matrices: np.ndarray) -> List:
        decomps = []
        for name, M in zip("AB", matrices):
            D = ensure_decomposition(M, name)
            assert_spd(D)
            decomps.append(D)
        return decomps


class CheckCommand(BaseCommand):
    """不等式求值"""

    def get_name(self) -> str:
        return "check"

    def get_description(self) -> str:
        return "求值 McIntosh / Cordes / Fujii–Furuta / Heinz–Kato / Löwner–Heinz 不等式"

    def run(
        self,
        files: Sequence[str],
        ineq: str = "mcintosh",
        r: Optional[float] = None,
        s: Optional[float] = None,
        T: Optional[str] = None,
        alpha: Optional[float] = None,
        x: Optional[str] = None,
        y: Optional[str] = None,
        **_,
    ) -> CommandOutput:
        if ineq not in INEQUALITIES:
            raise InputError(f"未知不等式: {ineq}")
        params: Dict[str, Any] = {'ineq': ineq}

        if ineq in ("mcintosh", "fujii"):
            loaded = self._load_slots(files, ("A", "X", "B"))
            da, db = self._spd_inputs(loaded['A'].matrix, loaded['B'].matrix)
            if ineq == "mcintosh":
                params['r'] = self._exponent(r, "r")
                report = evaluate_mcintosh(McIntoshInstance.from_matrices(da, loaded['X'].matrix, db, params['r']))
            else:
                report = evaluate_fujii_furuta(da, loaded['X'].matrix, db)
        elif ineq == "cordes":
            loaded = self._load_slots(files, ("A", "B"))
            da, db = self._spd_inputs(loaded['A'].matrix, loaded['B'].matrix)
            params['s'] = self._exponent(s if s is not None else r, "s")
            report = evaluate_cordes(CordesInstance.from_matrices(da, db, params['s']))
        elif ineq == "heinz-kato":
            loaded = self._load_slots(files, ("A", "B"))
            if not (T and x and y):
                raise InputError("heinz-kato 需要 --T、--x、--y 文件")
            loaded['T'] = load_matrix(T)
            loaded['x'] = load_vector(x)
            loaded['y'] = load_vector(y)
            da, db = self._spd_inputs(loaded['A'].matrix, loaded['B'].matrix)
            params['alpha'] = self._exponent(alpha, "alpha")
            report = evaluate_heinz_kato(
                loaded['T'].matrix, da, db, params['alpha'], loaded['x'].matrix, loaded['y'].matrix,
            )
        else:
            loaded = self._load_slots(files, ("A", "B"))
            params['alpha'] = self._exponent(alpha, "alpha")
            report = evaluate_loewner_heinz(loaded['A'].matrix, loaded['B'].matrix, params['alpha'])

        digests = [f.digest for f in loaded.values()]
        violated = report.status == "violated"
        message = f"{'❌' if violated else '✅'} {ineq}: {report.status}"
        return CommandOutput(RunReport("check", params, report, None, digests), 2 if violated else 0, message)


CERTIFICATE_LABELS = {"certified": "certified", "no-certificate": "no certificate", "violated": "violated"}


class RefineCommand(BaseCommand):
    """改进不等式与可证常数"""

    def get_name(self) -> str:
        return "refine"

    def get_description(self) -> str:
        return "计算谱距离 d、窗口 ℓ 与改进常数 c_cert，并检查比值 ≤ 1 - c_cert"

    def run(
        self,
        files: Sequence[str],
        ineq: str = "mcintosh",
        r: Optional[float] = None,
        s: Optional[float] = None,
        side: Optional[str] = None,
        **_,
    ) -> CommandOutput:
        params: Dict[str, Any] = {'ineq': ineq, 'side': side or "auto"}
        if ineq == "mcintosh":
            loaded = self._load_slots(files, ("A", "X", "B"))
            da, db = self._spd_inputs(loaded['A'].matrix, loaded['B'].matrix)
            params['r'] = self._exponent(r, "r")
            refined = refined_mcintosh(McIntoshInstance.from_matrices(da, loaded['X'].matrix, db, params['r']), side)
        elif ineq == "cordes":
            loaded = self._load_slots(files, ("A", "B"))
            da, db = self._spd_inputs(loaded['A'].matrix, loaded['B'].matrix)
            params['s'] = self._exponent(s if s is not None else r, "s")
            refined = refined_cordes(CordesInstance.from_matrices(da, db, params['s']), side)
        else:
            raise InputError(f"refine 只支持 mcintosh / cordes: {ineq}")

        bound = refined.bound
        results = {
            'd': refined.gap.d if refined.gap else None,
            'witnesses': [list(refined.gap.witness1), list(refined.gap.witness2)] if refined.gap else None,
            'ell': bound.ell_used if bound else None,
            'c_cert': bound.c_cert if bound else None,
            'ratio': refined.report.ratio,
            'margin': refined.margin,
            'certificate': CERTIFICATE_LABELS[refined.status],
            'detail': refined,
        }
        message = {
            "certified": "✅ 已给出可证改进",
            "no-certificate": "ℹ️ no certificate",
            "violated": "❌ 比值超过可证上界 1 - c_cert",
        }[refined.status]
        code = 2 if refined.status == "violated" else 0
        return CommandOutput(RunReport("refine", params, results, None, [f.digest for f in loaded.values()]), code, message)


class EqualityCommand(BaseCommand):
    """等号情形分析"""

    def get_name(self) -> str:
        return "equality"

    def get_description(self) -> str:
        return "逐聚类检查谱投影映射条件、公共特征值与等号传递"

    def run(
        self,
        files: Sequence[str],
        ineq: str = "mcintosh",
        r: Optional[float] = None,
        s: Optional[float] = None,
        v: Optional[str] = None,
        **_,
    ) -> CommandOutput:
        params: Dict[str, Any] = {'ineq': ineq}
        if ineq == "mcintosh":
            loaded = self._load_slots(files, ("A", "X", "B"))
            da, db = self._spd_inputs(loaded['A'].matrix, loaded['B'].matrix)
            params['r'] = self._exponent(r, "r")
            inst = normalize_mcintosh(McIntoshInstance.from_matrices(da, loaded['X'].matrix, db, params['r']))
            analyze = analyze_mcintosh_equality
        elif ineq == "cordes":
            loaded = self._load_slots(files, ("A", "B"))
            da, db = self._spd_inputs(loaded['A'].matrix, loaded['B'].matrix)
            params['s'] = self._exponent(s if s is not None else r, "s")
            inst = normalize_cordes(CordesInstance.from_matrices(da, db, params['s']))
            analyze = analyze_cordes_equality
        else:
            raise InputError(f"equality 只支持 mcintosh / cordes: {ineq}")

        if v:
            loaded['v'] = load_vector(v)
            vec = loaded['v'].matrix
            params['v'] = "file"
        else:
            vec = extremal_vector(inst)
            params['v'] = "extremal"
        verdict = analyze(inst, vec)
        transfer = equality_transfer_check(inst, vec)
        results = {'verdict': verdict, 'transfer': transfer, 'v': vec}
        message = f"{'✅' if verdict.consistent else 'ℹ️'} {verdict.overall}"
        return CommandOutput(RunReport("equality", params, results, None, [f.digest for f in loaded.values()]), 0, message)


class StripCommand(BaseCommand):
    """带形函数网格导出"""

    def get_name(self) -> str:
        return "strip"

    def get_description(self) -> str:
        return "在 0 ≤ Re z ≤ 1 的网格上求值 F(z) 并导出 CSV"

    def run(
        self,
        files: Sequence[str],
        r: Optional[float] = None,
        grid: Optional[Tuple[int, int]] = None,
        tmax: Optional[float] = None,
        out: Optional[str] = None,
        v: Optional[str] = None,
        **_,
    ) -> CommandOutput:
        settings = self.config.strip_settings
        loaded = self._load_slots(files, ("A", "X", "B"))
        da, db = self._spd_inputs(loaded['A'].matrix, loaded['B'].matrix)
        r = self._exponent(r, "r")
        if not 0.0 < r < 1.0:
            raise InputError(f"strip 需要 r ∈ (0, 1): {r}")
        nx, nt = grid if grid else (settings.x_points, settings.t_points)
        tmax = settings.t_max if tmax is None else float(tmax)
        # nx ≥ 3 保证至少一列内部点
        if nx < 3 or nt < 2 or tmax <= 0:
            raise InputError(f"网格参数无效: nx={nx}, nt={nt}, tmax={tmax}")

        inst = normalize_mcintosh(McIntoshInstance.from_matrices(da, loaded['X'].matrix, db, r))
        if v:
            loaded['v'] = load_vector(v)
            vec = loaded['v'].matrix
        else:
            vec = extremal_vector(inst)
        fn = StripFunction.create(inst, vec)
        strip_grid = evaluate_grid(fn, np.linspace(0.0, 1.0, nx), np.linspace(-tmax, tmax, nt))
        probe = max_principle_probe(fn, strip_grid)
        # z = 1 - r 处 F 等于 ‖A^r X B^{1-r} v‖²
        reconstruction = poisson_reconstruct(fn, 1.0 - r)

        params = {'r': r, 'nx': int(nx), 'nt': int(nt), 'tmax': tmax, 'v': "file" if v else "extremal"}
        results = {
            'boundary_max': strip_grid.boundary_max,
            'interior_max': strip_grid.interior_max,
            'interior_bound': fn.interior_bound(),
            'max_principle': probe,
            'reconstruction': reconstruction,
        }
        files_out = {}
        if out:
            files_out[out] = render_csv(STRIP_HEADER, strip_grid.rows())
        return CommandOutput(
            RunReport("strip", params, results, None, [f.digest for f in loaded.values()]),
            0, f"✅ 网格 {nx}×{nt} 已求值", files_out,
        )


class ApproxCommand(BaseCommand):
    """逼近问题探索"""

    def get_name(self) -> str:
        return "approx"

    def get_description(self) -> str:
        return "在 𝓗/𝓖 类中搜索 ∫ f g 的上确界下界"

    def run(
        self,
        n: int = 2,
        kind: str = "H",
        delta: float = 1.0,
        r: float = 0.5,
        budget: int = 1000,
        seed: Optional[int] = None,
        out: Optional[str] = None,
        profile: Optional[str] = None,
        **_,
    ) -> CommandOutput:
        seed = self.config.resolve_seed(seed)
        if not 0.0 < r < 1.0:
            raise InputError(f"r 必须位于 (0, 1): {r}")
        report = search_sup(int(n), ClassConstraint(kind, float(delta)), float(r), int(budget), seed)
        params = {'n': int(n), 'class': kind, 'delta': float(delta), 'r': float(r), 'budget': int(budget)}
        files_out = {}
        if out:
            files_out[out] = render_csv(HISTORY_HEADER, report.history)
        if profile:
            files_out[profile] = render_csv(PROFILE_HEADER, pairing_profile())
        if report.status == "infeasible":
            message = "⚠️ 约束不可满足"
        elif report.consistent is False:
            message = f"❌ best_value {report.best_value!r} 超过 1 - c_cert"
        else:
            message = f"✅ best_value = {report.best_value!r}"
        return CommandOutput(RunReport("approx", params, report, seed), 0, message, files_out)


class FuzzCommand(BaseCommand):
    """随机测试活动"""

    def get_name(self) -> str:
        return "fuzz"

    def get_description(self) -> str:
        return "按配置执行随机测试活动并导出逐试验 CSV"

    def run(
        self,
        config: Optional[str] = None,
        jobs: Optional[int] = None,
        seed: Optional[int] = None,
        trials: Optional[int] = None,
        out: Optional[str] = None,
        **_,
    ) -> CommandOutput:
        campaign_config = load_campaign_config(config, seed=seed, trials=trials)
        report = run_campaign(campaign_config, jobs)
        summary = report.summary()
        files_out = {}
        if out:
            files_out[out] = render_csv(CAMPAIGN_HEADER, campaign_rows(report.records))
        exit_code = 2 if summary['violations'] else 0
        message = f"{'❌' if exit_code else '✅'} {summary['trials']} 次试验, 违反 {summary['violations']} 次"
        return CommandOutput(RunReport("fuzz", {}, report, campaign_config.seed), exit_code, message, files_out)


class SelftestCommand(BaseCommand):
    """内置验收套件"""

    def get_name(self) -> str:
        return "selftest"

    def get_description(self) -> str:
        return "运行内置验收套件并逐项报告"

    def run(self, quick: bool = False, only: Optional[List[str]] = None, **_) -> CommandOutput:
        report = run_selftest(quick, only)
        failed = [r.name for r in report.results if not r.passed]
        message = "✅ 全部通过" if not failed else f"❌ 未通过: {', '.join(failed)}"
        return CommandOutput(RunReport("selftest", {'quick': bool(quick)}, report), 0 if not failed else 2, message)


class UnifiedCommandManager:
    """统一命令管理器"""

    def __init__(self):
        self.config = get_config_manager()
        self.logger = self._setup_logger()
        self.commands: Dict[str, BaseCommand] = {
            cmd.get_name(): cmd
            for cmd in (
                CheckCommand(self.config),
                RefineCommand(self.config),
                EqualityCommand(self.config),
                StripCommand(self.config),
                ApproxCommand(self.config),
                FuzzCommand(self.config),
                SelftestCommand(self.config),
            )
        }

    def _setup_logger(self) -> logging.Logger:
        """在 core 包日志器上安装唯一的 stderr 处理器"""
        logger = logging.getLogger("core")
        settings = self.config.logging_settings
        logger.setLevel(getattr(logging, settings.log_level.upper(), logging.INFO))
        if not logger.handlers:
            handler = logging.StreamHandler()
            handler.setFormatter(logging.Formatter(settings.log_format))
            logger.addHandler(handler)
        return logger

    def get_command(self, name: str) -> BaseCommand:
        if name not in self.commands:
            raise InputError(f"未知子命令: {name}")
        return self.commands[name]

    def get_supported_commands(self) -> List[str]:
        return list(self.commands)

    async def execute(self, name: str, **kwargs) -> Dict[str, Any]:
        try:
            command = self.get_command(name)
        except InputError as e:
            return {'success': False, 'exit_code': 1, 'message': str(e), 'report': None, 'outputs': [], 'duration': 0}
        return await command.execute(**kwargs)


# 全局实例
_unified_command_manager = None


def get_unified_command_manager() -> UnifiedCommandManager:
    """获取统一命令管理器实例"""
    global _unified_command_manager
    # reload_config 之后跟随新的配置实例
    if _unified_command_manager is None or _unified_command_manager.config is not get_config_manager():
        _unified_command_manager = UnifiedCommandManager()
    return _unified_command_manager
