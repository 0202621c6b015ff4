"""
配置管理器 - 管理 opnorm 工具箱的数值容差、网格、搜索与日志配置
"""
import json
import logging
import os
from pathlib import Path
from typing import Optional, List
from dataclasses import dataclass, asdict, field, fields

logger = logging.getLogger(__name__)

TOOL_VERSION = "1.0.0"
SEED_ENV_VAR = "OPNORM_SEED"


@dataclass
class NumericsSettings:
    """线性代数与容差设置"""
    eigensolver: str = "jacobi"  # jacobi / lapack
    max_sweeps: int = 100
    offdiag_rel_tol: float = 1e-14
    cluster_rel_tol: float = 1e-8
    spd_floor_rel: float = 1e-12
    inequality_tol: float = 1e-9
    equality_rel_tol: float = 1e-7
    visibility_rel_tol: float = 1e-9
    near_equality: float = 1e-8


@dataclass
class RefinementSettings:
    """改进常数计算设置"""
    quad_tol: float = 1e-10
    max_intervals: int = 200000
    window_rule: str = "sqrt_n"  # sqrt_n / coefficient
    soundness_slack: float = 1e-9


@dataclass
class StripSettings:
    """带形区域网格设置"""
    x_points: int = 21
    t_points: int = 801
    t_max: float = 40.0
    t_window: float = 40.0
    reconstruct_tol: float = 1e-8


@dataclass
class ApproxSettings:
    """逼近问题探索设置"""
    window: float = 200.0
    samples: int = 20001
    refine_top: int = 10
    pairing_cutoff: float = 50.0
    pairing_tol: float = 1e-9
    deflation: float = 0.999
    stall_limit: int = 20


@dataclass
class FuzzSettings:
    """随机测试活动默认值"""
    n_min: int = 2
    n_max: int = 6
    spectrum_min: float = 1e-2
    spectrum_max: float = 1e2
    trials: int = 100
    seed: int = 20240813
    r_grid: List[float] = field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    mode: str = "mcintosh"
    parallel_jobs: int = 1


@dataclass
class OutputSettings:
    """输出设置"""
    output_dir: str = "output"
    tool_version: str = TOOL_VERSION


@dataclass
class LoggingSettings:
    """日志设置"""
    log_level: str = "INFO"
    log_format: str = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class ConfigManager:
    """配置管理器"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file or str(Path(__file__).parent.parent / "config" / "opnorm_config.json")
        self.config_path = Path(self.config_file)

        # 默认配置
        self.numerics_settings = NumericsSettings()
        self.refinement_settings = RefinementSettings()
        self.strip_settings = StripSettings()
        self.approx_settings = ApproxSettings()
        self.fuzz_settings = FuzzSettings()
        self.output_settings = OutputSettings()
        self.logging_settings = LoggingSettings()

        # 加载配置
        self.load_config()

    _GROUPS = {
        'numerics_settings': NumericsSettings,
        'refinement_settings': RefinementSettings,
        'strip_settings': StripSettings,
        'approx_settings': ApproxSettings,
        'fuzz_settings': FuzzSettings,
        'output_settings': OutputSettings,
        'logging_settings': LoggingSettings,
    }

    def load_config(self) -> None:
        """加载配置文件"""
        if self.config_path.exists():
            try:
                with open(self.config_path, 'r', encoding='utf-8') as f:
                    config_data = json.load(f)

                for key, cls in self._GROUPS.items():
                    if key in config_data:
                        setattr(self, key, cls(**self._known_fields(key, cls, config_data[key])))

                logger.debug(f"配置已从 {self.config_path} 加载")
            except Exception as e:
                logger.warning(f"配置文件加载失败，使用默认配置: {e}")
        else:
            logger.info(f"配置文件不存在，使用默认配置: {self.config_path}")
            self.save_config()

    @staticmethod
    def _known_fields(group: str, cls: type, data: dict) -> dict:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            logger.warning(f"⚠️ 忽略 {group} 中的未知配置项: {unknown}")
        return {k: v for k, v in data.items() if k in known}

    def save_config(self) -> None:
        """保存配置文件"""
        config_data = {key: asdict(getattr(self, key)) for key in self._GROUPS}

        try:
            self.config_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_path, 'w', encoding='utf-8') as f:
                json.dump(config_data, f, indent=2, ensure_ascii=False)
            logger.debug(f"配置已保存到 {self.config_path}")
        except Exception as e:
            logger.error(f"配置保存失败: {e}")

    def _update(self, group: str, **kwargs) -> None:
        settings = getattr(self, group)
        for key, value in kwargs.items():
            if hasattr(settings, key):
                setattr(settings, key, value)
            else:
                logger.warning(f"忽略未知配置项 {group}.{key}")
        self.save_config()

    def update_numerics_settings(self, **kwargs) -> None:
        """更新数值设置"""
        self._update('numerics_settings', **kwargs)

    def update_refinement_settings(self, **kwargs) -> None:
        """更新改进常数设置"""
        self._update('refinement_settings', **kwargs)

    def update_strip_settings(self, **kwargs) -> None:
        """更新带形网格设置"""
        self._update('strip_settings', **kwargs)

    def update_approx_settings(self, **kwargs) -> None:
        """更新逼近探索设置"""
        self._update('approx_settings', **kwargs)

    def update_fuzz_settings(self, **kwargs) -> None:
        """更新随机测试设置"""
        self._update('fuzz_settings', **kwargs)

    def update_output_settings(self, **kwargs) -> None:
        """更新输出设置"""
        self._update('output_settings', **kwargs)

    def update_logging_settings(self, **kwargs) -> None:
        """更新日志设置"""
        self._update('logging_settings', **kwargs)

    def resolve_seed(self, seed: Optional[int] = None) -> int:
        """环境变量 OPNORM_SEED 优先于参数和配置"""
        env_value = os.environ.get(SEED_ENV_VAR)
        if env_value not in (None, ""):
            return int(env_value)
        if seed is not None:
            return int(seed)
        return int(self.fuzz_settings.seed)

    def get_config_summary(self) -> str:
        """获取配置摘要"""
        num = self.numerics_settings
        ref = self.refinement_settings
        strip = self.strip_settings
        apx = self.approx_settings
        fz = self.fuzz_settings
        return f"""
📋 opnorm 工具箱配置摘要

🔢 数值设置:
- 特征值求解器: {num.eigensolver} (最多 {num.max_sweeps} 轮)
- 非对角收敛阈值: {num.offdiag_rel_tol:g} · 范数
- 聚类容差: {num.cluster_rel_tol:g} · max(1, 范数)
- 不等式容差: {num.inequality_tol:g}
- 特征向量残差容差: {num.equality_rel_tol:g} · max(1, ‖A‖)

📐 改进常数:
- 求积容差: {ref.quad_tol:g}
- 窗口规则: {ref.window_rule}
- 可靠性松弛: {ref.soundness_slack:g}

🌊 带形网格:
- x 点数: {strip.x_points}, t 点数: {strip.t_points}, t 范围: ±{strip.t_max:g}

🔍 逼近探索:
- 上确界窗口: ±{apx.window:g}, 采样点数: {apx.samples}
- 配对截断: {apx.pairing_cutoff:g}, 收缩因子: {apx.deflation}

🎲 随机测试:
- n 范围: {fz.n_min}..{fz.n_max}, 谱范围: [{fz.spectrum_min:g}, {fz.spectrum_max:g}]
- 试验次数: {fz.trials}, 种子: {fz.seed}, 模式: {fz.mode}, 并行任务数: {fz.parallel_jobs}

📝 日志级别: {self.logging_settings.log_level}
"""

    def reset_to_defaults(self) -> None:
        """重置为默认配置"""
        for key, cls in self._GROUPS.items():
            setattr(self, key, cls())
        self.save_config()


# 全局配置实例
_config_manager = None

def get_config_manager() -> ConfigManager:
    """获取配置管理器实例"""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager

def reload_config(config_file: Optional[str] = None) -> ConfigManager:
    """重新加载配置"""
    global _config_manager
    _config_manager = ConfigManager(config_file)
    return _config_manager
