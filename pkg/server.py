#!/usr/bin/env python3
"""
OpNorm MCP Server - 算子范数不等式工具箱
基于 Model Context Protocol (MCP) 提供不等式求值、改进常数、等号分析、带形网格、逼近探索和随机测试

stdio 传输占用 stdout，启动信息写到 stderr。
"""

import sys
from pathlib import Path
from typing import List, Optional

from mcp.server.fastmcp import FastMCP

from core.config_manager import get_config_manager
from core.fuzz import list_presets
from core.unified_command_manager import get_unified_command_manager

SCRIPT_DIR = Path(__file__).parent.absolute()

config_manager = get_config_manager()
unified_command_manager = get_unified_command_manager()

print("⚙️  配置管理器已初始化", file=sys.stderr)
print("🧮 统一命令管理器已初始化", file=sys.stderr)

# 创建 MCP 服务器
mcp = FastMCP("OpNorm-Toolkit")


def _output_path(name: Optional[str], default: str) -> Optional[str]:
    """相对路径放在配置的输出目录下"""
    if name is None:
        return None
    path = Path(name or default)
    if not path.is_absolute():
        output_dir = Path(config_manager.output_settings.output_dir)
        if not output_dir.is_absolute():
            output_dir = SCRIPT_DIR / output_dir
        path = output_dir / path
    return str(path)


def _format_result(title: str, result: dict) -> str:
    if result['report'] is None:
        return f"❌ {title}失败: {result['message']}"
    status = "✅" if result['success'] else "❌"
    message = f"""{status} {title}完成!

💬 消息: {result['message']}
🔢 退出码: {result['exit_code']}
⏱️  耗时: {result['duration']}秒"""
    for path in result['outputs']:
        message += f"\n📄 输出文件: {path}"
    message += f"\n\n📋 报告:\n{result['report'].to_json()}"
    return message


# ===== 计算工具 =====

@mcp.tool()
async def check_inequality(
    files: List[str],
    ineq: str = "mcintosh",
    r: Optional[float] = None,
    s: Optional[float] = None,
    T: Optional[str] = None,
    alpha: Optional[float] = None,
    x: Optional[str] = None,
    y: Optional[str] = None,
) -> str:
    """
    求值算子范数不等式

    Args:
        files: 矩阵文件路径，mcintosh/fujii 为 [A, X, B]，cordes/heinz-kato/loewner-heinz 为 [A, B]
        ineq: mcintosh / cordes / fujii / heinz-kato / loewner-heinz
        r: McIntosh 指数
        s: Cordes 指数
        T: Heinz–Kato 的 T 矩阵文件
        alpha: Heinz–Kato / Löwner–Heinz 指数
        x: Heinz–Kato 的 x 向量文件
        y: Heinz–Kato 的 y 向量文件

    Returns:
        求值报告

    Use cases:
        - check_inequality(["A.json", "X.json", "B.json"], "mcintosh", r=0.5)
        - check_inequality(["A.json", "B.json"], "cordes", s=0.3)
    """
    try:
        result = await unified_command_manager.execute(
            "check", files=files, ineq=ineq, r=r, s=s, T=T, alpha=alpha, x=x, y=y,
        )
        return _format_result("不等式求值", result)
    except Exception as e:
        return f"❌ 不等式求值出错: {str(e)}"


@mcp.tool()
async def refine_inequality(
    files: List[str],
    ineq: str = "mcintosh",
    r: Optional[float] = None,
    s: Optional[float] = None,
    side: Optional[str] = None,
) -> str:
    """
    计算谱距离 d 与可证改进常数 c_cert

    Args:
        files: [A, X, B]（mcintosh）或 [A, B]（cordes）
        ineq: mcintosh / cordes
        r: McIntosh 指数
        s: Cordes 指数
        side: left / right，缺省自动选择

    Returns:
        d、见证下标、窗口 ℓ、c_cert、比值与余量
    """
    try:
        result = await unified_command_manager.execute("refine", files=files, ineq=ineq, r=r, s=s, side=side)
        return _format_result("改进常数计算", result)
    except Exception as e:
        return f"❌ 改进常数计算出错: {str(e)}"


@mcp.tool()
async def analyze_equality(
    files: List[str],
    ineq: str = "mcintosh",
    r: Optional[float] = None,
    s: Optional[float] = None,
    v: Optional[str] = None,
) -> str:
    """
    等号情形分析：逐聚类检查谱投影映射条件、公共特征值与等号传递

    Args:
        files: [A, X, B]（mcintosh）或 [A, B]（cordes）
        ineq: mcintosh / cordes
        r: McIntosh 指数
        s: Cordes 指数
        v: 单位向量文件，缺省取极值向量

    Returns:
        逐聚类判定报告
    """
    try:
        result = await unified_command_manager.execute("equality", files=files, ineq=ineq, r=r, s=s, v=v)
        return _format_result("等号分析", result)
    except Exception as e:
        return f"❌ 等号分析出错: {str(e)}"


@mcp.tool()
async def export_strip_grid(
    files: List[str],
    r: float = 0.5,
    nx: int = 21,
    nt: int = 801,
    tmax: float = 40.0,
    out: str = "strip_grid.csv",
) -> str:
    """
    在 0 ≤ Re z ≤ 1 的网格上求值 F(z) 并导出 CSV（re_z,im_z,re_F,im_F,abs_F）

    Args:
        files: [A, X, B]
        r: 指数
        nx: Re z 方向点数
        nt: Im z 方向点数
        tmax: Im z 范围 ±tmax
        out: CSV 文件名（相对路径放在输出目录下）
    """
    try:
        result = await unified_command_manager.execute(
            "strip", files=files, r=r, grid=(nx, nt), tmax=tmax, out=_output_path(out, "strip_grid.csv"),
        )
        return _format_result("带形网格导出", result)
    except Exception as e:
        return f"❌ 带形网格导出出错: {str(e)}"


@mcp.tool()
async def explore_approximation(
    n: int = 2,
    kind: str = "H",
    delta: float = 1.0,
    r: float = 0.5,
    budget: int = 1000,
    seed: Optional[int] = None,
    out: Optional[str] = "approx_history.csv",
    profile: Optional[str] = None,
) -> str:
    """
    在 𝓗/𝓖 类中搜索 ∫ f g 的上确界下界，并与 1 - c_cert 比较

    Args:
        n: 项数 n
        kind: H 或 G
        delta: 频率间隙 δ
        r: 密度参数
        budget: 求值次数上限
        seed: 随机种子（OPNORM_SEED 优先）
        out: 搜索历史 CSV
        profile: cos² 示例剖面 CSV（可选）
    """
    try:
        result = await unified_command_manager.execute(
            "approx", n=n, kind=kind, delta=delta, r=r, budget=budget, seed=seed,
            out=_output_path(out, "approx_history.csv"), profile=_output_path(profile, "approx_profile.csv"),
        )
        return _format_result("逼近探索", result)
    except Exception as e:
        return f"❌ 逼近探索出错: {str(e)}"


@mcp.tool()
async def run_fuzz_campaign(
    config: Optional[str] = None,
    jobs: Optional[int] = None,
    seed: Optional[int] = None,
    trials: Optional[int] = None,
    out: Optional[str] = "campaign.csv",
) -> str:
    """
    执行随机测试活动

    Args:
        config: JSON/YAML 配置文件或预设名（见 get_toolkit_status）
        jobs: 并行任务数
        seed: 随机种子
        trials: 覆盖试验次数
        out: 逐试验 CSV
    """
    try:
        result = await unified_command_manager.execute(
            "fuzz", config=config, jobs=jobs, seed=seed, trials=trials, out=_output_path(out, "campaign.csv"),
        )
        return _format_result("随机测试", result)
    except Exception as e:
        return f"❌ 随机测试出错: {str(e)}"


@mcp.tool()
async def run_selftest(quick: bool = True) -> str:
    """
    运行内置验收套件

    Args:
        quick: 缩小试验次数的冒烟模式
    """
    try:
        result = await unified_command_manager.execute("selftest", quick=quick)
        return _format_result("验收套件", result)
    except Exception as e:
        return f"❌ 验收套件出错: {str(e)}"


# ===== 配置管理工具 =====

@mcp.tool()
async def configure_toolkit(
    action: str = "show",
    setting_type: str = "all",
    settings: Optional[dict] = None,
) -> str:
    """
    查看或修改工具箱配置

    Args:
        action: show / update / reset
        setting_type: numerics / refinement / strip / approx / fuzz / output / logging / all
        settings: update 时的键值

    Use cases:
        - configure_toolkit("show", "all")
        - configure_toolkit("update", "numerics", {"eigensolver": "lapack"})
        - configure_toolkit("update", "fuzz", {"parallel_jobs": 4})
    """
    try:
        if action == "show":
            if setting_type == "all":
                return config_manager.get_config_summary()
            group = getattr(config_manager, f"{setting_type}_settings", None)
            if group is None:
                return f"❌ 未知设置类型: {setting_type}"
            lines = "\n".join(f"- {k}: {v}" for k, v in vars(group).items())
            return f"🔧 {setting_type} 设置:\n{lines}"

        elif action == "update":
            updater = getattr(config_manager, f"update_{setting_type}_settings", None)
            if updater is None:
                return f"❌ 未知设置类型: {setting_type}"
            updater(**(settings or {}))
            return f"✅ {setting_type} 设置已更新: {settings}"

        elif action == "reset":
            config_manager.reset_to_defaults()
            return "✅ 配置已重置为默认值"

        return f"❌ 未知操作: {action}"

    except Exception as e:
        return f"❌ 配置操作失败: {str(e)}"


@mcp.tool()
async def get_toolkit_status() -> str:
    """
    获取工具箱状态和配置信息
    """
    try:
        output_dir = Path(config_manager.output_settings.output_dir)
        if not output_dir.is_absolute():
            output_dir = SCRIPT_DIR / output_dir
        presets = list_presets()
        return f"""🔍 OpNorm 工具箱状态

🖥️  服务器信息:
- 服务器名称: OpNorm-Toolkit
- 工具版本: {config_manager.output_settings.tool_version}
- Python 版本: {sys.version.split()[0]}
- 配置文件: {config_manager.config_path}

📁 输出目录: {output_dir}
  状态: {'✅ 存在' if output_dir.exists() else '⚠️  不存在（将自动创建）'}

🧮 可用命令: {', '.join(unified_command_manager.get_supported_commands())}
🎲 随机测试预设: {', '.join(presets) if presets else '无'}
{config_manager.get_config_summary()}"""
    except Exception as e:
        return f"❌ 获取状态失败: {str(e)}"


# ===== 服务器启动 =====

def main():
    """主函数"""
    print("🚀 OpNorm MCP Server 已启动", file=sys.stderr)
    print("📋 可用工具:", file=sys.stderr)
    print("  🧮 计算工具:", file=sys.stderr)
    print("    - check_inequality: 不等式求值", file=sys.stderr)
    print("    - refine_inequality: 改进常数", file=sys.stderr)
    print("    - analyze_equality: 等号分析", file=sys.stderr)
    print("    - export_strip_grid: 带形网格导出", file=sys.stderr)
    print("    - explore_approximation: 逼近探索", file=sys.stderr)
    print("    - run_fuzz_campaign: 随机测试", file=sys.stderr)
    print("    - run_selftest: 验收套件", file=sys.stderr)
    print("  ⚙️  配置管理工具:", file=sys.stderr)
    print("    - configure_toolkit: 配置管理", file=sys.stderr)
    print("    - get_toolkit_status: 状态检查", file=sys.stderr)


def run():
    """opnorm-mcp-server 入口"""
    main()
    mcp.run()


if __name__ == "__main__":
    run()
