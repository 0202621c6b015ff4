#!/usr/bin/env python3
"""
opnorm 命令行 - check / refine / equality / strip / approx / fuzz / selftest

报告 JSON 写到 stdout，日志与提示写到 stderr。
退出码：0 成功，1 输入错误，2 实现检测到数学上的违反。
"""
import argparse
import asyncio
import sys
from typing import List, Optional, Tuple

from core.config_manager import reload_config
from core.unified_command_manager import INEQUALITIES, get_unified_command_manager


def _grid(value: str) -> Tuple[int, int]:
    try:
        nx, nt = (int(part) for part in value.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"--grid 需要 nx,nt 形式: {value}") from e
    return nx, nt


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opnorm", description="算子范数不等式工具箱")
    parser.add_argument("--settings", help="配置文件路径（默认 config/opnorm_config.json）")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="求值不等式")
    check.add_argument("files", nargs="+", help="A.json X.json B.json（cordes / loewner-heinz / heinz-kato 为 A.json B.json）")
    check.add_argument("--ineq", choices=INEQUALITIES, default="mcintosh")
    check.add_argument("--r", type=float)
    check.add_argument("--s", type=float)
    check.add_argument("--T", dest="T")
    check.add_argument("--alpha", type=float)
    check.add_argument("--x")
    check.add_argument("--y")

    refine = sub.add_parser("refine", help="改进不等式与 c_cert")
    refine.add_argument("files", nargs="+")
    refine.add_argument("--ineq", choices=("mcintosh", "cordes"), default="mcintosh")
    refine.add_argument("--r", type=float)
    refine.add_argument("--s", type=float)
    refine.add_argument("--side", choices=("left", "right", "auto"))

    equality = sub.add_parser("equality", help="等号情形分析")
    equality.add_argument("files", nargs="+")
    equality.add_argument("--ineq", choices=("mcintosh", "cordes"), default="mcintosh")
    equality.add_argument("--r", type=float)
    equality.add_argument("--s", type=float)
    equality.add_argument("--v")

    strip = sub.add_parser("strip", help="带形函数网格")
    strip.add_argument("files", nargs="+")
    strip.add_argument("--r", type=float)
    strip.add_argument("--grid", type=_grid)
    strip.add_argument("--tmax", type=float)
    strip.add_argument("--out")
    strip.add_argument("--v")

    approx = sub.add_parser("approx", help="逼近问题探索")
    approx.add_argument("--n", type=int, default=2)
    approx.add_argument("--class", dest="kind", choices=("H", "G"), default="H")
    approx.add_argument("--delta", type=float, default=1.0)
    approx.add_argument("--r", type=float, default=0.5)
    approx.add_argument("--budget", type=int, default=1000)
    approx.add_argument("--seed", type=int)
    approx.add_argument("--out")
    approx.add_argument("--profile")

    fuzz = sub.add_parser("fuzz", help="随机测试活动")
    fuzz.add_argument("--config", help="JSON/YAML 文件或 core/configs 下的预设名")
    fuzz.add_argument("--jobs", type=int)
    fuzz.add_argument("--seed", type=int)
    fuzz.add_argument("--trials", type=int)
    fuzz.add_argument("--out")

    selftest = sub.add_parser("selftest", help="内置验收套件")
    selftest.add_argument("--quick", action="store_true")
    selftest.add_argument("--only", nargs="*")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse 的用法错误统一为输入错误
        return 0 if e.code == 0 else 1
    if args.settings:
        reload_config(args.settings)
    manager = get_unified_command_manager()
    params = {k: v for k, v in vars(args).items() if k not in ("command", "settings")}
    if params.get("side") == "auto":
        params["side"] = None

    result = asyncio.run(manager.execute(args.command, **params))
    if result['report'] is not None:
        sys.stdout.write(result['report'].to_json())
    print(result['message'], file=sys.stderr)
    for path in result['outputs']:
        print(f"📄 {path}", file=sys.stderr)
    return int(result['exit_code'])


if __name__ == "__main__":
    sys.exit(main())
