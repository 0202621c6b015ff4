"""
运行报告 - JSON 报告序列化与 CSV 导出

浮点数按 repr 输出（最短往返表示，至多 17 位有效数字），键排序，
相同输入重复运行得到逐字节相同的输出。
"""
import csv
import hashlib
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import aiofiles
import numpy as np

from .config_manager import TOOL_VERSION

logger = logging.getLogger(__name__)

STRIP_HEADER = ("re_z", "im_z", "re_F", "im_F", "abs_F")
CAMPAIGN_HEADER = ("trial", "n", "r", "d", "ratio", "c_cert", "verdict")
HISTORY_HEADER = ("restart", "iteration", "best_value")
PROFILE_HEADER = ("y", "re_f", "g")


def to_jsonable(value: Any) -> Any:
    """numpy / dataclass 报告转为可 JSON 序列化的纯 Python 对象，非有限数写成字符串"""
    if hasattr(value, "to_dict") and callable(value.to_dict):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': to_jsonable(float(value.real)), 'im': to_jsonable(float(value.imag))}
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    if isinstance(value, Path):
        return str(value)
    return value


def dumps(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, ensure_ascii=False, indent=2, allow_nan=False)


def inputs_digest(digests: Iterable[str], parameters: Dict[str, Any]) -> str:
    """输入文件摘要与参数合成的 sha256"""
    h = hashlib.sha256()
    for d in digests:
        h.update(d.encode('ascii'))
    h.update(json.dumps(to_jsonable(parameters), sort_keys=True).encode('utf-8'))
    return h.hexdigest()


@dataclass
class RunReport:
    """一次子命令运行的完整报告"""
    subcommand: str
    parameters: Dict[str, Any]
    results: Any
    seed: Optional[int] = None
    input_digests: List[str] = field(default_factory=list)
    tool_version: str = TOOL_VERSION

    @property
    def digest(self) -> str:
        return inputs_digest(self.input_digests, self.parameters)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subcommand': self.subcommand,
            'parameters': self.parameters,
            'results': self.results,
            'seed': self.seed,
            'inputs_digest': self.digest,
            'tool_version': self.tool_version,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """',' 分隔、'\\n' 换行的 CSV 文本"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def write_text(path: Union[str, Path], text: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    logger.debug(f"已写入 {target}")
    return target


async def write_text_async(path: Union[str, Path], text: str) -> Path:
    """MCP 工具使用的异步写入"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    async with aiofiles.open(target, 'w', encoding='utf-8', newline='') as f:
        await f.write(text)
    logger.debug(f"已异步写入 {target}")
    return target


def campaign_rows(records) -> List[tuple]:
    return [(rec.trial, rec.n, rec.r, rec.d, rec.ratio, rec.c_cert, rec.verdict) for rec in records]
