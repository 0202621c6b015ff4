"""
矩阵文件读写 - {"n": 整数, "data": 行优先的 n² 个数, "name": 可选名称}
"""
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .errors import InputError
from .spectral import as_symmetric

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class MatrixFile:
    """已解析的矩阵文件"""
    path: Path
    n: int
    matrix: np.ndarray
    name: Optional[str]
    digest: str


def _read_document(path: PathLike) -> Dict[str, Any]:
    file_path = Path(path)
    if not file_path.exists():
        raise InputError(f"文件不存在: {file_path}")
    raw = file_path.read_bytes()
    try:
        doc = json.loads(raw.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InputError(f"JSON 解析失败 {file_path}: {e}") from e
    if not isinstance(doc, dict) or 'data' not in doc or 'n' not in doc:
        raise InputError(f"{file_path} 必须包含 'n' 和 'data' 字段")
    doc['_digest'] = hashlib.sha256(raw).hexdigest()
    return doc


def _dimension(doc: Dict[str, Any], path: PathLike) -> int:
    n = doc['n']
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InputError(f"{path}: n 必须是正整数, 实际 {n!r}")
    return n


def load_matrix(path: PathLike, symmetric: bool = False, tol: float = 1e-8) -> MatrixFile:
    """
    读取矩阵文件

    Args:
        path: 文件路径
        symmetric: A/B 槽位为 True，非对称超过 tol 时报错，否则精确对称化
        tol: 对称性容差
    """
    doc = _read_document(path)
    n = _dimension(doc, path)
    data = doc['data']
    if not isinstance(data, list) or len(data) != n * n:
        raise InputError(f"{path}: data 长度应为 n² = {n * n}, 实际 {len(data) if isinstance(data, list) else type(data).__name__}")
    try:
        matrix = np.array(data, dtype=float).reshape(n, n)
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: data 含有非数值元素") from e
    if symmetric:
        matrix = as_symmetric(matrix, tol=tol, name=str(path))
    logger.debug(f"读取矩阵 {path}: n={n}")
    return MatrixFile(Path(path), n, matrix, doc.get('name'), doc['_digest'])


def load_vector(path: PathLike) -> MatrixFile:
    """读取向量文件 {"n", "data"}，data 长度为 n"""
    doc = _read_document(path)
    n = _dimension(doc, path)
    data = doc['data']
    if not isinstance(data, list) or len(data) != n:
        raise InputError(f"{path}: 向量 data 长度应为 {n}")
    try:
        vector = np.array(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: data 含有非数值元素") from e
    return MatrixFile(Path(path), n, vector, doc.get('name'), doc['_digest'])


def save_matrix(path: PathLike, matrix: np.ndarray, name: Optional[str] = None) -> Path:
    """保存为矩阵文件，数值按 repr 写出"""
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim == 1:
        n = int(arr.size)
    elif arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        n = int(arr.shape[0])
    else:
        raise InputError(f"只能保存方阵或向量, 实际形状 {arr.shape}")
    doc: Dict[str, Any] = {'n': n, 'data': [float(x) for x in arr.reshape(-1)]}
    if name:
        doc['name'] = name
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(doc, sort_keys=True, ensure_ascii=False) + "\n", encoding='utf-8')
    return target
