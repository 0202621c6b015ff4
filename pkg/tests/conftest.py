"""
测试公共夹具
"""
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.config_manager import reload_config  # noqa: E402
from core.matrix_files import save_matrix  # noqa: E402

SAMPLES = Path(__file__).parent / "samples"


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """每个测试使用临时配置文件，且不受 OPNORM_SEED 影响"""
    monkeypatch.delenv("OPNORM_SEED", raising=False)
    return reload_config(str(tmp_path / "opnorm_config.json"))


@pytest.fixture
def samples_dir() -> Path:
    return SAMPLES


@pytest.fixture
def write_matrix(tmp_path):
    """矩阵或向量写成矩阵文件，返回路径字符串"""
    def _write(name, matrix):
        return str(save_matrix(tmp_path / f"{name}.json", matrix))
    return _write
