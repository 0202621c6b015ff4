"""
矩阵文件读写测试
"""
import hashlib
import json

import numpy as np
import pytest

from core.errors import InputError
from core.matrix_files import load_matrix, load_vector, save_matrix


def _write(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_load_matrix_row_major(tmp_path):
    path = _write(tmp_path / "X.json", {"n": 2, "data": [1, 2, 3, 4], "name": "X"})
    loaded = load_matrix(path)
    np.testing.assert_array_equal(loaded.matrix, [[1.0, 2.0], [3.0, 4.0]])
    assert loaded.n == 2
    assert loaded.name == "X"
    assert loaded.digest == hashlib.sha256(path.read_bytes()).hexdigest()


def test_symmetric_slot_symmetrizes_small_asymmetry(tmp_path):
    path = _write(tmp_path / "A.json", {"n": 2, "data": [2.0, 1.0, 1.0 + 1e-12, 2.0]})
    matrix = load_matrix(path, symmetric=True).matrix
    assert np.array_equal(matrix, matrix.T)


def test_symmetric_slot_rejects_asymmetry(tmp_path):
    path = _write(tmp_path / "A.json", {"n": 2, "data": [2.0, 1.0, 0.0, 2.0]})
    with pytest.raises(InputError):
        load_matrix(path, symmetric=True)


@pytest.mark.parametrize("payload", [
    {"n": 2, "data": [1, 2, 3]},
    {"n": 0, "data": []},
    {"n": "2", "data": [1, 2, 3, 4]},
    {"data": [1]},
    {"n": 1, "data": ["a"]},
])
def test_malformed_documents(tmp_path, payload):
    path = _write(tmp_path / "bad.json", payload)
    with pytest.raises(InputError):
        load_matrix(path)


def test_missing_and_invalid_json(tmp_path):
    with pytest.raises(InputError):
        load_matrix(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(InputError):
        load_matrix(broken)


def test_vector_files(tmp_path):
    path = _write(tmp_path / "v.json", {"n": 3, "data": [0.0, 1.0, 0.0]})
    np.testing.assert_array_equal(load_vector(path).matrix, [0.0, 1.0, 0.0])
    with pytest.raises(InputError):
        load_vector(_write(tmp_path / "w.json", {"n": 3, "data": [1.0]}))


def test_save_matrix_preserves_values(tmp_path):
    M = np.array([[0.1, 1.0 / 3.0], [2.0 ** -40, -7.25]])
    path = save_matrix(tmp_path / "out" / "M.json", M, name="M")
    loaded = load_matrix(path)
    assert np.array_equal(loaded.matrix, M)
    assert loaded.name == "M"
    with pytest.raises(InputError):
        save_matrix(tmp_path / "bad.json", np.ones((2, 3)))


def test_sample_files_load(samples_dir):
    A = load_matrix(samples_dir / "A.json", symmetric=True)
    X = load_matrix(samples_dir / "X.json")
    B = load_matrix(samples_dir / "B.json", symmetric=True)
    assert A.n == X.n == B.n == 3
