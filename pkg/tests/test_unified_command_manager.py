"""
统一命令管理器测试
"""
import pytest

from core.unified_command_manager import INEQUALITIES, get_unified_command_manager


@pytest.fixture
def manager():
    return get_unified_command_manager()


def test_supported_commands(manager):
    assert manager.get_supported_commands() == ["check", "refine", "equality", "strip", "approx", "fuzz", "selftest"]
    assert "heinz-kato" in INEQUALITIES
    for name in manager.get_supported_commands():
        assert manager.get_command(name).get_description()


def test_manager_follows_reloaded_config(isolated_config, manager):
    assert manager.config is isolated_config


@pytest.mark.asyncio
async def test_unknown_command(manager):
    result = await manager.execute("nope")
    assert result['exit_code'] == 1
    assert result['report'] is None


@pytest.mark.asyncio
async def test_check_execute(manager, samples_dir):
    files = [str(samples_dir / f"{s}.json") for s in ("A", "X", "B")]
    result = await manager.execute("check", files=files, ineq="mcintosh", r=0.5)
    assert result['success']
    assert result['report'].results.status == "holds"
    assert len(result['report'].input_digests) == 3


@pytest.mark.asyncio
async def test_exponent_out_of_range(manager, samples_dir):
    files = [str(samples_dir / f"{s}.json") for s in ("A", "X", "B")]
    result = await manager.execute("check", files=files, r=1.5)
    assert result['exit_code'] == 1
    assert "r" in result['message']


@pytest.mark.asyncio
async def test_refine_rejects_other_inequalities(manager, samples_dir):
    files = [str(samples_dir / f"{s}.json") for s in ("A", "B")]
    result = await manager.execute("refine", files=files, ineq="loewner-heinz")
    assert result['exit_code'] == 1


@pytest.mark.asyncio
async def test_strip_writes_file(manager, samples_dir, tmp_path):
    files = [str(samples_dir / f"{s}.json") for s in ("A", "X", "B")]
    out = tmp_path / "grid.csv"
    result = await manager.execute("strip", files=files, r=0.5, grid=(3, 5), tmax=2.0, out=str(out))
    assert result['success']
    assert result['outputs'] == [str(out)]
    assert out.exists()


@pytest.mark.asyncio
async def test_strip_needs_interior_column(manager, samples_dir):
    files = [str(samples_dir / f"{s}.json") for s in ("A", "X", "B")]
    result = await manager.execute("strip", files=files, r=0.5, grid=(2, 5), tmax=2.0)
    assert result['exit_code'] == 1
