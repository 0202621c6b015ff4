"""
命令行测试：退出码、stdout 报告与输出文件
"""
import dataclasses
import json
import math

import pytest

import cli
from core import refinement


def _sample(samples_dir, name):
    return str(samples_dir / f"{name}.json")


def _run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_mcintosh(samples_dir, capsys):
    files = [_sample(samples_dir, s) for s in ("A", "X", "B")]
    code, out, _ = _run(["check", *files, "--ineq", "mcintosh", "--r", "0.3"], capsys)
    assert code == 0
    report = json.loads(out)
    assert report['subcommand'] == "check"
    assert report['results']['status'] == "holds"
    assert report['results']['ratio'] <= 1.0
    assert len(report['inputs_digest']) == 64


@pytest.mark.parametrize("ineq, extra", [
    ("cordes", ["--s", "0.5"]),
    ("fujii", []),
    ("loewner-heinz", ["--alpha", "0.5"]),
])
def test_check_other_inequalities(samples_dir, capsys, ineq, extra):
    names = ("A", "X", "B") if ineq == "fujii" else ("A", "B")
    files = [_sample(samples_dir, s) for s in names]
    code, out, _ = _run(["check", *files, "--ineq", ineq, *extra], capsys)
    assert code == 0
    assert json.loads(out)['results']['status'] in ("holds", "precondition-unmet")


def test_check_heinz_kato(samples_dir, capsys):
    files = [_sample(samples_dir, s) for s in ("A", "B")]
    argv = [
        "check", *files, "--ineq", "heinz-kato", "--alpha", "0.4",
        "--T", _sample(samples_dir, "T"), "--x", _sample(samples_dir, "x"), "--y", _sample(samples_dir, "y"),
    ]
    code, out, _ = _run(argv, capsys)
    assert code == 0
    results = json.loads(out)['results']
    assert results['status'] == "holds"
    assert results['parameters']['hypotheses_verified'] is True


def test_refine(samples_dir, capsys):
    files = [_sample(samples_dir, s) for s in ("A", "X", "B")]
    code, out, _ = _run(["refine", *files, "--r", "0.5", "--side", "auto"], capsys)
    assert code == 0
    results = json.loads(out)['results']
    assert results['certificate'] == "certified"
    assert results['d'] > 0
    assert results['ratio'] <= 1.0 - results['c_cert'] + 1e-9
    assert results['margin'] >= -1e-9


def test_refine_commuting_pair_has_no_certificate(samples_dir, capsys):
    files = [_sample(samples_dir, "commuting_A"), _sample(samples_dir, "commuting_B")]
    code, out, _ = _run(["refine", *files, "--ineq", "cordes", "--s", "0.5"], capsys)
    assert code == 0
    results = json.loads(out)['results']
    assert results['certificate'] == "no certificate"
    assert results['c_cert'] is None


def test_refine_ratio_above_certified_bound_exits_two(samples_dir, capsys, monkeypatch):
    original = refinement.certified_improvement

    def inflated(*args, **kwargs):
        bound = original(*args, **kwargs)
        return dataclasses.replace(bound, c_cert=0.999999, log_c_cert=math.log(0.999999))

    monkeypatch.setattr(refinement, "certified_improvement", inflated)
    files = [_sample(samples_dir, s) for s in ("A", "X", "B")]
    code, out, _ = _run(["refine", *files, "--r", "0.5"], capsys)
    assert code == 2
    results = json.loads(out)['results']
    assert results['certificate'] == "violated"
    assert results['margin'] < 0


def test_equality_cordes_commuting_pair(samples_dir, capsys):
    files = [_sample(samples_dir, "commuting_A"), _sample(samples_dir, "commuting_B")]
    code, out, _ = _run(["equality", *files, "--ineq", "cordes", "--s", "0.5"], capsys)
    assert code == 0
    results = json.loads(out)['results']
    assert results['verdict']['overall'] == "consistent-with-equality"
    assert results['transfer']['status'] == "transfers"


def test_equality_with_vector_file(samples_dir, capsys):
    files = [_sample(samples_dir, s) for s in ("A", "X", "B")]
    code, out, _ = _run(["equality", *files, "--v", _sample(samples_dir, "v")], capsys)
    assert code == 0
    report = json.loads(out)
    assert report['parameters']['v'] == "file"
    assert report['results']['verdict']['near_equality'] is False


def test_strip_writes_csv(samples_dir, tmp_path, capsys):
    files = [_sample(samples_dir, s) for s in ("A", "X", "B")]
    out_path = tmp_path / "grid.csv"
    code, out, _ = _run(["strip", *files, "--r", "0.5", "--grid", "3,11", "--tmax", "5", "--out", str(out_path)], capsys)
    assert code == 0
    lines = out_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "re_z,im_z,re_F,im_F,abs_F"
    assert len(lines) == 1 + 3 * 11
    results = json.loads(out)['results']
    assert results['boundary_max'] <= 1.0 + 1e-9
    assert results['reconstruction']['within_tolerance'] is True


def test_approx_is_reproducible(tmp_path, capsys):
    argv = ["approx", "--n", "1", "--class", "H", "--delta", "1.0", "--budget", "6", "--seed", "4",
            "--out", str(tmp_path / "history.csv"), "--profile", str(tmp_path / "profile.csv")]
    code, first, _ = _run(argv, capsys)
    assert code == 0
    history = (tmp_path / "history.csv").read_text(encoding="utf-8")
    code, second, _ = _run(argv, capsys)
    assert first == second
    assert (tmp_path / "history.csv").read_text(encoding="utf-8") == history
    assert history.startswith("restart,iteration,best_value\n")
    assert (tmp_path / "profile.csv").read_text(encoding="utf-8").startswith("y,re_f,g\n")
    report = json.loads(first)
    assert report['seed'] == 4
    assert report['results']['evaluations'] == 6


def test_fuzz_preset(tmp_path, capsys):
    out_path = tmp_path / "campaign.csv"
    code, out, _ = _run(["fuzz", "--config", "smoke", "--trials", "4", "--out", str(out_path)], capsys)
    assert code == 0
    summary = json.loads(out)['results']['summary']
    assert summary['trials'] == 4
    assert summary['violations'] == 0
    assert out_path.read_text(encoding="utf-8").startswith("trial,n,r,d,ratio,c_cert,verdict\n")


def test_selftest_subset(capsys):
    code, out, _ = _run(["selftest", "--quick", "--only", "worked-example", "certificate"], capsys)
    assert code == 0
    results = json.loads(out)['results']
    assert results['passed'] is True
    assert [r['name'] for r in results['results']] == ["worked-example", "certificate"]


@pytest.mark.parametrize("argv", [
    ["check", "missing-A.json", "missing-X.json", "missing-B.json"],
    ["check", "--ineq", "unknown", "a.json"],
    ["approx", "--r", "1.5"],
    ["nonsense"],
])
def test_input_errors_exit_one(argv, capsys):
    code, out, _ = _run(argv, capsys)
    assert code == 1
    assert out == ""


def test_wrong_slot_count_is_input_error(samples_dir, capsys):
    code, _, err = _run(["check", _sample(samples_dir, "A"), _sample(samples_dir, "B")], capsys)
    assert code == 1
    assert "需要 3 个矩阵文件" in err


def test_indefinite_matrix_is_input_error(write_matrix, samples_dir, capsys):
    bad = write_matrix("indefinite", [[1.0, 0.0], [0.0, -1.0]])
    eye = write_matrix("eye", [[1.0, 0.0], [0.0, 1.0]])
    code, _, _ = _run(["check", bad, eye, eye], capsys)
    assert code == 1


def test_settings_flag(tmp_path, samples_dir, capsys):
    settings = tmp_path / "custom.json"
    files = [_sample(samples_dir, s) for s in ("A", "X", "B")]
    code, _, _ = _run(["--settings", str(settings), "check", *files], capsys)
    assert code == 0
    assert settings.exists()
