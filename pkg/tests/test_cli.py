"""Command-line front end: report formats, determinism, exit codes."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from telesim.cli import main

GOLDEN_DIR = Path(__file__).resolve().parents[1] / "src" / "telesim" / "golden"
ACAUSAL = Path(__file__).resolve().parent / "fixtures" / "acausal.tls"
GOLDEN = GOLDEN_DIR / "delayed_telefilter.tls"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_protocols_list_names_everything(capsys):
    code, out, _ = run_cli(capsys, "protocols", "list")
    assert code == 0
    for name in (
        "atemporal_telefilter",
        "delayed_telemirror",
        "nodelay_independent",
        "nmode_nodelay_telefilter",
    ):
        assert name in out


def test_protocols_build_emits_the_golden_text(capsys):
    code, out, _ = run_cli(capsys, "protocols", "build", "delayed_telefilter")
    assert code == 0
    assert out == GOLDEN.read_text()


def test_protocols_build_accepts_typed_params(capsys):
    code, out, _ = run_cli(
        capsys, "protocols", "build", "nmode_delayed_telefilter",
        "--param", "n=4", "--param", "alphas=0.5,0.5,0.5",
    )
    assert code == 0
    assert "mode signal j4" in out


def test_run_text_report_mentions_ports_and_verdicts(capsys):
    code, out, _ = run_cli(capsys, "run", str(GOLDEN))
    assert code == 0
    assert "selected" in out and "orthogonal" in out
    assert "causal" in out
    assert "mode_selective" in out
    assert "limit scale: 20" in out


def test_run_machine_report_is_byte_deterministic(capsys):
    code, first, _ = run_cli(capsys, "run", str(GOLDEN), "--format", "machine")
    assert code == 0
    code, second, _ = run_cli(capsys, "run", str(GOLDEN), "--format", "machine")
    assert code == 0
    assert first == second
    payload = json.loads(first)
    # canonical encoding: sorted keys, trailing newline, no negative zero
    assert first == json.dumps(payload, sort_keys=True, indent=2) + "\n"
    assert "-0.0" not in first
    assert payload["tool"]["name"] == "telesim"
    assert payload["protocol"] == "delayed_telefilter"
    assert payload["causality"]["verdict"] == "causal"
    assert payload["causality"]["mandatory_delay"] == 1
    assert payload["selectivity"]["verdict"] == "mode_selective"
    outputs = payload["outputs"]
    assert outputs["orthogonal"]["coefficients"]["u0"] == [1.0, 0.0, 0.0, 0.0]


def test_run_coefficients_are_rounded_to_12_significant_digits(capsys):
    _, out, _ = run_cli(capsys, "run", str(GOLDEN), "--format", "machine")
    selected = json.loads(out)["outputs"]["selected"]["coefficients"]
    assert selected["j1"][0] == 0.707106781187
    assert selected["j2"][1] == 0.0


def test_run_param_override_is_echoed(capsys):
    _, out, _ = run_cli(
        capsys, "run", str(GOLDEN), "--format", "machine", "--param", "s=1.5"
    )
    payload = json.loads(out)
    assert payload["parameters"]["s"] == 1.5
    assert payload["limit_parameters"] == []


def test_run_writes_out_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = run_cli(
        capsys, "run", str(GOLDEN), "--format", "machine", "--out", str(target)
    )
    assert code == 0
    assert json.loads(target.read_text())["protocol"] == "delayed_telefilter"


def test_limit_scale_env_var(capsys, monkeypatch):
    monkeypatch.setenv("TELESIM_LIMIT_SCALE", "7")
    _, out, _ = run_cli(capsys, "run", str(GOLDEN), "--format", "machine")
    assert json.loads(out)["limit_scale"] == 7.0


@pytest.mark.parametrize("path", sorted(GOLDEN_DIR.glob("*.tls")), ids=lambda p: p.stem)
def test_verify_passes_on_every_golden(capsys, path):
    code, out, _ = run_cli(capsys, "verify", str(path))
    assert code == 0, out
    assert "FAIL" not in out


def test_verify_flags_the_acausal_fixture(capsys):
    code, out, _ = run_cli(capsys, "verify", str(ACAUSAL))
    assert code == 1
    assert "acausal" in out


def test_limits_command_reports_convergence(capsys):
    code, out, _ = run_cli(capsys, "limits", str(GOLDEN), "--param", "s")
    assert code == 0
    assert "converged" in out


def test_limits_rejects_undeclared_parameter(capsys):
    code, _, err = run_cli(capsys, "limits", str(GOLDEN), "--param", "zz")
    assert code == 2
    assert "zz" in err


def test_usage_errors_exit_2(capsys):
    assert run_cli(capsys, "run", "/no/such/file.tls")[0] == 2
    assert run_cli(capsys, "protocols", "build", "bogus")[0] == 2
    assert run_cli(capsys, "run", str(GOLDEN), "--param", "not-an-assignment")[0] == 2
    assert run_cli(capsys, "frobnicate")[0] == 2


def test_parse_errors_exit_2_with_location(tmp_path, capsys):
    bad = tmp_path / "bad.tls"
    bad.write_text("mode vacuum v rail=r bin=0\noutput x = nosuch\n")
    code, _, err = run_cli(capsys, "run", str(bad))
    assert code == 2
    assert "line 2" in err and "column 12" in err


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "telesim.cli", "protocols", "list"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "nodelay_telemirror" in proc.stdout
