import numpy as np
import pytest

from prinn.config import EXPERIMENT_NAMES, parse_config
from prinn.experiments import (FILES, REGISTRY, Check, Table, VerificationReport,
                               list_experiments, output_root, run, verify)

SHORT = {
    "pinn-decay": "[train]\nepochs = 20\n",
    "fcinn-decay": "[train]\nepochs = 20\n[problem]\nenvelope_epochs = 20\n",
    "sinnet-oscillator": "[train]\nepochs = 20\n",
    "finn-case1": "[train]\nepochs = 20\n",
    "finn-derivative-case2": "[train]\nepochs = 20\n",
    "finn-controller": "[problem]\nhorizon = 100\n",
}

EXPECTED_CHECKS = {
    "pinn-decay": "max_abs_error",
    "fcinn-decay": "envelope_containment_ratio",
    "sinnet-oscillator": "ensemble_band_ratio",
    "finn-case1": "rule_attainment",
    "finn-derivative-case2": "rule_attainment",
    "finn-controller": "tracking_improvement_ratio",
}


def short_config(name):
    return parse_config(f"[experiment]\nname = {name}\n" + SHORT[name])


def test_registry_lists_six_with_anchors():
    rows = list_experiments()
    assert [r[0] for r in rows] == list(EXPERIMENT_NAMES)
    for name, desc, anchor in rows:
        assert desc and anchor
    assert set(REGISTRY) == set(EXPERIMENT_NAMES)


def test_report_round_trip():
    rep = VerificationReport("pinn-decay", [
        Check("a", 0.01, 0.05, "<", "small error"),
        Check("b", 1.0, 1.0, ">=", "all inside"),
        Check("c", 3.0, 2.0, "<=", "too big"),
    ])
    assert not rep.passed
    text = rep.to_text()
    assert "status=fail" in text and "check.a.status=pass" in text
    for line in text.splitlines():
        assert "=" in line
    back = VerificationReport.from_text(text)
    assert back.to_text() == text
    assert [c.passed for c in back.checks] == [True, True, False]


def test_report_passes_only_when_every_check_passes():
    ok = VerificationReport("x", [Check("a", 1.0, 2.0, "<", "")])
    assert ok.passed
    assert "status=pass" in ok.to_text()


def test_table_csv_round_trip_is_exact():
    t = Table.from_columns(t=np.linspace(0, 1, 7), x=np.exp(np.linspace(0, 1, 7)) / 3)
    back = Table.from_csv(t.to_csv())
    np.testing.assert_array_equal(back["x"], t["x"])
    assert t.to_csv().splitlines()[0] == "t,x"


@pytest.mark.parametrize("name", EXPERIMENT_NAMES)
def test_run_writes_artifacts_and_verify_agrees(name, tmp_path):
    art = run(short_config(name), tmp_path / name)
    for f in FILES:
        path = art.directory / f
        assert path.is_file() and path.read_text().strip()
    for f in ("telemetry.csv", "trajectory.csv"):
        header = (art.directory / f).read_text().splitlines()[0]
        assert "," in header and not header[0].isdigit()
    assert EXPECTED_CHECKS[name] in [c.name for c in art.report.checks]
    again = verify(art.directory)
    assert again.to_text() == art.report.to_text()
    assert (art.directory / "report.txt").read_text() == art.report.to_text()
    assert not [p for p in art.directory.iterdir() if p.name not in FILES]


@pytest.mark.parametrize("name", ["pinn-decay", "sinnet-oscillator", "finn-controller"])
def test_rerun_is_byte_identical(name, tmp_path):
    a = run(short_config(name), tmp_path / "a")
    b = run(short_config(name), tmp_path / "b")
    for f in ("telemetry.csv", "snapshot.csv", "trajectory.csv", "report.txt"):
        assert (a.directory / f).read_bytes() == (b.directory / f).read_bytes()


def test_verify_needs_the_files(tmp_path):
    with pytest.raises(FileNotFoundError, match="lacks"):
        verify(tmp_path)


def test_output_root_environment(tmp_path, monkeypatch):
    cfg = short_config("pinn-decay")
    monkeypatch.setenv("PRINN_OUTPUT_ROOT", str(tmp_path / "root"))
    assert output_root(cfg) == tmp_path / "root"
    art = run(cfg)
    assert art.directory == tmp_path / "root" / "pinn-decay"
    monkeypatch.delenv("PRINN_OUTPUT_ROOT")
    assert str(output_root(cfg)) == cfg.output_dir


def test_tampered_trajectory_is_caught_by_verify(tmp_path):
    art = run(parse_config("[experiment]\nname = pinn-decay\n[train]\nepochs = 1500\n"
                           "learning_rate = 1e-2\n"), tmp_path)
    assert art.report.passed, art.report.summary()
    traj = Table.from_csv((tmp_path / "trajectory.csv").read_text())
    cols = {c: traj[c] for c in traj.columns}
    cols["x_hat"] = cols["x_hat"] + 0.1
    (tmp_path / "trajectory.csv").write_text(Table.from_columns(**cols).to_csv())
    assert not verify(tmp_path).passed
