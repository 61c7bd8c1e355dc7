"""Experiment driver, emission, determinism, CLI."""

import json
import math
import os

import numpy as np
import pytest

from sl2ode import SecondOrderExact
from sl2ode.cli import main
from sl2ode.errors import ConfigurationError
from sl2ode.harness import (CSV_HEADER, ExperimentReport, ProblemSpec,
                            attach_csv_reference, cubic_interp, emit,
                            fit_slope, report_to_dict, run_comparison,
                            run_convergence, run_problem, run_property_suite,
                            run_singularity)

ORC = SecondOrderExact(gamma=1.0, C=1.0, y_b=0.0)


def conv_spec(**kw):
    base = dict(ode="second_order", scheme="invariant_strict", ic=(0.2,),
                h=0.01, x_max=0.5, max_steps=100000, oracle=ORC)
    base.update(kw)
    return ProblemSpec(**base)


# ------------------------------------------------------------- validation

def test_problem_spec_validation():
    with pytest.raises(ConfigurationError):
        ProblemSpec(ode="fourth_order", scheme="invariant_strict", ic=(1, 0, 1))
    with pytest.raises(ConfigurationError):
        ProblemSpec(ode="second_order", scheme="magic", ic=(1, 0, 1))
    with pytest.raises(ConfigurationError):
        ProblemSpec(ode="second_order", scheme="invariant_strict", ic=(1, 0, 1),
                    h=-0.1)
    with pytest.raises(ConfigurationError):
        ProblemSpec(ode="third_order", scheme="invariant_strict", ic=(1, 0))


def test_run_problem_needs_gamma_without_oracle():
    with pytest.raises(ConfigurationError):
        run_problem(ProblemSpec(ode="second_order", scheme="invariant_strict",
                                ic=(0.2, 1.0, 0.5)))


# ------------------------------------------------------------ convergence

def test_convergence_empty_h_list():
    report = run_convergence(conv_spec(), [])
    assert report.trajectories == []
    assert report.slope is None
    assert "empty h_list" in report.notes[0]


def test_convergence_slopes():
    report = run_convergence(conv_spec(), [0.02, 0.01, 0.005])
    assert 1.8 <= report.slope <= 2.2
    assert report.slope_residual < 0.2
    report = run_convergence(conv_spec(scheme="standard_fd_explicit"),
                             [0.02, 0.01, 0.005])
    assert 0.8 <= report.slope <= 1.2


def test_convergence_without_oracle_is_partial():
    spec = conv_spec(oracle=None, gamma=1.0, ic=(0.2, ORC.value(0.2),
                                                 ORC.derivative(0.2)))
    report = run_convergence(spec, [0.02, 0.01])
    assert report.partial


def test_fit_slope_reports_residual():
    slope, resid = fit_slope([0.1, 0.05, 0.025], [1e-2, 2.5e-3, 6.25e-4])
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert resid == pytest.approx(0.0, abs=1e-12)


# ------------------------------------------------------------ comparison

def test_comparison_identical_specs_ratio_one():
    s = conv_spec(h=0.01)
    report = run_comparison([s, s])
    assert report.error_ratio == pytest.approx(1.0, abs=1e-12)


def test_comparison_requires_shared_ic():
    a = conv_spec()
    b = conv_spec(ic=(0.3,))
    with pytest.raises(ConfigurationError):
        run_comparison([a, b])


def test_comparison_second_order_report_shape():
    inv = conv_spec(h=0.01)
    std = conv_spec(h=0.01, scheme="standard_fd")
    report = run_comparison([inv, std])
    assert report.errors[0]["max_err"] > 0.0
    assert report.errors[1]["max_err"] > 0.0
    assert report.meta["common_range"][0] == 0.2


def test_comparison_third_order_invariant_beats_standard():
    # desk-scale regular configuration; the reference is rk at 1e-9
    kw = dict(ode="third_order", ic=(1.0, 1.0, 10.0, -4.0), alpha=-1.0,
              h=0.05, x_max=4.0, max_steps=60)
    inv = ProblemSpec(scheme="invariant_gamma", **kw)
    std = ProblemSpec(scheme="standard_fd", **kw)
    report = run_comparison([inv, std])
    assert report.errors[0]["max_err"] <= report.errors[1]["max_err"]
    assert report.error_ratio >= 1.0


# ------------------------------------------------------------ singularity

def test_singularity_estimate_and_branch():
    x_b = 1.0
    spec = conv_spec(h=x_b / 600, ic=(0.1,), x_max=math.inf, x_min=0.05,
                     max_steps=20000)
    report = run_singularity(spec)
    assert abs(report.singularity_estimate - x_b) / x_b < 0.01
    assert report.post_branch_max_rel is not None
    assert report.post_branch_max_rel < 1e-2
    assert report.singularity_meta["mode"] == "x_reversal"


def test_singularity_none_before_xmax():
    spec = conv_spec(h=0.01, x_max=0.5)
    report = run_singularity(spec)
    assert report.singularity_estimate is None
    assert "no singularity" in report.notes[0]


# ------------------------------------------------------------- properties

def test_property_suite_seed_sweep():
    for seed in range(10):
        rep = run_property_suite(seed, n_invariance=60, n_equivariance=8)
        assert max(rep.errors[0].values()) <= 1e-10, seed


def test_invariant_reports_carry_bounded_drift():
    rep = run_convergence(conv_spec(), [0.01])
    assert rep.drift[0]["I1_rel_drift"] <= 1e-10
    assert rep.drift[0]["I2_vs_beta_rel"] <= 1e-10


def test_property_suite_bounds_and_determinism():
    r1 = run_property_suite(0, n_invariance=200, n_equivariance=30)
    r2 = run_property_suite(0, n_invariance=200, n_equivariance=30)
    assert r1.errors == r2.errors
    for key, v in r1.errors[0].items():
        assert v <= 1e-10, key
    r3 = run_property_suite(1, n_invariance=200, n_equivariance=30)
    assert r3.errors != r1.errors


# ------------------------------------------------------------------ emit

def test_emit_csv_header_only_for_empty_report(tmp_path):
    path = str(tmp_path / "empty.csv")
    emit(ExperimentReport(), "csv", path)
    with open(path) as fh:
        assert fh.read() == CSV_HEADER + "\n"


def test_emit_csv_schema_and_reference_column(tmp_path):
    spec = conv_spec(h=0.01)
    traj = run_problem(spec)
    report = ExperimentReport(trajectories=[traj])
    attach_csv_reference(report, ORC.value)
    path = str(tmp_path / "t.csv")
    files = emit(report, "csv", path)
    assert files == [path]
    lines = open(path).read().splitlines()
    assert lines[0] == CSV_HEADER
    row = lines[4].split(",")
    assert len(row) == 6
    n, x, y = int(row[0]), float(row[1]), float(row[2])
    assert n == 3
    assert abs(float(row[5]) - abs(y - ORC.value(x))) < 1e-15


def test_emit_csv_multiple_trajectories(tmp_path):
    spec = conv_spec(h=0.01)
    report = ExperimentReport(trajectories=[run_problem(spec), run_problem(spec)])
    path = str(tmp_path / "pair.csv")
    files = emit(report, "csv", path)
    assert files == [str(tmp_path / "pair_0.csv"), str(tmp_path / "pair_1.csv")]
    assert all(os.path.exists(f) for f in files)


def test_emit_json_roundtrip_and_determinism(tmp_path):
    report = run_convergence(conv_spec(), [0.02, 0.01])
    p1, p2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    emit(report, "json", p1)
    emit(report, "json", p2)
    b1, b2 = open(p1, "rb").read(), open(p2, "rb").read()
    assert b1 == b2
    parsed = json.loads(b1)
    assert parsed == report_to_dict(report)
    assert parsed["tool_version"]
    assert "spec" in parsed["meta"]


def test_emit_rejects_unknown_format(tmp_path):
    with pytest.raises(ConfigurationError):
        emit(ExperimentReport(), "yaml", str(tmp_path / "x"))


def test_emit_surfaces_path_errors():
    with pytest.raises(ConfigurationError, match="no/such/dir"):
        emit(ExperimentReport(), "json", "/no/such/dir/file.json")


def test_identical_spec_and_seed_byte_identical_csv(tmp_path):
    paths = []
    for tag in ("a", "b"):
        report = run_convergence(conv_spec(), [0.02, 0.01])
        path = str(tmp_path / f"{tag}.csv")
        emit(report, "csv", path)
        paths.append(sorted(os.listdir(tmp_path)))
    files = sorted(tmp_path.iterdir())
    blobs = {}
    for f in files:
        key = f.name.split(".")[0][-2:]
        blobs.setdefault(key, f.read_bytes())
    a = [f.read_bytes() for f in files if f.name.startswith("a")]
    b = [f.read_bytes() for f in files if f.name.startswith("b")]
    assert a == b


def test_cubic_interp_quartic_accuracy():
    xs = np.linspace(0, 1, 21)
    ys = np.sin(3 * xs)
    assert cubic_interp(xs, ys, 0.512) == pytest.approx(math.sin(3 * 0.512),
                                                        abs=2e-5)


# -------------------------------------------------------------------- CLI

def test_cli_solve_csv(tmp_path):
    out = str(tmp_path / "run.csv")
    rc = main(["solve", "--ode", "second_order", "--scheme", "invariant_strict",
               "--gamma", "1.0", "--ic", "0.2,1.78885438199983,1.118033988749895",
               "--h", "0.01", "--x-max", "0.5", "--out", out])
    assert rc == 0
    lines = open(out).read().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) > 10


def test_cli_converge_json(tmp_path, capsys):
    rc = main(["converge", "--ode", "second_order", "--gamma", "1",
               "--ic", "0.2", "--h-list", "0.02,0.01", "--x-max", "0.5"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["slope"] is not None


def test_cli_config_overrides_flags(tmp_path, capsys):
    cfgfile = tmp_path / "run.conf"
    cfgfile.write_text("h=0.02\nx-max=0.4\n")
    rc = main(["solve", "--ode", "second_order", "--scheme", "invariant_strict",
               "--gamma", "1.0", "--ic", "0.2,1.78885438199983,1.118033988749895",
               "--h", "0.000001", "--x-max", "0.9", "--config", str(cfgfile)])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["meta"]["spec"]["h"] == 0.02
    assert payload["meta"]["spec"]["x_max"] == 0.4


def test_cli_exit_codes(tmp_path, capsys):
    # configuration error -> 2
    rc = main(["solve", "--ode", "second_order", "--scheme", "invariant_strict",
               "--ic", "0.2,1.0,1.0", "--h", "-0.5"])
    assert rc == 2
    # oracle unavailable -> 3 (third-order data with 2 x0 f0 + 1 < 0)
    rc = main(["converge", "--ode", "third_order", "--alpha", "-1",
               "--ic", "1,1,1,-1", "--h-list", "0.02,0.01"])
    assert rc == 3
    capsys.readouterr()


def test_cli_props_deterministic(capsys):
    assert main(["props", "--seed", "3"]) == 0
    out1 = capsys.readouterr().out
    assert main(["props", "--seed", "3"]) == 0
    out2 = capsys.readouterr().out
    assert out1 == out2
    payload = json.loads(out1)
    assert max(payload["errors"][0].values()) <= 1e-10
