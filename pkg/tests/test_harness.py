import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diraclab import (CSV_HEADER, EquiconvReport, ExperimentConfig,
                      OutsideTheoremError, StageError, admissible,
                      emit_report, load_report_json, lp_norm, make_function,
                      parse_report_csv, run_equiconv, sweep)

PI = np.pi

EXPONENTS = st.sampled_from([1.0, 1.25, 1.5, 2.0, 3.0, 4.0, np.inf])


def test_admissible_examples():
    assert admissible(np.inf, 2.0, np.inf) == (True, False)
    assert admissible(2.0, 2.0, np.inf) == (True, False)
    assert admissible(2.0, 1.0, np.inf) == (False, False)   # 1/2 + 1 > 1
    assert admissible("inf", "inf", 2.0) == (True, False)
    assert admissible(4.0, 4.0 / 3.0, 2.0) == (True, False)


def test_excluded_corner_never_admissible():
    ok, excluded = admissible(np.inf, 1.0, np.inf)
    assert excluded and not ok
    # moving any exponent off the corner leaves the excluded flag unset
    assert admissible(np.inf, 1.0, 2.0) == (True, False)
    assert admissible(2.0, 1.0, np.inf)[1] is False


def test_admissible_rejects_kappa_at_most_one():
    with pytest.raises(OutsideTheoremError):
        admissible(1.0, 2.0, 2.0)
    with pytest.raises(OutsideTheoremError):
        admissible(0.5, 2.0, 2.0)


def test_admissible_rejects_bad_exponents():
    with pytest.raises(ValueError):
        admissible(2.0, 0.5, 2.0)


@settings(max_examples=60, deadline=None)
@given(kappa=st.sampled_from([1.5, 2.0, 4.0, np.inf]),
       mu=EXPONENTS, nu1=EXPONENTS, nu2=EXPONENTS)
def test_admissible_monotone_in_nu(kappa, mu, nu1, nu2):
    # increasing nu only shrinks 1/nu, so admissibility can only be lost
    lo, hi = sorted([nu1, nu2])
    ok_lo, exc_lo = admissible(kappa, mu, lo)
    ok_hi, exc_hi = admissible(kappa, mu, hi)
    if ok_hi and not exc_lo:
        assert ok_lo


def test_config_roundtrip():
    cfg = ExperimentConfig(kappa=np.inf, mu=1.0, nu_list=(2.0, np.inf),
                           m_schedule=(2, 4, 8))
    cfg2 = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert cfg2 == cfg


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(m_schedule=(4, 2))
    with pytest.raises(ValueError):
        ExperimentConfig(comparison="mystery")


def test_make_function_families(mesh96, dirichlet):
    smooth = make_function({"family": "smooth"}, mesh96)
    assert lp_norm(smooth, 2) > 0.1
    bump = make_function({"family": "bump", "component": 1}, mesh96)
    assert np.all(bump.values[0] == 0.0)
    power = make_function({"family": "power"}, mesh96, mu=2.0)
    assert lp_norm(power, 2) < np.inf
    r1 = make_function({"family": "random_trig"}, mesh96, seed=4)
    r2 = make_function({"family": "random_trig"}, mesh96, seed=4)
    r3 = make_function({"family": "random_trig"}, mesh96, seed=5)
    assert np.array_equal(r1.values, r2.values)
    assert not np.array_equal(r1.values, r3.values)
    with pytest.raises(ValueError):
        make_function({"family": "spline"}, mesh96)


def test_make_function_bc_smooth_satisfies_form(mesh96, dirichlet):
    f = make_function({"family": "bc_smooth"}, mesh96, form=dirichlet)
    f0 = np.array([mesh96.interpolate(f.values[i], 0.0) for i in range(2)])
    fpi = np.array([mesh96.interpolate(f.values[i], PI) for i in range(2)])
    assert np.max(np.abs(dirichlet.C @ f0 + dirichlet.D @ fpi)) < 1e-8
    with pytest.raises(ValueError):
        make_function({"family": "bc_smooth"}, mesh96)


def test_run_equiconv_zero_potential_control():
    cfg = ExperimentConfig(potential={"family": "zero"}, kappa=np.inf,
                           nu_list=(2.0, np.inf), m_schedule=(2, 4),
                           mesh_panels=64)
    rep = run_equiconv(cfg)
    for r in rep.rows:
        assert r["norm_diff"] < 1e-8
    assert rep.metadata["N0"] == 0


def test_run_equiconv_decay_and_verdicts():
    cfg = ExperimentConfig(
        potential={"family": "constant_offdiag", "c": 0.3}, kappa=np.inf,
        f={"family": "smooth"}, mu=2.0, nu_list=(2.0, np.inf),
        m_schedule=(2, 8), mesh_panels=64)
    rep = run_equiconv(cfg)
    assert rep.norm(8, np.inf) < rep.norm(2, np.inf)
    assert rep.verdicts[np.inf] == (True, False)
    assert rep.metadata["M_est"] > 0.0
    assert set(rep.metadata["timings"]) == {
        "setup", "root_system", "comparison_system", "partial_sums",
        "metadata"}


def test_run_equiconv_kappa_one_flagged():
    cfg = ExperimentConfig(potential={"family": "zero"}, kappa=1.0,
                           nu_list=(2.0,), m_schedule=(2,), mesh_panels=64)
    rep = run_equiconv(cfg)
    assert rep.verdicts[2.0] == (False, False)
    assert any("kappa" in w for w in rep.warnings)


def test_run_equiconv_stage_error():
    cfg = ExperimentConfig(potential={"family": "nope"}, m_schedule=(2,),
                           mesh_panels=64)
    with pytest.raises(StageError) as ei:
        run_equiconv(cfg)
    assert ei.value.stage == "setup"


def test_sweep_isolates_failures(tmp_path):
    good = ExperimentConfig(potential={"family": "zero"}, nu_list=(2.0,),
                            m_schedule=(2,), mesh_panels=64)
    bad = ExperimentConfig(potential={"family": "zero"},
                           boundary=[[[1, 0], [0, 0], [0, 0], [0, 0]],
                                     [[0, 0], [1, 0], [0, 0], [0, 0]]],
                           nu_list=(2.0,), m_schedule=(2,), mesh_panels=64)
    out = tmp_path / "runs"
    bundle = sweep([good, bad, good], out_dir=str(out))
    assert len(bundle["reports"]) == 2
    assert len(bundle["errors"]) == 1
    assert "config 1" in bundle["errors"][0]
    index = json.loads((out / "index.json").read_text())
    assert [e["status"] for e in index] == ["ok", "error", "ok"]


def test_emit_and_parse_roundtrip(tmp_path):
    cfg = ExperimentConfig(potential={"family": "zero"},
                           nu_list=(2.0, np.inf), m_schedule=(2, 4),
                           mesh_panels=64)
    rep = run_equiconv(cfg)
    csv_path = tmp_path / "r.csv"
    json_path = tmp_path / "r.json"
    emit_report(rep, str(csv_path), "csv")
    emit_report(rep, str(json_path), "structured")
    assert csv_path.read_text().splitlines()[0] == CSV_HEADER
    rows = parse_report_csv(str(csv_path))
    assert len(rows) == len(rep.rows)
    for got, orig in zip(rows, rep.rows):
        assert got["m"] == orig["m"] and got["nu"] == orig["nu"]
        assert got["norm_diff"] == orig["norm_diff"]   # repr round-trips
    doc = load_report_json(str(json_path))
    assert doc["config"]["kappa"] == "inf"
    assert doc["verdicts"]["inf"]["admissible"] in (True, False)
    with pytest.raises(ValueError):
        emit_report(rep, str(tmp_path / "x"), "xml")


def test_reports_deterministic(tmp_path):
    cfg = ExperimentConfig(
        potential={"family": "constant_offdiag", "c": 0.3},
        f={"family": "random_trig"}, seed=11, nu_list=(2.0,),
        m_schedule=(2,), mesh_panels=64)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_report(run_equiconv(cfg), str(p1), "csv")
    emit_report(run_equiconv(cfg), str(p2), "csv")
    assert p1.read_bytes() == p2.read_bytes()
