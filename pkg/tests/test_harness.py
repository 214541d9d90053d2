import json
import math

import pytest

from painleve_kernel.equilibrium import CRITICAL_QUARTIC, equilibrium_data
from painleve_kernel.harness import (
    CSV_HEADERS,
    DEFAULT_TOLERANCES,
    ExperimentConfig,
    ExperimentResult,
    _envelope,
    emit_results,
    predict_recurrence,
    run_experiment,
)


@pytest.fixture(scope="module")
def small_pii():
    cfg = ExperimentConfig("pii-table", alphas=(0.0, 1.0), s_grid=(-12.0, 12.0, 25))
    return run_experiment(cfg)


@pytest.fixture(scope="module")
def small_kernel():
    cfg = ExperimentConfig("verify-kernel", alphas=(0.0,), n_list=(20, 40), u_grid=(-0.5, 0.25, 1.0))
    return run_experiment(cfg)


@pytest.fixture(scope="module")
def small_recurrence():
    cfg = ExperimentConfig("verify-recurrence", alphas=(0.0,), n_list=tuple(range(20, 41)),
                           tolerances={"window": 10})
    return run_experiment(cfg)


# -- config -------------------------------------------------------------------------

def test_defaults_merged_with_overrides():
    cfg = ExperimentConfig("verify-recurrence", tolerances={"res_cap": 3.0})
    assert cfg.tolerances["res_cap"] == 3.0
    assert cfg.tolerances["b_abs"] == DEFAULT_TOLERANCES["verify-recurrence"]["b_abs"]


@pytest.mark.parametrize(
    "kw",
    [
        dict(experiment="nope"),
        dict(experiment="verify-kernel", n_list=(40, 20)),
        dict(experiment="verify-kernel", n_list=(20, 20)),
        dict(experiment="verify-kernel", n_list=(20, 200)),
        dict(experiment="pii-table", alphas=(-0.5,)),
        dict(experiment="verify-kernel", u_grid=(0.0, 1.0)),
    ],
)
def test_invalid_configs(kw):
    with pytest.raises(ValueError):
        ExperimentConfig(**kw)


def test_config_hash_stable_and_sensitive(tmp_path):
    a = ExperimentConfig("verify-kernel", n_list=[20, 40])
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"experiment": "verify-kernel", "n_list": [20, 40]}))
    assert ExperimentConfig.from_json(p).sha256 == a.sha256
    assert ExperimentConfig("verify-kernel", n_list=[20, 41]).sha256 != a.sha256
    assert ExperimentConfig.from_dict(a.to_dict()) == a


# -- pii table -----------------------------------------------------------------------

def test_pii_table_records(small_pii):
    assert len(small_pii.rows) == 2 * 25
    checks = {(r.inputs["alpha"], r.inputs["check"]) for r in small_pii.records}
    assert (0.0, "residual") in checks and (1.0, "bounded") in checks
    assert small_pii.passed


def test_pii_table_alpha0_profile(small_pii):
    rows = [r for r in small_pii.rows if r[0] == 0.0 and r[1] >= 0]
    q = [r[2] for r in rows]
    assert all(v > 0 for v in q)
    assert all(b < a for a, b in zip(q, q[1:]))


def test_solver_failure_surfaces_as_record(monkeypatch):
    import painleve_kernel.harness as h

    real = h.solve_hastings_mcleod

    def flaky(params, **kw):
        if params.alpha == 1.0:
            raise h.SolverError("no convergence", residual=1e-3)
        return real(params, **kw)

    monkeypatch.setattr(h, "solve_hastings_mcleod", flaky)
    res = run_experiment(ExperimentConfig("pii-table", alphas=(0.0, 1.0), s_grid=(-12.0, 12.0, 5)))
    bad = [r for r in res.records if not r.passed]
    assert len(bad) == 1 and bad[0].inputs == {"alpha": 1.0}
    assert "no convergence" in bad[0].measured["error"]
    assert all(row[0] == 0.0 for row in res.rows)


def test_every_record_has_provenance(small_pii):
    for r in small_pii.records:
        assert r.provenance["config_sha256"] == small_pii.config.sha256
        assert {"artifact", "numpy", "scipy", "mpmath"} <= set(r.provenance)


# -- kernel convergence ----------------------------------------------------------------

def test_kernel_convergence_small(small_kernel):
    assert len(small_kernel.rows) == 2 * 9
    e = [r.measured["e_n"] for r in small_kernel.records if "n" in r.inputs]
    assert e[1] < e[0]
    band = [r for r in small_kernel.records if r.inputs.get("check") == "rate_band"][0]
    assert band.reference["band_factor"] == 4.0
    assert small_kernel.passed


def test_kernel_rows_consistent(small_kernel):
    for alpha, s, n, u, v, kf, kc, err in small_kernel.rows:
        assert s == 0.0
        assert err == abs(kf - kc)


def test_threshold_comes_from_config():
    cfg = ExperimentConfig("verify-kernel", alphas=(0.0,), n_list=(20, 40), u_grid=(0.25, 1.0),
                           tolerances={"band_factor": 1.0 + 1e-12})
    res = run_experiment(cfg)
    band = [r for r in res.records if r.inputs.get("check") == "rate_band"][0]
    assert band.passed == (band.deviation <= 1.0 + 1e-12)


# -- recurrence asymptotics ------------------------------------------------------------

def test_even_quartic_phase_is_alternating_sign():
    eq = equilibrium_data(CRITICAL_QUARTIC, 1.0)
    for n in (20, 21, 22, 23):
        assert math.cos(2 * math.pi * n * eq.omega_t) == pytest.approx((-1) ** n, abs=1e-12)
        a_pred, b_pred = predict_recurrence(eq, 0.3, n, 0.0)
        assert a_pred == pytest.approx(1 - (-1) ** n * 0.3 / (2 * eq.c) * n ** (-1 / 3), abs=1e-12)
        assert b_pred == pytest.approx(0.0, abs=1e-12)


def test_recurrence_small(small_recurrence):
    assert len(small_recurrence.rows) == 21
    assert all(r[5] == 0.0 for r in small_recurrence.rows)
    checks = {r.inputs["check"]: r for r in small_recurrence.records}
    assert checks["b_vanishes"].passed
    assert checks["residual_band"].measured["max_abs"] <= 10
    for alpha, n, bigN, *_ in small_recurrence.rows:
        assert bigN == n  # L = 0


def test_envelope_windows():
    assert _envelope([1, -3, 2, 5, -1, 0.5, 4], 3) == [3, 5]
    assert _envelope([1, 2, 3, 4], 2) == [2, 4]
    assert _envelope([1, 2], 5) == [2]


# -- emit --------------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["small_pii", "small_kernel", "small_recurrence"])
def test_emit_headers_and_manifest(name, request, tmp_path):
    result = request.getfixturevalue(name)
    csv_path, man_path = emit_results(result, tmp_path)
    header = csv_path.read_text().splitlines()[0]
    assert header == ",".join(CSV_HEADERS[result.config.experiment])
    man = json.loads(man_path.read_text())
    assert man["passed"] == result.passed
    assert man["provenance"]["config_sha256"] == result.config.sha256
    assert man["summary"]["records"] == len(result.records)


def test_fixed_headers():
    assert ",".join(CSV_HEADERS["verify-kernel"]) == "alpha,s,n,u,v,K_finite,K_crit,abs_err"
    assert ",".join(CSV_HEADERS["verify-recurrence"]) == (
        "alpha,n,bigN,a_meas,a_pred,b_meas,b_pred,res_a_scaled,res_b_scaled"
    )


def test_rerun_is_byte_identical(tmp_path):
    cfg = ExperimentConfig("verify-recurrence", alphas=(0.5,), n_list=(20, 21, 22), tolerances={"window": 3})
    paths = []
    for sub in ("a", "b"):
        paths.append(emit_results(run_experiment(cfg), tmp_path / sub))
    for p, q in zip(*paths):
        assert p.read_bytes() == q.read_bytes()


def test_emit_rejects_empty(tmp_path):
    cfg = ExperimentConfig("pii-table")
    with pytest.raises(ValueError):
        emit_results(ExperimentResult(cfg, [], []), tmp_path)
