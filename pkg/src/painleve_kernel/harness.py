"""Verification experiments and their machine-readable outputs."""

from dataclasses import asdict, dataclass, field
import csv
import hashlib
import io
import json
import math
from pathlib import Path

import mpmath
import numpy as np
import scipy

from . import __version__
from .equilibrium import Potential, equilibrium_data, s_parameters
from .kernel import PhiCache, critical_kernel
from .orthopoly import PanelSpec, coupled_bigN, recurrence_table, rescaled_kernel
from .pii import (
    PiiParameters,
    SolverError,
    evaluate_q,
    q_minus_series,
    q_plus_series,
    residual_at,
    solve_hastings_mcleod,
)
from .psi import PhiControls

EXPERIMENTS = ("pii-table", "verify-kernel", "verify-recurrence")

DEFAULT_TOLERANCES = {
    "pii-table": {"residual": 1e-8, "series_rel": 1e-3, "q_bound": 10.0},
    "verify-kernel": {"band_factor": 4.0},
    "verify-recurrence": {"band_factor": 4.0, "b_abs": 1e-10, "res_cap": 10.0, "window": 20},
}

CSV_HEADERS = {
    "pii-table": ("alpha", "s", "q", "r", "residual"),
    "verify-kernel": ("alpha", "s", "n", "u", "v", "K_finite", "K_crit", "abs_err"),
    "verify-recurrence": (
        "alpha", "n", "bigN", "a_meas", "a_pred", "b_meas", "b_pred", "res_a_scaled", "res_b_scaled",
    ),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    alphas: tuple = (0.0,)
    potential: tuple = (0.0, 0.0, -1.0, 0.0, 0.25)
    n_list: tuple = ()
    L: float = 0.0
    u_grid: tuple = (-1.5, -0.75, -0.25, 0.25, 0.75, 1.5)
    s_grid: tuple = (-12.0, 12.0, 97)  # (s_min, s_max, points) for pii-table
    tolerances: dict = field(default_factory=dict)
    precision: str = "double"
    phi_tol: float = 1e-9
    n_cap: int = 120

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        for name in ("alphas", "potential", "n_list", "u_grid", "s_grid"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        tol = dict(DEFAULT_TOLERANCES[self.experiment])
        tol.update(self.tolerances)
        object.__setattr__(self, "tolerances", tol)
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ValueError("n_list must be strictly increasing")
        if any(n > self.n_cap for n in self.n_list):
            raise ValueError(f"n is capped at {self.n_cap}")
        if any(a <= -0.5 for a in self.alphas):
            raise ValueError("alpha must exceed -1/2")
        if 0.0 in self.u_grid:
            raise ValueError("u grid must avoid 0")

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return asdict(self)

    @property
    def sha256(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    inputs: dict
    measured: dict
    reference: dict
    deviation: float
    passed: bool
    provenance: dict


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    records: list

    @property
    def passed(self):
        return all(r.passed for r in self.records)


def provenance(cfg):
    return {
        "config_sha256": cfg.sha256,
        "artifact": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
    }


def _record(cfg, inputs, measured, reference, deviation, passed):
    return ResultRecord(cfg.experiment, inputs, measured, reference, float(deviation), bool(passed), provenance(cfg))


def run_pii_table(cfg):
    tol = cfg.tolerances
    s_min, s_max, npts = cfg.s_grid
    s = np.linspace(s_min, s_max, int(npts))
    rows, records = [], []
    for alpha in cfg.alphas:
        try:
            sol = solve_hastings_mcleod(
                PiiParameters(alpha, s_min=s_min, s_max=s_max), precision=cfg.precision
            )
        except SolverError as exc:
            records.append(_record(cfg, {"alpha": alpha}, {"error": str(exc)}, {}, math.inf, False))
            continue
        q, r, _ = evaluate_q(sol, s)
        res = residual_at(sol, s)
        for row in zip(s, q, r, res):
            rows.append((alpha,) + tuple(float(v) for v in row))
        worst = max(float(res.max()), sol.achieved_residual)
        records.append(_record(cfg, {"alpha": alpha, "check": "residual"}, {"max_residual": worst},
                               {"tolerance": tol["residual"]}, worst, worst <= tol["residual"]))
        qmax = float(np.max(np.abs(sol.q)))
        records.append(_record(cfg, {"alpha": alpha, "check": "bounded"}, {"max_abs_q": qmax},
                               {"bound": tol["q_bound"]}, qmax, qmax <= tol["q_bound"]))
        for edge, series in ((s_max, q_plus_series), (s_min, q_minus_series)):
            qe = evaluate_q(sol, edge)[0]
            ref = series(alpha, edge, order=2)
            dev = abs(qe - ref) / abs(ref) if ref != 0 else abs(qe)
            records.append(_record(cfg, {"alpha": alpha, "check": "series", "s": edge},
                                   {"q": qe}, {"series_order2": ref, "tolerance": tol["series_rel"]},
                                   dev, dev <= tol["series_rel"]))
    return ExperimentResult(cfg, rows, records)


def _band_ok(values, factor):
    v = [abs(x) for x in values]
    return min(v) > 0 and max(v) / min(v) <= factor


def run_kernel_convergence(cfg):
    """Sup-grid error of the rescaled finite-n kernel against the critical kernel."""
    V = Potential(cfg.potential)
    eq = equilibrium_data(V, 1.0)
    controls = PhiControls(tol=cfg.phi_tol)
    tol = cfg.tolerances
    rows, records = [], []
    for alpha in cfg.alphas:
        pii = solve_hastings_mcleod(PiiParameters(alpha), precision=cfg.precision)
        cache = PhiCache(pii, controls)
        errs = []
        for n in cfg.n_list:
            bigN, L_real = coupled_bigN(n, cfg.L)
            s = s_parameters(eq, n, "s_L", L=L_real) if L_real != 0 else 0.0
            cache.populate(s, cfg.u_grid)
            tab = recurrence_table(alpha, bigN, V, n_max=n, panel_spec=PanelSpec(n_max=n))
            w = tab.weight
            e = 0.0
            for u in cfg.u_grid:
                for v in cfg.u_grid:
                    kf = rescaled_kernel(tab, w, n, eq.c, u, v)
                    kc = critical_kernel(u, v, s, alpha, pii, controls, cache).value
                    rows.append((alpha, s, n, u, v, kf, kc, abs(kf - kc)))
                    e = max(e, abs(kf - kc))
            errs.append(e)
            records.append(_record(cfg, {"alpha": alpha, "n": n, "bigN": bigN, "s": s},
                                   {"e_n": e, "e_n_scaled": e * n ** (1 / 3)}, {}, e, True))
        decreasing = all(b < a for a, b in zip(errs, errs[1:]))
        scaled = [e * n ** (1 / 3) for e, n in zip(errs, cfg.n_list)]
        records.append(_record(cfg, {"alpha": alpha, "check": "decreasing"}, {"e_n": errs}, {},
                               0.0, decreasing))
        spread = max(scaled) / min(scaled)
        records.append(_record(cfg, {"alpha": alpha, "check": "rate_band"}, {"e_n_scaled": scaled},
                               {"band_factor": tol["band_factor"]}, spread, _band_ok(scaled, tol["band_factor"])))
    return ExperimentResult(cfg, rows, records)


def predict_recurrence(eq, q_val, n, alpha):
    """Leading terms of a_{n,N} and b_{n,N} with the n^{-1/3} correction."""
    a, b = eq.interval.a, eq.interval.b
    arg = 2 * math.pi * n * eq.omega_t
    a_pred = (b - a) / 4 - q_val * math.cos(arg + 2 * alpha * eq.theta) / (2 * eq.c) * n ** (-1 / 3)
    b_pred = (b + a) / 2 + q_val * math.sin(arg + (2 * alpha + 1) * eq.theta) / eq.c * n ** (-1 / 3)
    return a_pred, b_pred


def _envelope(values, window):
    """max |v| over consecutive windows; a short tail joins the last full window."""
    starts = list(range(0, len(values), window))
    if len(starts) > 1 and len(values) - starts[-1] < window:
        starts.pop()
    bounds = starts[1:] + [len(values)]
    return [max(abs(v) for v in values[a:b]) for a, b in zip(starts, bounds)]


def run_recurrence_asymptotics(cfg):
    V = Potential(cfg.potential)
    tol = cfg.tolerances
    rows, records = [], []
    for alpha in cfg.alphas:
        pii = solve_hastings_mcleod(PiiParameters(alpha), precision=cfg.precision)
        res_a, b_max = [], 0.0
        for n in cfg.n_list:
            bigN, _ = coupled_bigN(n, cfg.L)
            eq = equilibrium_data(V, n / bigN)
            s = s_parameters(eq, n, "s_tn")
            q_val = evaluate_q(pii, s)[0]
            tab = recurrence_table(alpha, bigN, V, n_max=n + 1, panel_spec=PanelSpec(n_max=n + 1))
            a_meas, b_meas = float(tab.a[n - 1]), float(tab.b[n])
            a_pred, b_pred = predict_recurrence(eq, q_val, n, alpha)
            ra = (a_meas - a_pred) * n ** (2 / 3)
            rb = (b_meas - b_pred) * n ** (2 / 3)
            rows.append((alpha, n, bigN, a_meas, a_pred, b_meas, b_pred, ra, rb))
            res_a.append(ra)
            b_max = max(b_max, abs(b_meas)) if V.is_even else b_max
        env = _envelope(res_a, int(tol["window"]))
        spread = max(env) / min(env)
        records.append(_record(cfg, {"alpha": alpha, "check": "residual_band"},
                               {"envelope": env, "max_abs": max(env)},
                               {"band_factor": tol["band_factor"], "res_cap": tol["res_cap"]},
                               spread, spread <= tol["band_factor"] and max(env) <= tol["res_cap"]))
        if V.is_even:
            records.append(_record(cfg, {"alpha": alpha, "check": "b_vanishes"}, {"max_abs_b": b_max},
                                   {"tolerance": tol["b_abs"]}, b_max, b_max <= tol["b_abs"]))
    return ExperimentResult(cfg, rows, records)


RUNNERS = {
    "pii-table": run_pii_table,
    "verify-kernel": run_kernel_convergence,
    "verify-recurrence": run_recurrence_asymptotics,
}


def run_experiment(cfg):
    return RUNNERS[cfg.experiment](cfg)


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


def _csv_text(header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def emit_results(result, out_dir, fmt="csv+json"):
    """Write <experiment>.csv and <experiment>.manifest.json; returns the paths."""
    if not result.records:
        raise ValueError("no records to emit")
    if fmt != "csv+json":
        raise ValueError("only the csv+json format is supported")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = result.config.experiment
    csv_path = out / f"{name}.csv"
    csv_path.write_text(_csv_text(CSV_HEADERS[name], result.rows))
    manifest = {
        "config": result.config.to_dict(),
        "provenance": provenance(result.config),
        "passed": result.passed,
        "summary": {
            "records": len(result.records),
            "failed": sum(not r.passed for r in result.records),
        },
        "records": [{k: v for k, v in asdict(r).items() if k != "provenance"} for r in result.records],
    }
    man_path = out / f"{name}.manifest.json"
    man_path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return csv_path, man_path
