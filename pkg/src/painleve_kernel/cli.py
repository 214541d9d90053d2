"""Command-line entry point (``painleve-kernel``)."""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .equilibrium import Potential, equilibrium_data
from .harness import ExperimentConfig, emit_results, run_experiment
from .kernel import kernel_grid
from .orthopoly import PanelSpec, recurrence_table
from .pii import PiiParameters, solve_hastings_mcleod
from .psi import PhiControls, phi_batch

DEFAULT_CONFIGS = {
    "pii-table": {"alphas": [-0.4, 0.0, 0.5, 1.0, 2.0]},
    "verify-kernel": {"alphas": [0.0, 0.3], "n_list": [20, 40, 80]},
    "verify-recurrence": {"alphas": [0.0, 0.5], "n_list": list(range(20, 101))},
}


def _fmt(x):
    return "%.17g" % x


def parse_grid(text):
    """'a:b:n' -> n equally spaced points from a to b."""
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must look like a:b:n, got {text!r}") from exc


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _pii(args):
    sol = solve_hastings_mcleod(
        PiiParameters(args.alpha, s_min=args.smin, s_max=args.smax, tolerance=args.tol),
        precision=args.precision,
    )
    rows = zip(*(map(float, a) for a in (sol.grid, sol.q, sol.r, sol.u)))
    _write_csv(args.out, ("s", "q", "r", "u"), rows)
    return 0


def _pii_for(alpha, s):
    lo, hi = min(-12.0, s - 1), max(12.0, s + 1)
    return solve_hastings_mcleod(PiiParameters(alpha, s_min=lo, s_max=hi))


def _phi(args):
    pii = _pii_for(args.alpha, args.s)
    evs = phi_batch(args.alpha, args.s, list(args.u_grid), pii, PhiControls(tol=args.tol))
    rows = [(e.u, e.phi1.real, e.phi1.imag, e.phi2.real, e.phi2.imag, e.err_est) for e in evs]
    _write_csv(args.out, ("u", "re_phi1", "im_phi1", "re_phi2", "im_phi2", "err_est"), rows)
    return 0


def _kernel(args):
    pii = _pii_for(args.alpha, args.s)
    out = kernel_grid(list(args.grid), args.s, args.alpha, pii, PhiControls(tol=args.tol))
    _write_csv(args.out, ("u", "v", "K", "err_est"), [(k.u, k.v, k.value, k.err_est) for k in out])
    return 0


def _equilibrium(args):
    V = Potential.parse(args.potential)
    d = equilibrium_data(V, args.t)
    doc = {
        "potential": list(V.coefficients),
        "t": d.t,
        "a_t": d.interval.a,
        "b_t": d.interval.b,
        "h_coeffs": list(d.h_coeffs),
        "c": d.c,
        "theta": d.theta,
        "omega": d.omega_t,
        "w0": d.w0,
        "psi0": d.psi_t_at_0,
        "ddpsi0": d.psiV_second_deriv_at_0,
    }
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    return 0


def _orthopoly(args):
    V = Potential.parse(args.potential)
    tab = recurrence_table(args.alpha, args.bigN, V, n_max=args.nmax,
                           panel_spec=PanelSpec(n_max=args.nmax), precision=args.precision)
    # a_0 = 0 by the convention p_{-1} = 0
    rows = [(k, float(tab.a[k - 1]) if k else 0.0, float(tab.b[k])) for k in range(tab.n_max)]
    _write_csv(args.out, ("k", "a_k", "b_k"), rows)
    return 0


def _verify(args):
    base = dict(DEFAULT_CONFIGS[args.command])
    if args.config:
        base.update(json.loads(Path(args.config).read_text()))
    base["experiment"] = args.command
    cfg = ExperimentConfig.from_dict(base)
    result = run_experiment(cfg)
    csv_path, man_path = emit_results(result, args.out_dir)
    for r in result.records:
        if not r.passed:
            print(f"FAIL {r.inputs} deviation={r.deviation:.3e}", file=sys.stderr)
    print(f"{args.command}: {'PASS' if result.passed else 'FAIL'} -> {csv_path}, {man_path}")
    return 0 if result.passed else 1


def build_parser():
    p = argparse.ArgumentParser(prog="painleve-kernel", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("pii", help="Hastings-McLeod solution on a window")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--smin", type=float, default=-12.0)
    s.add_argument("--smax", type=float, default=12.0)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--precision", choices=("double", "extended"), default="double")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_pii)

    s = sub.add_parser("phi", help="psi-functions on a real grid")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--u-grid", type=parse_grid, required=True)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_phi)

    s = sub.add_parser("kernel", help="critical kernel on a grid, long form")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--grid", type=parse_grid, required=True)
    s.add_argument("--tol", type=float, default=1e-9)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_kernel)

    s = sub.add_parser("equilibrium", help="one-interval equilibrium data")
    s.add_argument("--potential", required=True, help='coefficients "c0,c1,..."')
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_equilibrium)

    s = sub.add_parser("orthopoly", help="recurrence coefficients")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--potential", required=True)
    s.add_argument("--bigN", type=float, required=True)
    s.add_argument("--nmax", type=int, default=120)
    s.add_argument("--precision", choices=("double", "mp", "auto"), default="auto")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_orthopoly)

    for name in DEFAULT_CONFIGS:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        s.add_argument("--config", help="JSON file overriding the default configuration")
        s.add_argument("--out-dir", default=".")
        s.set_defaults(func=_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
