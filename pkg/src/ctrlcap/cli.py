"""Command-line interface: ``ctrlcap {capacity,sweep,validate,asymptotic,dump}``.

Exit codes: 0 success, 1 usage error, 2 invalid input or failed
validation, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import config as config_io
from .allocator import capacity
from .asymptotics import capacity_stable_limit, capacity_unstable_limit, small_horizon_law
from .covariances import compute_gramians, total_cov
from .errors import (
    ConfigError,
    ConvergenceError,
    DefinitenessError,
    RegimeError,
    SimulationError,
    SolvabilityError,
    SpecError,
)
from .model import PowerBudget, kalman_rank, validate
from .simkit import SimConfig, empirical_capacity, simulate

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
CSV_COLUMNS = ["param", "capacity_nats", "mi_early_nats", "mi_late_nats", "entropy_y_nats"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _g(x):
    return f"{x:.6g}"


def _unit(args):
    return ("bits", 1.0 / math.log(2.0)) if getattr(args, "bits", False) else ("nats", 1.0)


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


def cmd_capacity(args, out):
    spec, budget = config_io.load(args.config)
    rank = kalman_rank(spec)
    rep = capacity(spec, budget)
    unit, f = _unit(args)
    print(f"capacity: {_g(rep.capacity_nats * f)} {unit}", file=out)
    print(f"mi_early_given_late: {_g(rep.mi_early_given_late * f)} {unit}", file=out)
    print(f"mi_late_given_early: {_g(rep.mi_late_given_early * f)} {unit}", file=out)
    print(f"mi_early: {_g(rep.mi_early * f)} {unit}", file=out)
    print(f"mi_late: {_g(rep.mi_late * f)} {unit}", file=out)
    print(f"entropy_y: {_g(rep.entropy_y * f)} {unit}", file=out)
    print(f"controllable: {'true' if rank.controllable else 'false'} (rank {rank.rank})", file=out)
    print(f"kkt_residual: {rep.allocation.kkt_residual:.3g}", file=out)
    if args.json:
        payload = rep.to_dict()
        payload["controllable"] = rank.controllable
        payload["rank"] = rank.rank
        _write_json(args.json, payload)
    return EXIT_OK


def _grid(args):
    if args.points < 1:
        raise SpecError("--points must be at least 1")
    if args.points == 1:
        return np.array([args.start])
    if not args.stop > args.start:
        raise SpecError("--to must exceed --from")
    return np.linspace(args.start, args.stop, args.points)


def sweep_rows(spec, budget, param, grid):
    """``[param, capacity, mi_early, mi_late, entropy_y]`` per grid value (nats)."""
    if param in ("T", "h"):
        other = spec.h if param == "T" else spec.T
        bad = grid <= other if param == "T" else grid >= other
        if np.any(bad):
            raise SpecError(f"every swept value must keep T > h (h={spec.h}, T={spec.T})")
        if param == "h" and np.any(grid <= 0):
            raise SpecError("swept h values must be positive")
    if param in ("M1", "M2") and np.any(grid < 0):
        raise SpecError("swept budgets must be nonnegative")
    rows = []
    shared = None
    if param in ("M1", "M2"):
        shared = dict(gramians=compute_gramians(spec), noise=total_cov(spec))
    for v in grid:
        v = float(v)
        if param in ("T", "h"):
            s, b = validate(spec.with_(**{param: v})), budget
            rep = capacity(s, b)
        else:
            b = PowerBudget(**{"M1": budget.M1, "M2": budget.M2, param: v})
            rep = capacity(spec, b, **shared)
        rows.append([v, rep.capacity_nats, rep.mi_early_given_late, rep.mi_late_given_early, rep.entropy_y])
    return rows


def cmd_sweep(args, out):
    spec, budget = config_io.load(args.config)
    rows = sweep_rows(spec, budget, args.param, _grid(args))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([repr(float(x)) for x in r])
    unit, f = _unit(args)
    for r in rows:
        print(f"{args.param}={_g(r[0])}  capacity {_g(r[1] * f)} {unit}", file=out)
    print(f"wrote {len(rows)} rows to {args.out}", file=out)
    return EXIT_OK


def _frob_rel(emp, ref):
    return float(np.linalg.norm(emp - ref) / np.linalg.norm(ref))


def run_validation(spec, budget, paths, step, seed, tol, cap_tol):
    """Analytic-versus-simulation checks; returns a list of (name, value, limit, passed)."""
    checks = []
    noise = total_cov(spec)
    sim0 = simulate(spec, SimConfig(step, paths, seed, "zero"))
    err = _frob_rel(sim0.x.covariance, noise.state)
    checks.append(("uncontrolled Cov(x(T)) rel Frobenius", err, tol, err <= tol))
    rep = capacity(spec, budget)
    sim1 = simulate(spec, SimConfig(step, paths, seed, "allocation"), rep.allocation, rep.gramians)
    err = _frob_rel(sim1.y.covariance, rep.S_y)
    checks.append(("controlled Cov(y(T)) rel Frobenius", err, tol, err <= tol))
    est = empirical_capacity(spec, budget, SimConfig(step, paths, seed))
    gap = abs(est.estimate - est.analytic)
    checks.append(("plug-in capacity abs gap (nats)", gap, cap_tol, gap <= cap_tol))
    return checks


def cmd_validate(args, out):
    spec, budget = config_io.load(args.config)
    step = args.step if args.step is not None else spec.T / 512
    checks = run_validation(spec, budget, args.paths, step, args.seed, args.tol, args.cap_tol)
    ok = True
    for name, value, limit, passed in checks:
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {_g(value)} (limit {_g(limit)})", file=out)
    if args.json:
        _write_json(args.json, [
            {"check": n, "value": v, "limit": lim, "passed": bool(p)} for n, v, lim, p in checks
        ])
    return EXIT_OK if ok else EXIT_INVALID


def cmd_asymptotic(args, out):
    spec, budget = config_io.load(args.config)
    unit, f = _unit(args)
    fbm_mode = args.fbm.replace("-", "_")
    if args.regime == "small-t":
        law = small_horizon_law(spec, budget)
        print("regime: small_T", file=out)
        print(f"trace_Q: {_g(law.trace_Q)}", file=out)
        linear = law.capacity_at(spec.T)
        # the linear law next to the full computation at the same horizon
        full = capacity(spec, budget).capacity_nats
        print(f"capacity_at_T({_g(spec.T)}): {_g(linear * f)} {unit}", file=out)
        print(f"full_capacity_at_T({_g(spec.T)}): {_g(full * f)} {unit}", file=out)
        payload = {"regime": "small_T", "trace_Q": law.trace_Q, "Q": law.Q.tolist(),
                   "weights": law.weights.tolist(), "T": spec.T,
                   "capacity_linear_law": linear, "capacity_full": full}
    else:
        fn = capacity_stable_limit if args.regime == "stable" else capacity_unstable_limit
        rep = fn(spec, budget, reference_T=args.reference_T, fbm_mode=fbm_mode)
        print(f"regime: {rep.regime}", file=out)
        print(f"capacity_limit: {_g(rep.capacity_limit * f)} {unit}", file=out)
        print(f"reference_T: {_g(rep.reference_T)}", file=out)
        print(f"fbm_mode: {rep.fbm_mode}", file=out)
        for name, r in rep.lyapunov_residuals.items():
            print(f"lyapunov_residual {name}: {r:.3g}", file=out)
        for note in rep.notes:
            print(f"note: {note}", file=out)
        payload = rep.to_dict()
    if args.json:
        _write_json(args.json, payload)
    return EXIT_OK


def cmd_dump(args, out):
    spec, budget = config_io.load(args.config)
    text = config_io.dumps(spec, budget)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="ctrlcap", description="Information capacity of delayed linear control channels.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, bits=True, js=True):
        sp.add_argument("--config", required=True, help="system file")
        if bits:
            sp.add_argument("--bits", action="store_true", help="report bits instead of nats")
        if js:
            sp.add_argument("--json", metavar="PATH", help="also write a JSON report")

    sp = sub.add_parser("capacity", help="capacity at the optimal allocation")
    common(sp)
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("sweep", help="capacity over a parameter grid, written as CSV")
    common(sp, js=False)
    sp.add_argument("--param", required=True, choices=["T", "M1", "M2", "h"])
    sp.add_argument("--from", dest="start", type=float, required=True)
    sp.add_argument("--to", dest="stop", type=float, required=True)
    sp.add_argument("--points", type=int, default=20)
    sp.add_argument("--out", required=True, help="CSV output path")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("validate", help="compare analytic covariances with simulation")
    common(sp, bits=False)
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--step", type=float, default=None, help="time step (default T/512)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=0.05, help="relative covariance tolerance")
    sp.add_argument("--cap-tol", type=float, default=0.02, help="capacity tolerance in nats")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("asymptotic", help="long- or short-horizon regimes")
    common(sp)
    sp.add_argument("--regime", required=True, choices=["stable", "unstable", "small-t"])
    sp.add_argument("--reference-T", type=float, default=None,
                    help="horizon for the output fBm term (default: the config's T)")
    sp.add_argument("--fbm", choices=["exact", "as-printed"], default="exact",
                    help="stationary state-fBm covariance")
    sp.set_defaults(func=cmd_asymptotic)

    sp = sub.add_parser("dump", help="rewrite a config in canonical form")
    common(sp, bits=False, js=False)
    sp.add_argument("--out", help="output path (default stdout)")
    sp.set_defaults(func=cmd_dump)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (ConfigError, SpecError, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceError, DefinitenessError, SolvabilityError, SimulationError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
