"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines are collected in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

import cases  # noqa: E402
import conftest  # noqa: E402
from conftest import random_spec  # noqa: E402
from ctrlcap import capacity, kalman_rank, load_reference  # noqa: E402
from ctrlcap.asymptotics import (  # noqa: E402
    small_horizon_law,
    stable_limit_parts,
    transformation_check,
)
from ctrlcap.covariances import compute_gramians, total_cov  # noqa: E402
from ctrlcap.fbm import fgn_kernel, sample_fbm_paths  # noqa: E402
from ctrlcap.quadrature import fbm_double_integral  # noqa: E402
from ctrlcap.reference import REPORTED_REF2_PEAK, compare_ref3  # noqa: E402
from ctrlcap.simkit import SimConfig, empirical_capacity, simulate  # noqa: E402

SEED = 20261015


def _record(k, passed, detail):
    line = f"ACCEPTANCE {k}: {'PASS' if passed else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def _rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def criterion_1():
    t0 = time.perf_counter()
    spec, _ = load_reference("ref3")
    controllable = kalman_rank(spec).controllable
    rows, rep = compare_ref3()
    g = rep.gramians
    min_eig = min(float(e.values.min()) for e in (*g.early_eig, *g.late_eig))
    kkt = rep.allocation.kkt_residual
    elapsed = time.perf_counter() - t0
    worst = max(rows, key=lambda r: r.rel_diff)
    cap_row = rows[-1]
    ok = controllable and min_eig > 0 and kkt <= 1e-8 and len(rows) > 0 and elapsed <= 30
    return _record(
        1, ok,
        f"controllable={controllable} min Gramian eig={min_eig:.3g} kkt={kkt:.2g} "
        f"capacity={rep.capacity_nats:.6g} (reported {cap_row.reported}) "
        f"report rows={len(rows)} worst rel diff={worst.rel_diff:.3g} [{worst.quantity}] "
        f"time={elapsed:.1f}s",
    )


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    results, skipped = [], 0
    while len(results) < 20:
        r = cases.oracle_case(rng, max_active=4)
        if r is None:
            skipped += 1
            continue
        results.append(r)
    gaps = [abs(r["ours"] - r["brute"]) for r in results]
    elapsed = time.perf_counter() - t0
    below = sum(r["ours"] < r["brute"] - 1e-6 for r in results)
    ok = max(gaps) <= 1e-6 and elapsed <= 300
    return _record(
        2, ok,
        f"20 systems max |waterfill - brute force|={max(gaps):.2g} nats "
        f"(brute force better by >1e-6 on {below}) max active modes="
        f"{max(r['active'] for r in results)} skipped(>4 active)={skipped} time={elapsed:.1f}s",
    )


def criterion_3():
    t0 = time.perf_counter()
    spec, _ = load_reference("ref2")
    sim = simulate(spec, SimConfig(spec.T / 512, 100_000, SEED))
    cov_err = _rel(sim.x.covariance, total_cov(spec).state)
    desk, budget = load_reference("scalar_desk")
    est = empirical_capacity(desk, budget, SimConfig(desk.T / 512, 100_000, SEED))
    gap = abs(est.estimate - est.analytic)
    elapsed = time.perf_counter() - t0
    ok = cov_err <= 0.05 and gap <= 0.02 and abs(est.analytic - 0.5 * np.log(5 / 3)) <= 1e-10 and elapsed <= 300
    return _record(
        3, ok,
        f"Cov(x(T)) rel Frobenius={cov_err:.3g} (limit 0.05); plug-in {est.estimate:.4f} "
        f"+/- {est.std_error:.4f} vs analytic {est.analytic:.4f} gap={gap:.3g} (limit 0.02) "
        f"time={elapsed:.1f}s",
    )


def _kernel_integral(H, T, order=40):
    # 2 * int_0^T (T - r) k(0, r) dr; u = r^(2H-1) absorbs the singularity and
    # leaves a polynomial in u.  k depends on the lag only.
    x, w = np.polynomial.legendre.leggauss(order)
    c = 2 * H - 1
    umax = T**c
    u = 0.5 * umax * (x + 1)
    r = u ** (1 / c)
    k = fgn_kernel(0.0, r, H)
    return 2 * float(np.sum(0.5 * umax * w * (T - r) * k * r ** (2 - 2 * H) / c))


def criterion_4():
    worst_int, worst_z = 0.0, 0.0
    T = 1.7
    for H in (0.6, 0.75, 0.9):
        target = T ** (2 * H)
        quad = fbm_double_integral(np.zeros((1, 1)), np.ones((1, 1)), [H], T).value[0, 0]
        direct = _kernel_integral(H, T)
        worst_int = max(worst_int, abs(quad / target - 1), abs(direct / target - 1))
        grid = np.linspace(0, 2.0, 65)
        X = sample_fbm_paths(H, grid, 20_000, SEED)
        for i in (8, 16, 32, 64):
            var = X[:, i].var(ddof=1)
            exact = grid[i] ** (2 * H)
            se = exact * np.sqrt(2 / (X.shape[0] - 1))
            worst_z = max(worst_z, abs(var - exact) / se)
    ok = worst_int <= 1e-6 and worst_z <= 3
    return _record(
        4, ok,
        f"double-integral rel error={worst_int:.2g} (limit 1e-6); "
        f"sampled variance worst |z|={worst_z:.2f} (limit 3)",
    )


def criterion_5():
    rng = np.random.default_rng(SEED)
    systems = [load_reference("ref2")[0].with_(T=50.0, h=1.0)]
    systems += [random_spec(rng, stable=True).with_(T=50.0) for _ in range(3)]
    worst_lyap = 0.0
    for s in systems:
        g, noise, _ = stable_limit_parts(s, 50.0)
        gq, nq = compute_gramians(s), total_cov(s)
        for a, b in ((g.early, gq.early), (g.late, gq.late), (noise.white, nq.white),
                     (noise.fbm, nq.fbm), (noise.total, nq.total)):
            worst_lyap = max(worst_lyap, _rel(a, b))
    worst_tr = 0.0
    for _ in range(10):
        direct, transformed = transformation_check(random_spec(rng, stable=False))
        worst_tr = max(worst_tr, abs(direct - transformed))
    noisy, budget = load_reference("scalar_noisy")
    tq = small_horizon_law(noisy, budget).trace_Q
    ok = worst_lyap <= 1e-3 and worst_tr <= 1e-8 and abs(tq - 1 / 3) <= 1e-12
    return _record(
        5, ok,
        f"Lyapunov vs quadrature at T=50 worst rel={worst_lyap:.2g} (limit 1e-3); "
        f"transformation worst gap={worst_tr:.2g} (limit 1e-8); small-T Tr(Q)={tq:.12g}",
    )


def criterion_6():
    rng = np.random.default_rng(SEED)
    drop = cases.budget_monotonicity(rng, systems=20)
    chain = cases.chain_rule_gap(rng, systems=10)
    zero = cases.zero_capacity_cases(rng, systems=10)
    noise = cases.noise_monotonicity(rng, systems=10)
    mismatches, uncontrollable = cases.rank_gramian_agreement(rng, systems=50)
    ok = (
        drop <= 1e-10
        and chain <= 1e-8
        and zero["zero_budget"] == 0.0
        and zero["zero_input"] == 0.0
        and zero["positive_min"] > 0.0
        and noise <= 1e-10
        and mismatches == 0
    )
    return _record(
        6, ok,
        f"budget monotone (worst drop {drop:.2g}); chain rule gap {chain:.2g}; "
        f"zero budget/zero input capacity {zero['zero_budget']:.2g}/{zero['zero_input']:.2g}, "
        f"min positive {zero['positive_min']:.3g}; sigma2 doubling worst change {noise:.2g}; "
        f"rank vs Gramian mismatches {mismatches}/50 ({uncontrollable} uncontrollable)",
    )


def capacity_curves(delays=(0.04, 0.02, 0.01, 0.005)):
    spec, budget = load_reference("ref2")
    Ts = np.r_[np.linspace(0.05, 1.0, 20), 1.5, 2.0, 3.0, 5.0, REPORTED_REF2_PEAK["T"]]
    curves = {}
    for h in delays:
        start = capacity(spec.with_(h=h, T=1.25 * h), budget).capacity_nats
        vals = np.array([capacity(spec.with_(h=h, T=T), budget).capacity_nats for T in Ts])
        curves[h] = (start, vals)
    return Ts, curves


def criterion_7():
    Ts, curves = capacity_curves()
    delays = sorted(curves, reverse=True)
    finite = all(np.all(np.isfinite(v)) and np.isfinite(s) for s, v in curves.values())
    starts = [curves[h][0] for h in delays]
    smallest = curves[delays[-1]][1][:-1]
    peak = float(smallest.max())
    t_peak = float(Ts[:-1][int(smallest.argmax())])
    rises = starts[-1] <= 0.05 * peak and all(b < a for a, b in zip(starts, starts[1:]))
    head = smallest[: int(smallest.argmax()) + 1]
    increasing = bool(np.all(np.diff(head) > 0))
    diffs = [float(np.abs(curves[a][1] - curves[b][1]).max()) for a, b in zip(delays, delays[1:])]
    settles = all(b < a for a, b in zip(diffs, diffs[1:])) and diffs[-1] <= 0.01 * peak
    measured = float(curves[delays[-1]][1][-1])
    ok = finite and rises and increasing and settles
    return _record(
        7, ok,
        f"start C(1.25h)={', '.join(f'{s:.4f}' for s in starts)} for h={delays}; "
        f"rising to peak {peak:.4f} at T={t_peak:.2f}; curve change per halving of h "
        f"{', '.join(f'{d:.2g}' for d in diffs)}; C(T=5)={curves[delays[-1]][1][-2]:.4f}. "
        f"Informational: reported {REPORTED_REF2_PEAK['capacity']} near "
        f"T={REPORTED_REF2_PEAK['T']}, measured {measured:.4f} (h={delays[-1]})",
    )


def test_criterion_1_reference_pipeline():
    assert criterion_1()


def test_criterion_2_oracle_equivalence():
    assert criterion_2()


def test_criterion_3_monte_carlo():
    assert criterion_3()


def test_criterion_4_fbm_identities():
    assert criterion_4()


def test_criterion_5_asymptotics():
    assert criterion_5()


def test_criterion_6_properties():
    assert criterion_6()


def test_criterion_7_horizon_sweep():
    assert criterion_7()


if __name__ == "__main__":
    results = [f() for f in (criterion_1, criterion_2, criterion_3, criterion_4,
                             criterion_5, criterion_6, criterion_7)]
    sys.exit(0 if all(results) else 1)
