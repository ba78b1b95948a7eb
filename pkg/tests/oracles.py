"""Independent reference computations used only by the tests.

None of these touch the package's quadrature or water-filling code; they
rely on scipy and on formulations chosen to be as different as possible.
"""

import numpy as np
from scipy.linalg import expm as sp_expm
from scipy.optimize import minimize


def van_loan_gramian(A, F, s0, s1):
    """int_{s0}^{s1} e^{As} F F^T e^{A^T s} ds via the block-exponential identity."""
    A = np.atleast_2d(np.asarray(A, float))
    F = np.asarray(F, float).reshape(A.shape[0], -1)
    n = A.shape[0]
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -A
    M[:n, n:] = F @ F.T
    M[n:, n:] = A.T
    E = sp_expm(M * (s1 - s0))
    W = E[n:, n:].T @ E[:n, n:]
    P = sp_expm(A * s0)
    W = P @ W @ P.T
    return 0.5 * (W + W.T)


def fbm_cov_power_substitution(A, F, H, T, order=120):
    """Double integral int int e^{A s1} F R(s1-s2) F^T e^{A^T s2} on [0,T]^2.

    Splits the square along the diagonal and, on each triangle, substitutes
    ``u = |s1 - s2|^(2H-1)`` so that ``r^(2H-2) dr = du / (2H-1)`` removes
    the singularity; the remaining integrand is integrated with a tensor
    Gauss-Legendre rule.  All columns of ``F`` share the exponent ``H``.
    """
    A = np.atleast_2d(np.asarray(A, float))
    n = A.shape[0]
    F = np.asarray(F, float).reshape(n, -1)
    c = 2 * H - 1
    x, w = np.polynomial.legendre.leggauss(order)
    t1 = 0.5 * T * (x + 1)
    wt1 = 0.5 * T * w
    total = np.zeros((n, n))
    for a, wa in zip(t1, wt1):
        umax = (T - a) ** c
        u = 0.5 * umax * (x + 1)
        wu = 0.5 * umax * w
        b = a + u ** (1.0 / c)
        Ea = sp_expm(A * a) @ F
        Eb = sp_expm(A[None] * b[:, None, None]) @ F
        S = np.einsum("i,ijk,lk->jl", wu, Eb, Ea)  # s2 > s1 triangle
        total += wa * (S + S.T)
    return H * (2 * H - 1) / c * total


def capacity_objective(vectors, noise_total, D, x):
    """0.5 [logdet(S_total + D sum x_i v_i v_i^T D^T) - logdet(S_total)]."""
    K = (D @ vectors.T * x) @ (D @ vectors.T).T
    return 0.5 * (np.linalg.slogdet(noise_total + K)[1] - np.linalg.slogdet(noise_total)[1])


def _project_simplex(v, total):
    if total == 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / k > 0)[-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def brute_force_capacity(vectors, seg, noise_total, D, budgets, starts=6, seed=0):
    """Best of projected-gradient ascent and multistart SLSQP on the two simplices."""
    vectors = np.asarray(vectors, float)
    seg = np.asarray(seg)
    m = vectors.shape[0]
    groups = [np.flatnonzero(seg == s) for s in (0, 1)]
    rng = np.random.default_rng(seed)

    def f(x):
        return capacity_objective(vectors, noise_total, D, x)

    def grad(x):
        Dv = D @ vectors.T
        S = noise_total + (Dv * x) @ Dv.T
        Y = np.linalg.solve(S, Dv)
        return 0.5 * np.einsum("ij,ij->j", Dv, Y)

    def feasible_start():
        x = np.zeros(m)
        for s, g in enumerate(groups):
            if g.size and budgets[s] > 0:
                r = rng.dirichlet(np.ones(g.size))
                x[g] = budgets[s] * r
        return x

    best_x, best = None, -np.inf
    # projected gradient ascent with backtracking
    for _ in range(starts):
        x = feasible_start()
        step = 1.0
        fx = f(x)
        for _ in range(5000):
            g = grad(x)
            while True:
                y = x + step * g
                for s, idx in enumerate(groups):
                    if idx.size:
                        y[idx] = _project_simplex(y[idx], budgets[s])
                fy = f(y)
                if fy >= fx + 1e-4 * g @ (y - x) or step < 1e-14:
                    break
                step *= 0.5
            if abs(fy - fx) < 1e-15 and np.abs(y - x).max() < 1e-12:
                x, fx = y, fy
                break
            x, fx = y, fy
            step *= 2.0
        if fx > best:
            best, best_x = fx, x
    # SLSQP from the same kind of starts
    cons = [
        {"type": "eq", "fun": (lambda x, g=g, b=budgets[s]: x[g].sum() - b)}
        for s, g in enumerate(groups)
        if g.size
    ]
    for _ in range(starts):
        res = minimize(
            lambda x: -f(x), feasible_start(), jac=lambda x: -grad(x), method="SLSQP",
            bounds=[(0, None)] * m, constraints=cons, options={"ftol": 1e-15, "maxiter": 1000},
        )
        x = np.maximum(res.x, 0)
        for s, g in enumerate(groups):
            if g.size and x[g].sum() > 0:
                x[g] *= budgets[s] / x[g].sum()
        fx = f(x)
        if fx > best:
            best, best_x = fx, x
    return best, best_x


def grid_capacity_two_modes(vectors, seg, noise_total, D, budgets, points=20001):
    """Exhaustive grid over a two-mode single-segment problem."""
    assert vectors.shape[0] == 2 and seg[0] == seg[1]
    M = budgets[seg[0]]
    t = np.linspace(0, M, points)
    vals = [capacity_objective(vectors, noise_total, D, np.array([a, M - a])) for a in t]
    i = int(np.argmax(vals))
    return vals[i], t[i]
