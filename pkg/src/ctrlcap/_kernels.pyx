# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot kernels in ``_kernels_py``.

Same algorithms, same signatures; the water-filling loop works on small
dense matrices with hand-written Cholesky so that no Python objects are
touched inside an iteration.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, fabs, sqrt

cnp.import_array()

cdef double ARMIJO = 1e-4
cdef double MIN_STEP = 9.313225746154785e-10  # 2**-30


cdef int _chol(double[:, ::1] M, double[:, ::1] L, int d) noexcept nogil:
    """Lower Cholesky factor of M into L; returns 0 on success."""
    cdef int i, j, k
    cdef double acc
    for i in range(d):
        for j in range(i + 1):
            acc = M[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            if i == j:
                if acc <= 0.0:
                    return 1
                L[i, i] = sqrt(acc)
            else:
                L[i, j] = acc / L[j, j]
        for j in range(i + 1, d):
            L[i, j] = 0.0
    return 0


cdef double _logdet_from_chol(double[:, ::1] L, int d) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(d):
        s += log(L[i, i])
    return 2.0 * s


cdef double _inv_quad(double[:, ::1] L, double[:, ::1] a, int row, double[::1] work, int d) noexcept nogil:
    """a_row^T (L L^T)^{-1} a_row by forward substitution."""
    cdef int i, k
    cdef double acc, q = 0.0
    for i in range(d):
        acc = a[row, i]
        for k in range(i):
            acc -= L[i, k] * work[k]
        work[i] = acc / L[i, i]
        q += work[i] * work[i]
    return q


cdef void _assemble(double[:, ::1] M, double[:, ::1] a, double[::1] x, int m, int d) noexcept nogil:
    cdef int i, j, r
    for i in range(d):
        for j in range(d):
            M[i, j] = 1.0 if i == j else 0.0
    for r in range(m):
        if x[r] == 0.0:
            continue
        for i in range(d):
            for j in range(d):
                M[i, j] += x[r] * a[r, i] * a[r, j]


cdef double _water_level(double[::1] floors, int count, double budget) noexcept nogil:
    cdef int i, j
    cdef double key, csum, mu, best
    # insertion sort; count is small
    for i in range(1, count):
        key = floors[i]
        j = i - 1
        while j >= 0 and floors[j] > key:
            floors[j + 1] = floors[j]
            j -= 1
        floors[j + 1] = key
    csum = 0.0
    best = budget + floors[0]
    for i in range(count):
        csum += floors[i]
        mu = (budget + csum) / (i + 1)
        if mu > floors[i]:
            best = mu
    return best


def waterfill_iterate(a, seg, budgets, x, double tol, int max_iter):
    """See ``_kernels_py.waterfill_iterate``."""
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef long long[::1] sv = np.ascontiguousarray(seg, dtype=np.int64)
    cdef double[::1] bv = np.ascontiguousarray(budgets, dtype=np.float64)
    xa = np.array(x, dtype=np.float64)
    cdef double[::1] xv = xa
    cdef int m = av.shape[0]
    cdef int d = av.shape[1]
    cdef double[:, ::1] M = np.empty((d, d))
    cdef double[:, ::1] Mt = np.empty((d, d))
    cdef double[:, ::1] L = np.empty((d, d))
    cdef double[::1] work = np.empty(d)
    cdef double[::1] q = np.empty(m)
    cdef double[::1] qbar = np.empty(m)
    cdef double[::1] step = np.empty(m)
    cdef double[::1] floors = np.empty(m)
    cdef int it, s, i, j, r, count, done = 0, failed = 0
    cdef double scale = 1.0, change, f0, ft, qmax, mu, slope, t, smax, target, bud
    for s in range(2):
        if bv[s] > scale:
            scale = bv[s]
    with nogil:
        for it in range(1, max_iter + 1):
            change = 0.0
            for s in range(2):
                bud = bv[s]
                if bud <= 0.0:
                    continue
                count = 0
                for r in range(m):
                    if sv[r] == s:
                        count += 1
                if count == 0:
                    continue
                _assemble(M, av, xv, m, d)
                if _chol(M, L, d) != 0:
                    failed = 1
                    break
                f0 = _logdet_from_chol(L, d)
                qmax = 0.0
                for r in range(m):
                    if sv[r] != s:
                        continue
                    q[r] = _inv_quad(L, av, r, work, d)
                    qbar[r] = q[r] / (1.0 - xv[r] * q[r])
                    if qbar[r] > qmax:
                        qmax = qbar[r]
                if qmax <= 0.0:
                    continue
                count = 0
                for r in range(m):
                    if sv[r] == s and qbar[r] > 1e-14 * qmax:
                        floors[count] = 1.0 / qbar[r]
                        count += 1
                mu = _water_level(floors, count, bud)
                slope = 0.0
                smax = 0.0
                for r in range(m):
                    if sv[r] != s:
                        continue
                    target = 0.0
                    if qbar[r] > 1e-14 * qmax:
                        target = mu - 1.0 / qbar[r]
                        if target < 0.0:
                            target = 0.0
                    step[r] = target - xv[r]
                    slope += 0.5 * q[r] * step[r]
                    if fabs(step[r]) > smax:
                        smax = fabs(step[r])
                t = 1.0
                while True:
                    for i in range(d):
                        for j in range(d):
                            Mt[i, j] = M[i, j]
                    for r in range(m):
                        if sv[r] != s:
                            continue
                        for i in range(d):
                            for j in range(d):
                                Mt[i, j] += t * step[r] * av[r, i] * av[r, j]
                    if _chol(Mt, L, d) == 0:
                        ft = _logdet_from_chol(L, d)
                        if 0.5 * (ft - f0) >= ARMIJO * t * slope - 1e-14 * (1.0 + fabs(f0)):
                            break
                    t *= 0.5
                    if t < MIN_STEP:
                        t = 0.0
                        break
                for r in range(m):
                    if sv[r] == s:
                        xv[r] = xv[r] + t * step[r]
                        if xv[r] < 0.0:
                            xv[r] = 0.0
                if t * smax > change:
                    change = t * smax
            if failed:
                break
            if change <= tol * scale:
                done = 1
                break
    if failed:
        raise np.linalg.LinAlgError("water-filling matrix lost definiteness")
    if done:
        return xa, it, True
    return xa, max_iter, False


def em_final_state(x0, Phi, drive):
    """See ``_kernels_py.em_final_state``."""
    cdef double[:, ::1] P = np.ascontiguousarray(Phi, dtype=np.float64)
    cdef double[:, :, ::1] dv = np.ascontiguousarray(drive, dtype=np.float64)
    # state kept as (n, paths) so the inner loops run over paths and vectorize
    cdef double[:, ::1] X = np.array(np.asarray(x0, dtype=np.float64).T, order="C")
    cdef double[:, ::1] Y = np.empty_like(X)
    cdef double[:, ::1] swap
    cdef Py_ssize_t steps = dv.shape[0]
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t npath = X.shape[1]
    cdef Py_ssize_t path, m, i, j
    cdef double pij
    with nogil:
        for m in range(steps):
            for i in range(n):
                for path in range(npath):
                    Y[i, path] = dv[m, path, i]
                for j in range(n):
                    pij = P[i, j]
                    for path in range(npath):
                        Y[i, path] += pij * X[j, path]
            swap = X
            X = Y
            Y = swap
    return np.asarray(X).T.copy()
