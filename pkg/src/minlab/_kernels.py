"""Numba-compiled inner loops, with slow pure-Python fallbacks.

Nothing in here is part of the public API.  The RNG is a counter-based
splitmix64: every uniform draw is a pure function of (seed, path, counter),
so results are reproducible regardless of scheduling or backend, and the
Python fallback produces bit-identical streams (it emulates the uint64
wraparound explicitly).
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


_U64 = (1 << 64) - 1
GOLD = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 1.0 / (1 << 53)


def _py_mix64(x):
    x &= _U64
    x = ((x ^ (x >> 30)) * _MIX1) & _U64
    x = ((x ^ (x >> 27)) * _MIX2) & _U64
    return x ^ (x >> 31)


def _py_path_base(seed, path):
    return _py_mix64((_py_mix64((seed + GOLD) & _U64) + (path + 1) * GOLD) & _U64)


def _py_u01(base, ctr):
    bits = _py_mix64((base + (ctr + 1) * GOLD) & _U64)
    return ((bits >> 11) + 1) * _INV53


if HAVE_NUMBA:

    @njit(cache=True)
    def _mix64(x):
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
        return x ^ (x >> np.uint64(31))

    @njit(cache=True)
    def _path_base(seed, path):
        g = np.uint64(GOLD)
        return _mix64(_mix64(seed + g) + (path + np.uint64(1)) * g)

    @njit(cache=True)
    def _u01(base, ctr):
        bits = _mix64(base + (ctr + np.uint64(1)) * np.uint64(GOLD))
        # (0, 1]: never 0, so -log(u) is always finite
        return ((bits >> np.uint64(11)) + np.uint64(1)) * _INV53

else:
    _mix64 = _py_mix64
    _path_base = _py_path_base
    _u01 = _py_u01


def path_base(seed, path):
    """Per-path RNG key; works with either backend."""
    if HAVE_NUMBA:
        return _path_base(np.uint64(seed), np.uint64(path))
    return _path_base(seed, path)


def u01(base, ctr):
    """Uniform draw in (0, 1] for counter ``ctr`` of a path stream."""
    if HAVE_NUMBA:
        return _u01(np.uint64(base), np.uint64(ctr))
    return _u01(base, ctr)


# --------------------------------------------------------------------------
# Poisson-weighted power series: acc[r] = sum_k w_r(k) * (e_start M^k)
# --------------------------------------------------------------------------


def _series_row_py(indptr, indices, data, dim, start, k_top, k_lo, k_hi,
                   w_flat, w_off, acc):
    import scipy.sparse as sp

    M = sp.csr_matrix((data, indices, indptr), shape=(dim, dim))
    v = np.zeros(dim)
    v[start] = 1.0
    n_t = len(k_lo)
    for k in range(k_top + 1):
        for r in range(n_t):
            if k_lo[r] <= k <= k_hi[r]:
                w = w_flat[w_off[r] + k - k_lo[r]]
                if w != 0.0:
                    acc[r] += w * v
        if k == k_top:
            break
        v = M.T.dot(v)
    return acc


if HAVE_NUMBA:

    @njit(cache=True)
    def _series_row_nb(indptr, indices, data, dim, start, k_top, k_lo, k_hi,
                       w_flat, w_off, acc):
        v = np.zeros(dim)
        buf = np.zeros(dim)
        v[start] = 1.0
        n_t = k_lo.shape[0]
        for k in range(k_top + 1):
            for r in range(n_t):
                if k >= k_lo[r] and k <= k_hi[r]:
                    w = w_flat[w_off[r] + (k - k_lo[r])]
                    if w != 0.0:
                        for j in range(dim):
                            if v[j] != 0.0:
                                acc[r, j] += w * v[j]
            if k == k_top:
                break
            for j in range(dim):
                buf[j] = 0.0
            for i in range(dim):
                vi = v[i]
                if vi != 0.0:
                    for p in range(indptr[i], indptr[i + 1]):
                        buf[indices[p]] += vi * data[p]
            tmp = v
            v = buf
            buf = tmp
        return acc

    def series_row(indptr, indices, data, dim, start, k_top, k_lo, k_hi,
                   w_flat, w_off):
        acc = np.zeros((len(k_lo), dim))
        return _series_row_nb(
            indptr.astype(np.int64), indices.astype(np.int64), data,
            dim, start, k_top,
            np.asarray(k_lo, dtype=np.int64), np.asarray(k_hi, dtype=np.int64),
            w_flat, np.asarray(w_off, dtype=np.int64), acc,
        )

else:

    def series_row(indptr, indices, data, dim, start, k_top, k_lo, k_hi,
                   w_flat, w_off):
        acc = np.zeros((len(k_lo), dim))
        return _series_row_py(indptr, indices, data, dim, start, k_top,
                              k_lo, k_hi, w_flat, w_off, acc)


# --------------------------------------------------------------------------
# Coupled difference series: inc[j] = sum_k w(k) * (e_i (A^k - B^k))[j]
# for entrywise A >= B >= 0.  The difference vector obeys
#     d_{k+1} = d_k A + b_k (A - B)
# with every operand nonnegative, so increments come out nonnegative in
# floating point too; no cancellation ever happens.
# --------------------------------------------------------------------------


def _coupled_inc_row_py(ipB, ixB, dB, ipA, ixA, dA, ipE, ixE, dE,
                        dim, start, k_top, k_lo, k_hi, w, acc):
    import scipy.sparse as sp

    A = sp.csr_matrix((dA, ixA, ipA), shape=(dim, dim))
    B = sp.csr_matrix((dB, ixB, ipB), shape=(dim, dim))
    E = sp.csr_matrix((dE, ixE, ipE), shape=(dim, dim))
    vb = np.zeros(dim)
    vb[start] = 1.0
    vd = np.zeros(dim)
    for k in range(k_top + 1):
        if k_lo <= k <= k_hi:
            acc += w[k - k_lo] * vd
        if k == k_top:
            break
        vd = A.T.dot(vd) + E.T.dot(vb)
        vb = B.T.dot(vb)
    return acc


if HAVE_NUMBA:

    @njit(cache=True)
    def _coupled_inc_row_nb(ipB, ixB, dB, ipA, ixA, dA, ipE, ixE, dE,
                            dim, start, k_top, k_lo, k_hi, w, acc):
        vb = np.zeros(dim)
        vd = np.zeros(dim)
        bufb = np.zeros(dim)
        bufd = np.zeros(dim)
        vb[start] = 1.0
        for k in range(k_top + 1):
            if k >= k_lo and k <= k_hi:
                wk = w[k - k_lo]
                if wk != 0.0:
                    for j in range(dim):
                        if vd[j] != 0.0:
                            acc[j] += wk * vd[j]
            if k == k_top:
                break
            for j in range(dim):
                bufb[j] = 0.0
                bufd[j] = 0.0
            for i in range(dim):
                vi = vd[i]
                if vi != 0.0:
                    for p in range(ipA[i], ipA[i + 1]):
                        bufd[ixA[p]] += vi * dA[p]
                vi = vb[i]
                if vi != 0.0:
                    for p in range(ipE[i], ipE[i + 1]):
                        bufd[ixE[p]] += vi * dE[p]
                    for p in range(ipB[i], ipB[i + 1]):
                        bufb[ixB[p]] += vi * dB[p]
            tmp = vd
            vd = bufd
            bufd = tmp
            tmp = vb
            vb = bufb
            bufb = tmp
        return acc

    def coupled_inc_row(ipB, ixB, dB, ipA, ixA, dA, ipE, ixE, dE,
                        dim, start, k_top, k_lo, k_hi, w):
        acc = np.zeros(dim)
        return _coupled_inc_row_nb(
            ipB.astype(np.int64), ixB.astype(np.int64), dB,
            ipA.astype(np.int64), ixA.astype(np.int64), dA,
            ipE.astype(np.int64), ixE.astype(np.int64), dE,
            dim, start, k_top, k_lo, k_hi, w, acc,
        )

else:

    def coupled_inc_row(ipB, ixB, dB, ipA, ixA, dA, ipE, ixE, dE,
                        dim, start, k_top, k_lo, k_hi, w):
        acc = np.zeros(dim)
        return _coupled_inc_row_py(ipB, ixB, dB, ipA, ixA, dA, ipE, ixE, dE,
                                   dim, start, k_top, k_lo, k_hi, w, acc)


# --------------------------------------------------------------------------
# Birth-death path sampler with polynomial rates
# --------------------------------------------------------------------------

# outcome codes shared by all samplers
AT_STATE = 0
EXPLODED = 1
KILLED = 2
JUMP_BUDGET = 3


def _horner(coeffs, x):
    acc = 0.0
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def _bd_paths_py(bco, aco, i0, t_end, n_paths, max_jumps, seed, bound):
    out = np.empty(n_paths, dtype=np.int8)
    state = np.zeros(n_paths, dtype=np.int64)
    cap = len(bound) - 1
    for p in range(n_paths):
        base = _py_path_base(seed, p)
        ctr = 0
        s = i0
        t = 0.0
        code = AT_STATE
        for _ in range(max_jumps):
            b = _horner(bco, float(s))
            a = _horner(aco, float(s)) if s > 0 else 0.0
            q = a + b
            if q <= 0.0:
                break
            if bound[min(s, cap)] <= 1e-2 * (t_end - t):
                code = EXPLODED
                break
            u = _py_u01(base, ctr)
            ctr += 1
            dt = -np.log(u) / q
            if t + dt >= t_end:
                break
            t += dt
            u2 = _py_u01(base, ctr)
            ctr += 1
            if u2 * q < b or a <= 0.0:
                s += 1
            else:
                s -= 1
        else:
            code = JUMP_BUDGET
        out[p] = code
        state[p] = s
    return out, state


if HAVE_NUMBA:

    @njit(cache=True)
    def _bd_paths_nb(bco, aco, i0, t_end, n_paths, max_jumps, seed, bound):
        out = np.empty(n_paths, dtype=np.int8)
        state = np.zeros(n_paths, dtype=np.int64)
        cap = bound.shape[0] - 1
        gold = np.uint64(GOLD)
        one = np.uint64(1)
        for p in range(n_paths):
            base = _mix64(_mix64(np.uint64(seed) + gold)
                          + (np.uint64(p) + one) * gold)
            ctr = np.uint64(0)
            s = i0
            t = 0.0
            code = JUMP_BUDGET
            for _ in range(max_jumps):
                x = float(s)
                b = 0.0
                for ci in range(bco.shape[0] - 1, -1, -1):
                    b = b * x + bco[ci]
                a = 0.0
                if s > 0:
                    for ci in range(aco.shape[0] - 1, -1, -1):
                        a = a * x + aco[ci]
                q = a + b
                if q <= 0.0:
                    code = AT_STATE
                    break
                bidx = s if s < cap else cap
                if bound[bidx] <= 1e-2 * (t_end - t):
                    code = EXPLODED
                    break
                u = _u01(base, ctr)
                ctr += one
                dt = -np.log(u) / q
                if t + dt >= t_end:
                    code = AT_STATE
                    break
                t += dt
                u2 = _u01(base, ctr)
                ctr += one
                if u2 * q < b or a <= 0.0:
                    s += 1
                else:
                    s -= 1
            out[p] = code
            state[p] = s
        return out, state

    def bd_paths(bco, aco, i0, t_end, n_paths, max_jumps, seed, bound):
        return _bd_paths_nb(
            np.asarray(bco, dtype=np.float64), np.asarray(aco, dtype=np.float64),
            i0, t_end, n_paths, max_jumps, seed,
            np.asarray(bound, dtype=np.float64),
        )

else:
    bd_paths = _bd_paths_py


# --------------------------------------------------------------------------
# Dense-table path sampler for finite matrices
# --------------------------------------------------------------------------


def _dense_paths_py(q, cum, tgt, nnz, i0, t_end, n_paths, max_jumps, seed):
    out = np.empty(n_paths, dtype=np.int8)
    state = np.zeros(n_paths, dtype=np.int64)
    for p in range(n_paths):
        base = _py_path_base(seed, p)
        ctr = 0
        s = i0
        t = 0.0
        code = AT_STATE
        for _ in range(max_jumps):
            qs = q[s]
            if qs <= 0.0:
                break
            u = _py_u01(base, ctr)
            ctr += 1
            dt = -np.log(u) / qs
            if t + dt >= t_end:
                break
            t += dt
            u2 = _py_u01(base, ctr)
            ctr += 1
            x = u2 * qs
            k = 0
            m = nnz[s]
            while k < m and cum[s, k] <= x:
                k += 1
            if k == m:
                code = KILLED
                break
            s = tgt[s, k]
        else:
            code = JUMP_BUDGET
        out[p] = code
        state[p] = s
    return out, state


if HAVE_NUMBA:

    @njit(cache=True)
    def _dense_paths_nb(q, cum, tgt, nnz, i0, t_end, n_paths, max_jumps, seed):
        out = np.empty(n_paths, dtype=np.int8)
        state = np.zeros(n_paths, dtype=np.int64)
        gold = np.uint64(GOLD)
        one = np.uint64(1)
        for p in range(n_paths):
            base = _mix64(_mix64(np.uint64(seed) + gold)
                          + (np.uint64(p) + one) * gold)
            ctr = np.uint64(0)
            s = i0
            t = 0.0
            code = JUMP_BUDGET
            for _ in range(max_jumps):
                qs = q[s]
                if qs <= 0.0:
                    code = AT_STATE
                    break
                u = _u01(base, ctr)
                ctr += one
                dt = -np.log(u) / qs
                if t + dt >= t_end:
                    code = AT_STATE
                    break
                t += dt
                u2 = _u01(base, ctr)
                ctr += one
                x = u2 * qs
                k = 0
                m = nnz[s]
                while k < m and cum[s, k] <= x:
                    k += 1
                if k == m:
                    code = KILLED
                    break
                s = tgt[s, k]
            out[p] = code
            state[p] = s
        return out, state

    def dense_paths(q, cum, tgt, nnz, i0, t_end, n_paths, max_jumps, seed):
        return _dense_paths_nb(
            np.asarray(q, dtype=np.float64), np.asarray(cum, dtype=np.float64),
            np.asarray(tgt, dtype=np.int64), np.asarray(nnz, dtype=np.int64),
            i0, t_end, n_paths, max_jumps, seed,
        )

else:
    dense_paths = _dense_paths_py


# --------------------------------------------------------------------------
# Birth-death series terms (regularity test)
# --------------------------------------------------------------------------


def _series_terms_py(bco, aco, n_lo, n_hi, T_in):
    # T_n = 1 + (a_n / b_{n-1}) T_{n-1}; term_n = T_n / b_n.
    # Returns (chunk_total, T_last, chunk_max_term, code, n_stop) with
    # code 0 = ran to n_hi, 1 = nonpositive birth rate at n_stop,
    # 2 = negative death rate at n_stop, 3 = overflow guard at n_stop.
    total = 0.0
    T = T_in
    b_prev = _horner(bco, float(n_lo - 1)) if n_lo > 0 else 0.0
    mx = 0.0
    for n in range(n_lo, n_hi):
        x = float(n)
        b = _horner(bco, x)
        if b <= 0.0:
            return total, T, mx, 1, n
        if n == 0:
            T = 1.0
        else:
            a = _horner(aco, x)
            if a < 0.0:
                return total, T, mx, 2, n
            T = 1.0 + (a / b_prev) * T
        term = T / b
        total += term
        if term > mx:
            mx = term
        if T > 1e305 or total > 1e305:
            return total, T, mx, 3, n
        b_prev = b
    return total, T, mx, 0, n_hi


if HAVE_NUMBA:

    @njit(cache=True)
    def _series_terms_nb(bco, aco, n_lo, n_hi, T_in):
        total = 0.0
        T = T_in
        b_prev = 0.0
        if n_lo > 0:
            x = float(n_lo - 1)
            for ci in range(bco.shape[0] - 1, -1, -1):
                b_prev = b_prev * x + bco[ci]
        mx = 0.0
        for n in range(n_lo, n_hi):
            x = float(n)
            b = 0.0
            for ci in range(bco.shape[0] - 1, -1, -1):
                b = b * x + bco[ci]
            if b <= 0.0:
                return total, T, mx, 1, n
            if n == 0:
                T = 1.0
            else:
                a = 0.0
                for ci in range(aco.shape[0] - 1, -1, -1):
                    a = a * x + aco[ci]
                if a < 0.0:
                    return total, T, mx, 2, n
                T = 1.0 + (a / b_prev) * T
            term = T / b
            total += term
            if term > mx:
                mx = term
            if T > 1e305 or total > 1e305:
                return total, T, mx, 3, n
            b_prev = b
        return total, T, mx, 0, n_hi

    def series_terms(bco, aco, n_lo, n_hi, T_in):
        return _series_terms_nb(
            np.asarray(bco, dtype=np.float64),
            np.asarray(aco, dtype=np.float64), n_lo, n_hi, T_in,
        )

else:
    series_terms = _series_terms_py
