# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. ``adaptkit._pykernels`` mirrors this API exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp

cnp.import_array()


cdef inline double xlogx(double x) nogil:
    return x * log(x) if x > 0.0 else 0.0


def exchange_sweep(const long[:] order, long[:] assign,
                   double[:, :] N, double[:] Nc, const double[:] wcount,
                   const long[:] lptr, const long[:] lidx, const double[:] lcnt,
                   const long[:] rptr, const long[:] ridx, const double[:] rcnt,
                   const double[:] selfcnt, bint allow_empty, double eps):
    """One pass of the exchange algorithm over ``order``.

    Moves each word to the class with the largest objective gain (ties to
    the lowest class id). ``N``/``Nc`` are updated in place. Returns the
    list of objective deltas of the moves that changed a class.
    """
    cdef Py_ssize_t K = Nc.shape[0]
    cdef Py_ssize_t idx, p, b, c, t, ntouch
    cdef long w, a, best
    cdef double nw, s, d, bestd, cur, lim
    cdef double[:] L = np.zeros(K)
    cdef double[:] R = np.zeros(K)
    cdef double[:] delta = np.zeros(K)
    cdef long[:] touched = np.zeros(K, dtype=np.int_)
    cdef char[:] mark = np.zeros(K, dtype=np.int8)
    deltas = []

    for idx in range(order.shape[0]):
        w = order[idx]
        a = assign[w]
        nw = wcount[w]
        s = selfcnt[w]
        ntouch = 0
        for p in range(lptr[w], lptr[w + 1]):
            c = assign[lidx[p]]
            if not mark[c]:
                mark[c] = 1
                touched[ntouch] = c
                ntouch += 1
            L[c] += lcnt[p]
        for p in range(rptr[w], rptr[w + 1]):
            c = assign[ridx[p]]
            if not mark[c]:
                mark[c] = 1
                touched[ntouch] = c
                ntouch += 1
            R[c] += rcnt[p]

        # take w out of its class
        for t in range(ntouch):
            c = touched[t]
            N[c, a] -= L[c]
            N[a, c] -= R[c]
        N[a, a] -= s
        Nc[a] -= nw

        for b in range(K):
            d = -2.0 * (xlogx(Nc[b] + nw) - xlogx(Nc[b]))
            for t in range(ntouch):
                c = touched[t]
                if c == b:
                    continue
                if L[c] != 0.0:
                    d += xlogx(N[c, b] + L[c]) - xlogx(N[c, b])
                if R[c] != 0.0:
                    d += xlogx(N[b, c] + R[c]) - xlogx(N[b, c])
            d += xlogx(N[b, b] + L[b] + R[b] + s) - xlogx(N[b, b])
            delta[b] = d

        if not allow_empty and Nc[a] == 0.0:
            best = a
        else:
            bestd = delta[0]
            for b in range(1, K):
                if delta[b] > bestd:
                    bestd = delta[b]
            lim = bestd - eps * (1.0 if bestd < 1.0 and bestd > -1.0 else (bestd if bestd > 0 else -bestd))
            best = 0
            while delta[best] < lim:
                best += 1
        cur = delta[a]

        for t in range(ntouch):
            c = touched[t]
            N[c, best] += L[c]
            N[best, c] += R[c]
        N[best, best] += s
        Nc[best] += nw
        assign[w] = best
        if best != a:
            deltas.append(delta[best] - cur)

        for t in range(ntouch):
            c = touched[t]
            L[c] = 0.0
            R[c] = 0.0
            mark[c] = 0
    return deltas


def lattice_estep(const int[:, :] sub, const int[:] dele, const int[:] ins,
                  const double[:] probs, double[:] counts,
                  double log_lam, double log_rest, double log_ntr):
    """Forward-backward over one (src, tgt) lattice.

    Adds posterior-weighted expected unit counts to ``counts`` and returns
    ``(log p_tr, z)`` where ``z`` is the posterior of the transliteration
    component. Unit id -1 marks a unit with zero probability.
    """
    cdef Py_ssize_t n = dele.shape[0]
    cdef Py_ssize_t m = ins.shape[0]
    cdef Py_ssize_t i, j
    cdef double[:, :] A = np.zeros((n + 1, m + 1))
    cdef double[:, :] B = np.zeros((n + 1, m + 1))
    cdef double tot, z, scale, a, lt, num, den, mx
    cdef int u

    A[0, 0] = 1.0
    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            a = 0.0
            if i > 0 and j > 0:
                u = sub[i - 1, j - 1]
                if u >= 0:
                    a += A[i - 1, j - 1] * probs[u]
            if i > 0:
                u = dele[i - 1]
                if u >= 0:
                    a += A[i - 1, j] * probs[u]
            if j > 0:
                u = ins[j - 1]
                if u >= 0:
                    a += A[i, j - 1] * probs[u]
            A[i, j] = a
    tot = A[n, m]
    if tot <= 0.0:
        lt = -1e300
    else:
        lt = log(tot)
    num = log_lam + lt
    den = log_rest + log_ntr
    mx = num if num > den else den
    z = exp(num - mx) / (exp(num - mx) + exp(den - mx))
    if tot <= 0.0 or z == 0.0:
        return lt, z

    B[n, m] = 1.0
    for i in range(n, -1, -1):
        for j in range(m, -1, -1):
            if i == n and j == m:
                continue
            a = 0.0
            if i < n and j < m:
                u = sub[i, j]
                if u >= 0:
                    a += B[i + 1, j + 1] * probs[u]
            if i < n:
                u = dele[i]
                if u >= 0:
                    a += B[i + 1, j] * probs[u]
            if j < m:
                u = ins[j]
                if u >= 0:
                    a += B[i, j + 1] * probs[u]
            B[i, j] = a

    scale = z / tot
    for i in range(n + 1):
        for j in range(m + 1):
            if A[i, j] == 0.0:
                continue
            if i < n and j < m:
                u = sub[i, j]
                if u >= 0:
                    counts[u] += A[i, j] * probs[u] * B[i + 1, j + 1] * scale
            if i < n:
                u = dele[i]
                if u >= 0:
                    counts[u] += A[i, j] * probs[u] * B[i + 1, j] * scale
            if j < m:
                u = ins[j]
                if u >= 0:
                    counts[u] += A[i, j] * probs[u] * B[i, j + 1] * scale
    return lt, z
