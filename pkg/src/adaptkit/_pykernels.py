"""Pure-Python/numpy fallback for :mod:`adaptkit._kernels`."""

import math

import numpy as np


def _xlogx(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def exchange_sweep(order, assign, N, Nc, wcount, lptr, lidx, lcnt, rptr, ridx, rcnt,
                   selfcnt, allow_empty, eps):
    K = Nc.shape[0]
    deltas = []
    for w in order:
        w = int(w)
        a = int(assign[w])
        nw = wcount[w]
        s = selfcnt[w]
        L = np.zeros(K)
        R = np.zeros(K)
        lo, hi = lptr[w], lptr[w + 1]
        np.add.at(L, assign[lidx[lo:hi]], lcnt[lo:hi])
        lo, hi = rptr[w], rptr[w + 1]
        np.add.at(R, assign[ridx[lo:hi]], rcnt[lo:hi])
        touched = np.flatnonzero((L != 0) | (R != 0))

        N[touched, a] -= L[touched]
        N[a, touched] -= R[touched]
        N[a, a] -= s
        Nc[a] -= nw

        delta = -2.0 * (_xlogx(Nc + nw) - _xlogx(Nc))
        if touched.size:
            Lt = L[touched][:, None]
            rows = N[touched, :]
            gain_in = (_xlogx(rows + Lt) - _xlogx(rows)) * (Lt != 0)
            Rt = R[touched][None, :]
            cols = N[:, touched]
            gain_out = (_xlogx(cols + Rt) - _xlogx(cols)) * (Rt != 0)
            # rows/cols where c == b are replaced by the diagonal term below
            gain_in[np.arange(touched.size), touched] = 0.0
            gain_out[touched, np.arange(touched.size)] = 0.0
            delta += gain_in.sum(axis=0) + gain_out.sum(axis=1)
        diag = np.diagonal(N)
        delta += _xlogx(diag + L + R + s) - _xlogx(diag)

        if not allow_empty and Nc[a] == 0.0:
            best = a
        else:
            bestd = float(delta.max())
            lim = bestd - eps * max(1.0, abs(bestd))
            best = int(np.flatnonzero(delta >= lim)[0])
        cur = float(delta[a])

        N[touched, best] += L[touched]
        N[best, touched] += R[touched]
        N[best, best] += s
        Nc[best] += nw
        assign[w] = best
        if best != a:
            deltas.append(float(delta[best]) - cur)
    return deltas


def lattice_estep(sub, dele, ins, probs, counts, log_lam, log_rest, log_ntr):
    n = len(dele)
    m = len(ins)
    P = probs
    A = [[0.0] * (m + 1) for _ in range(n + 1)]
    A[0][0] = 1.0
    for i in range(n + 1):
        Ai = A[i]
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            a = 0.0
            if i > 0:
                if j > 0:
                    u = sub[i - 1][j - 1]
                    if u >= 0:
                        a += A[i - 1][j - 1] * P[u]
                u = dele[i - 1]
                if u >= 0:
                    a += A[i - 1][j] * P[u]
            if j > 0:
                u = ins[j - 1]
                if u >= 0:
                    a += Ai[j - 1] * P[u]
            Ai[j] = a
    tot = A[n][m]
    lt = math.log(tot) if tot > 0 else -1e300
    num = log_lam + lt
    den = log_rest + log_ntr
    mx = max(num, den)
    z = math.exp(num - mx) / (math.exp(num - mx) + math.exp(den - mx))
    if tot <= 0 or z == 0.0:
        return lt, z

    B = [[0.0] * (m + 1) for _ in range(n + 1)]
    B[n][m] = 1.0
    for i in range(n, -1, -1):
        Bi = B[i]
        for j in range(m, -1, -1):
            if i == n and j == m:
                continue
            b = 0.0
            if i < n:
                if j < m:
                    u = sub[i][j]
                    if u >= 0:
                        b += B[i + 1][j + 1] * P[u]
                u = dele[i]
                if u >= 0:
                    b += B[i + 1][j] * P[u]
            if j < m:
                u = ins[j]
                if u >= 0:
                    b += Bi[j + 1] * P[u]
            Bi[j] = b

    scale = z / tot
    for i in range(n + 1):
        for j in range(m + 1):
            a = A[i][j]
            if a == 0.0:
                continue
            if i < n:
                if j < m:
                    u = sub[i][j]
                    if u >= 0:
                        counts[u] += a * P[u] * B[i + 1][j + 1] * scale
                u = dele[i]
                if u >= 0:
                    counts[u] += a * P[u] * B[i + 1][j] * scale
            if j < m:
                u = ins[j]
                if u >= 0:
                    counts[u] += a * P[u] * B[i][j + 1] * scale
    return lt, z
