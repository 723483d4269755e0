"""Numba kernels for F_{q^e} in exponent/log form with Zech logarithms.

Elements are integers in [0, q^e) whose base-q digits are polynomial
coefficients; the prime subfield F_q is exactly the digits-0-only range [0, q).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def build_tables(q, e, flow):
    """exp/log tables for x modulo x^e + flow(x); ok is False if x is not primitive."""
    Q = q ** e
    Q1 = Q - 1
    exp = np.zeros(2 * Q1, dtype=np.int64)
    log = np.full(Q, -1, dtype=np.int64)
    dig = np.zeros(e, dtype=np.int64)
    pw = np.ones(e, dtype=np.int64)
    for i in range(1, e):
        pw[i] = pw[i - 1] * q
    dig[0] = 1
    for k in range(Q1):
        v = 0
        for i in range(e):
            v += dig[i] * pw[i]
        if log[v] != -1:
            return False, exp, log
        log[v] = k
        exp[k] = v
        exp[k + Q1] = v
        top = dig[e - 1]
        for i in range(e - 1, 0, -1):
            dig[i] = dig[i - 1]
        dig[0] = 0
        for i in range(e):
            dig[i] = (dig[i] - top * flow[i]) % q
    return True, exp, log


@njit(cache=True)
def build_zech(q, exp, log):
    Q1 = log.shape[0] - 1
    zech = np.empty(Q1, dtype=np.int64)
    for k in range(Q1):
        v = exp[k]
        d0 = v % q
        w = v - d0 + (d0 + 1) % q
        zech[k] = log[w] if w != 0 else -1
    return zech


@njit(cache=True, inline="always")
def gadd(a, b, exp, log, zech):
    if a == 0:
        return b
    if b == 0:
        return a
    Q1 = zech.shape[0]
    la = log[a]
    d = log[b] - la
    if d < 0:
        d += Q1
    z = zech[d]
    if z < 0:
        return np.int64(0)
    return exp[la + z]


@njit(cache=True, inline="always")
def gmul(a, b, exp, log):
    if a == 0 or b == 0:
        return np.int64(0)
    return exp[log[a] + log[b]]


@njit(cache=True, inline="always")
def gneg(a, exp, log, half):
    if a == 0 or half == 0:
        return a
    return exp[log[a] + half]


@njit(cache=True, inline="always")
def ginv(a, exp, log, Q1):
    return exp[Q1 - log[a]]


@njit(cache=True)
def vec_add(dst, src, exp, log, zech):
    for i in range(dst.shape[0]):
        dst[i] = gadd(dst[i], src[i], exp, log, zech)


@njit(cache=True)
def syndrome_update(S, idx, val, q, exp, log, zech):
    """S[r-1] += val * g^(idx*r) for r = 1..len(S)."""
    Q1 = zech.shape[0]
    for e in range(idx.shape[0]):
        d = val[e] % q
        if d == 0:
            continue
        ld = log[d]
        step = idx[e] % Q1
        t = ld
        for r in range(S.shape[0]):
            t += step
            if t >= Q1:
                t -= Q1
            S[r] = gadd(S[r], exp[t], exp, log, zech)


@njit(cache=True)
def decode(S, k, m, q, exp, log, zech, half):
    """Syndrome decoding; returns (ok, positions, values)."""
    Q1 = zech.shape[0]
    n2 = S.shape[0]
    empty = np.zeros(0, dtype=np.int64)
    C = np.zeros(n2 + 1, dtype=np.int64)
    B = np.zeros(n2 + 1, dtype=np.int64)
    T = np.zeros(n2 + 1, dtype=np.int64)
    C[0] = 1
    B[0] = 1
    L = 0
    shift = 1
    bb = np.int64(1)
    for nn in range(n2):
        d = S[nn]
        for i in range(1, L + 1):
            d = gadd(d, gmul(C[i], S[nn - i], exp, log), exp, log, zech)
        if d == 0:
            shift += 1
            continue
        coef = gneg(gmul(d, ginv(bb, exp, log, Q1), exp, log), exp, log, half)
        if 2 * L <= nn:
            T[:] = C
            for i in range(n2 + 1 - shift):
                C[i + shift] = gadd(C[i + shift], gmul(coef, B[i], exp, log), exp, log, zech)
            L = nn + 1 - L
            B[:] = T
            bb = d
            shift = 1
        else:
            for i in range(n2 + 1 - shift):
                C[i + shift] = gadd(C[i + shift], gmul(coef, B[i], exp, log), exp, log, zech)
            shift += 1
    if L == 0:
        return True, empty, empty
    if L > k or C[L] == 0:
        return False, empty, empty
    pos = np.empty(L, dtype=np.int64)
    found = 0
    for j in range(m):
        lx = (Q1 - j % Q1) % Q1
        x = exp[lx]
        acc = np.int64(0)
        for i in range(L, -1, -1):
            acc = gadd(gmul(acc, x, exp, log), C[i], exp, log, zech)
        if acc == 0:
            if found == L:
                return False, empty, empty
            pos[found] = j
            found += 1
    if found != L:
        return False, empty, empty
    # error evaluator Omega = S(x) C(x) mod x^L
    om = np.zeros(L, dtype=np.int64)
    for i in range(L):
        acc = np.int64(0)
        for a in range(i + 1):
            acc = gadd(acc, gmul(S[a], C[i - a], exp, log), exp, log, zech)
        om[i] = acc
    vals = np.empty(L, dtype=np.int64)
    for a in range(L):
        lx = (Q1 - pos[a] % Q1) % Q1
        x = exp[lx]
        num = np.int64(0)
        for i in range(L - 1, -1, -1):
            num = gadd(gmul(num, x, exp, log), om[i], exp, log, zech)
        den = np.int64(0)
        xp = np.int64(1)
        for i in range(1, L + 1):
            c = gmul(C[i], i % q, exp, log)
            den = gadd(den, gmul(c, xp, exp, log), exp, log, zech)
            xp = gmul(xp, x, exp, log)
        if den == 0:
            return False, empty, empty
        v = gneg(gmul(num, ginv(den, exp, log, Q1), exp, log), exp, log, half)
        if v == 0 or v >= q:
            return False, empty, empty
        vals[a] = v
    check = np.zeros(n2, dtype=np.int64)
    syndrome_update(check, pos, vals, q, exp, log, zech)
    for r in range(n2):
        if check[r] != S[r]:
            return False, empty, empty
    return True, pos, vals
