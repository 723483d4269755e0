"""Numba kernels behind the sketches.

Hash coefficients are never stored by the kernels: coefficient ``t`` of hash
number ``i`` in a family is the SplitMix64 output at counter ``i*k + t`` of the
family base, reduced mod the family prime.  The Python side mirrors this exactly
(see ``algebra.family_coeff``) so explicit and implicit hashes agree.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numba.cpython.unsafe.numbers import trailing_zeros

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def coeff(base, j, p):
    z = base + np.uint64(j + 1) * GAMMA
    return np.int64(mix64(z) % np.uint64(p))


@njit(cache=True, inline="always")
def mulmod(a, b, p):
    # valid for 0 <= a, b < p < 2**51
    q = np.int64(np.float64(a) * np.float64(b) / np.float64(p))
    r = np.int64(np.uint64(a) * np.uint64(b) - np.uint64(q) * np.uint64(p))
    if r < 0:
        r += p
    elif r >= p:
        r -= p
    return r


@njit(cache=True)
def powmod(b, e, p):
    r = np.int64(1) % p
    b = b % p
    while e > 0:
        if e & 1:
            r = mulmod(r, b, p)
        b = mulmod(b, b, p)
        e >>= 1
    return r


@njit(cache=True, inline="always")
def pair_hash(base, i, p, x):
    """Degree-1 member ``i`` of a pairwise family, evaluated at ``x < p``."""
    c0 = coeff(base, 2 * i, p)
    c1 = coeff(base, 2 * i + 1, p)
    r = mulmod(c1, x, p) + c0
    if r >= p:
        r -= p
    return r


@njit(cache=True, inline="always")
def poly_hash(base, i, k, p, x):
    acc = np.int64(0)
    for t in range(k - 1, -1, -1):
        acc = mulmod(acc, x, p) + coeff(base, i * k + t, p)
        if acc >= p:
            acc -= p
    return acc


@njit(cache=True, inline="always")
def kw_hash(base, i, k, p, x):
    if k == 2:
        return pair_hash(base, i, p, x)
    return poly_hash(base, i, k, p, x)


@njit(cache=True)
def hash_table(base, k, p, m, idx, xs):
    """out[a, b] = h_{idx[a]}(xs[b]) mod m."""
    out = np.empty((idx.shape[0], xs.shape[0]), dtype=np.int64)
    for a in range(idx.shape[0]):
        for b in range(xs.shape[0]):
            if k == 2:
                out[a, b] = pair_hash(base, idx[a], p, xs[b]) % m
            else:
                out[a, b] = poly_hash(base, idx[a], k, p, xs[b]) % m
    return out


@njit(cache=True)
def coeff_table(base, k, p, idx):
    out = np.empty((idx.shape[0], k), dtype=np.int64)
    for a in range(idx.shape[0]):
        for t in range(k):
            out[a, t] = coeff(base, idx[a] * k + t, p)
    return out


@njit(cache=True, inline="always")
def level_of(g, top):
    """Trailing zeros of g (already masked below 2**top), capped at top."""
    return trailing_zeros(g | (np.int64(1) << top))


# --------------------------------------------------------------------------
# L0 banks: buckets[b, rep, level, 0] = count, [1] = index sum,
# [2 + t] = fingerprint t mod P.  Buckets hold elements whose level is exactly
# ``level`` (the top level absorbs the rest); nested level sums are suffix sums.


@njit(cache=True, inline="always")
def _reduce(c0, c1, j, p, exact, invp):
    if exact:
        x = c1 * j + c0
        g = x - np.int64(np.float64(x) * invp) * p
        if g < 0:
            g += p
        elif g >= p:
            g -= p
        return g
    g = mulmod(c1, j, p) + c0
    if g >= p:
        g -= p
    return g


@njit(cache=True)
def _fingerprint_terms(zs, P, idx, dlt):
    ne = idx.shape[0]
    w = zs.shape[0]
    terms = np.empty((ne, w), dtype=np.int64)
    for e in range(ne):
        dm = dlt[e] % P
        for t in range(w):
            terms[e, t] = mulmod(dm, powmod(zs[t], idx[e], P), P)
    return terms


@njit(cache=True, inline="always")
def mulmod_inv(a, b, p, invp):
    # mulmod with a precomputed 1/p; the quotient estimate is off by at most one
    q = np.int64(np.float64(a) * np.float64(b) * invp)
    r = np.int64(np.uint64(a) * np.uint64(b) - np.uint64(q) * np.uint64(p))
    if r < 0:
        r += p
    elif r >= p:
        r -= p
    return r


@njit(cache=True)
def _powers(idx, k, p):
    """pw[e, t] = idx[e]**t mod p, shared by every polynomial hash applied to the batch."""
    pw = np.empty((idx.shape[0], k), dtype=np.int64)
    for e in range(idx.shape[0]):
        x = idx[e] % p
        pw[e, 0] = 1 % p
        for t in range(1, k):
            pw[e, t] = mulmod(pw[e, t - 1], x, p)
    return pw


@njit(cache=True, inline="always")
def _apply_block(blk, hb, base, k, p, top, P, terms, idx, dlt, exact, invp, pw):
    """Add the batch to one sampler's (rep, level, lane) block; hb is its first hash index."""
    r = blk.shape[0]
    w = blk.shape[2] - 2
    mask = (np.int64(1) << top) - 1
    cs = np.empty(k, dtype=np.int64)
    for rep in range(r):
        for t in range(k):
            cs[t] = coeff(base, k * (hb + rep) + t, p)
        for e in range(idx.shape[0]):
            d = dlt[e]
            if d == 0:
                continue
            j = idx[e]
            if k == 2:
                g = _reduce(cs[0], cs[1], j, p, exact, invp)
            else:
                g = cs[0]
                for t in range(1, k):
                    g += mulmod_inv(cs[t], pw[e, t], p, invp)
                    if g >= p:
                        g -= p
            lev = level_of(g & mask, top)
            blk[rep, lev, 0] += d
            blk[rep, lev, 1] += d * j
            for t in range(w):
                v = blk[rep, lev, 2 + t] + terms[e, t]
                if v >= P:
                    v -= P
                blk[rep, lev, 2 + t] = v


@njit(cache=True)
def l0_update(bk, first, base, k, p, top, P, zs, idx, dlt):
    nb, r, _, _ = bk.shape
    terms = _fingerprint_terms(zs, P, idx, dlt)
    pw = _powers(idx, k, p)
    # products below 2**53 can be reduced with one float multiply
    exact = idx.shape[0] == 0 or np.float64(p) * np.float64(idx.max() + 1) < 2.0 ** 52
    invp = 1.0 / np.float64(p)
    # sampler-major order keeps each sampler's buckets in cache across the batch
    for b in range(nb):
        _apply_block(bk[b], (first + b) * r, base, k, p, top, P, terms, idx, dlt, exact, invp, pw)


@njit(cache=True)
def _l0_query_one(bk, b, P, zs, m, acc):
    """Returns (status, index, value); status 0 EMPTY, 1 SAMPLE, 2 FAIL."""
    _, r, nl, width = bk.shape
    w = width - 2
    nonzero = False
    for rep in range(r):
        top = nl * width
        for c in range(width):
            acc[top + c] = 0
        for lev in range(nl - 1, -1, -1):
            o = lev * width
            for c in range(width):
                x = bk[b, rep, lev, c]
                if x != 0:
                    nonzero = True
                x += acc[o + width + c]
                if c >= 2 and x >= P:
                    x -= P
                acc[o + c] = x
        for lev in range(nl):
            o = lev * width
            cnt = acc[o]
            if cnt == 0:
                continue
            s = acc[o + 1]
            if s % cnt != 0:
                continue
            i = s // cnt
            if i < 0 or i >= m:
                continue
            cm = cnt % P
            ok = True
            for t in range(w):
                if acc[o + 2 + t] != mulmod(cm, powmod(zs[t], i, P), P):
                    ok = False
                    break
            if ok:
                return 1, i, cnt
    if nonzero:
        return 2, -1, 0
    return 0, -1, 0


@njit(cache=True)
def l0_query(bk, P, zs, m):
    nb, r, nl, width = bk.shape
    status = np.empty(nb, dtype=np.int8)
    index = np.empty(nb, dtype=np.int64)
    value = np.empty(nb, dtype=np.int64)
    acc = np.zeros((nl + 1) * width, dtype=np.int64)
    for b in range(nb):
        st, i, v = _l0_query_one(bk, b, P, zs, m, acc)
        status[b] = st
        index[b] = i
        value[b] = v
    return status, index, value


@njit(cache=True)
def l0_query_injected(bk, base, k, p, top, P, zs, m, idx, dlt):
    """l0_query of the bank plus a batch of updates, without writing the batch into the bank."""
    nb, r, nl, width = bk.shape
    terms = _fingerprint_terms(zs, P, idx, dlt)
    pw = _powers(idx, k, p)
    exact = idx.shape[0] == 0 or np.float64(p) * np.float64(idx.max() + 1) < 2.0 ** 52
    invp = 1.0 / np.float64(p)
    scratch = np.empty((1, r, nl, width), dtype=np.int64)
    status = np.empty(nb, dtype=np.int8)
    index = np.empty(nb, dtype=np.int64)
    value = np.empty(nb, dtype=np.int64)
    acc = np.zeros((nl + 1) * width, dtype=np.int64)
    for b in range(nb):
        scratch[0] = bk[b]
        _apply_block(scratch[0], b * r, base, k, p, top, P, terms, idx, dlt, exact, invp, pw)
        st, i, v = _l0_query_one(scratch, 0, P, zs, m, acc)
        status[b] = st
        index[b] = i
        value[b] = v
    return status, index, value


@njit(cache=True)
def add_mod_tail(dst, src, P):
    """dst += src on the last axis: exact for the first two lanes, mod P after."""
    flat_d = dst.reshape(-1, dst.shape[-1])
    flat_s = src.reshape(-1, src.shape[-1])
    for a in range(flat_d.shape[0]):
        flat_d[a, 0] += flat_s[a, 0]
        flat_d[a, 1] += flat_s[a, 1]
        for c in range(2, flat_d.shape[1]):
            v = flat_d[a, c] + flat_s[a, c]
            if v >= P:
                v -= P
            flat_d[a, c] = v


# --------------------------------------------------------------------------
# NE-Counter


@njit(cache=True)
def counter_update(cnt, base, first, p, vs, dlt):
    t = cnt.shape[0]
    for e in range(vs.shape[0]):
        v = vs[e]
        for i in range(t):
            cnt[i, pair_hash(base, first + i, p, v) & 1] += dlt[e]


@njit(cache=True)
def counter_says_one(cnt):
    for i in range(cnt.shape[0]):
        if (cnt[i, 0] != 0) == (cnt[i, 1] != 0):
            return False
    return True


# --------------------------------------------------------------------------
# NE-Sampler: component c = iteration * levels + level.


@njit(cache=True)
def _poly_at(cs, pw, e, p, invp):
    g = cs[0]
    for t in range(1, cs.shape[0]):
        g += mulmod_inv(cs[t], pw[e, t], p, invp)
        if g >= p:
            g -= p
    return g


@njit(cache=True)
def nes_membership(vs, base, k, p, levels, comps):
    ne = vs.shape[0]
    out = np.zeros((ne, comps), dtype=np.bool_)
    pw = _powers(vs, k, p)
    invp = 1.0 / np.float64(p)
    cs = np.empty(k, dtype=np.int64)
    # component-major: each hash's coefficients are derived once per batch
    for c in range(comps):
        lev = c % levels
        if lev == 0:
            out[:, c] = True
            continue
        for t in range(k):
            cs[t] = coeff(base, c * k + t, p)
        low = (np.int64(1) << lev) - 1
        for e in range(ne):
            out[e, c] = (_poly_at(cs, pw, e, p, invp) & low) == 0
    return out


@njit(cache=True)
def nes_apply(us, vs, dlt, n, member, slot, cnt, bk,
              cbase, cp, lbase, lk, lp, top, P, zs):
    ne = us.shape[0]
    comps = member.shape[1]
    t = cnt.shape[1]
    r = bk.shape[1]
    w = bk.shape[3] - 2
    mask = (np.int64(1) << top) - 1
    js = np.empty(ne, dtype=np.int64)
    for e in range(ne):
        a = min(us[e], vs[e])
        b = max(us[e], vs[e])
        js[e] = a * n - a * (a + 1) // 2 + (b - a - 1)
    terms = _fingerprint_terms(zs, P, js, dlt)
    pw = _powers(js, lk, lp)
    cinv = 1.0 / np.float64(cp)
    linv = 1.0 / np.float64(lp)
    cc = np.empty((t, 2), dtype=np.int64)
    lc = np.empty((r, lk), dtype=np.int64)
    for c in range(comps):
        ready = False
        for e in range(ne):
            if not member[e, c]:
                continue
            if not ready:
                for i in range(t):
                    cc[i, 0] = coeff(cbase, 2 * (c * t + i), cp)
                    cc[i, 1] = coeff(cbase, 2 * (c * t + i) + 1, cp)
                for rep in range(r):
                    for q in range(lk):
                        lc[rep, q] = coeff(lbase, (c * r + rep) * lk + q, lp)
                ready = True
            s = slot[c]
            v = vs[e]
            d = dlt[e]
            j = js[e]
            for i in range(t):
                h = mulmod_inv(cc[i, 1], v, cp, cinv) + cc[i, 0]
                if h >= cp:
                    h -= cp
                cnt[s, i, h & 1] += d
            for rep in range(r):
                lev = level_of(_poly_at(lc[rep], pw, e, lp, linv) & mask, top)
                bk[s, rep, lev, 0] += d
                bk[s, rep, lev, 1] += d * j
                for q in range(w):
                    x = bk[s, rep, lev, 2 + q] + terms[e, q]
                    if x >= P:
                        x -= P
                    bk[s, rep, lev, 2 + q] = x


# --------------------------------------------------------------------------
# Index-Recovery banks over F_q.


@njit(cache=True)
def ir_update(z, zs, hbase, hp, rng, sbase, sp, q, idx, val):
    tp, ts, _ = zs.shape
    for e in range(idx.shape[0]):
        x = idx[e]
        d = val[e] % q
        if d == 0:
            continue
        for i in range(tp):
            if pair_hash(hbase, i, hp, x) % rng != 0:
                continue
            z[i] = (z[i] + d) % q
            for s in range(ts):
                bit = pair_hash(sbase, i * ts + s, sp, x) & 1
                zs[i, s, bit] = (zs[i, s, bit] + d) % q


@njit(cache=True)
def ir_recover(z, zs, hbase, hp, rng, sbase, sp, tpad, first):
    """Per inner sketch (hash index first + i): (ok, index, value).

    FAIL when |H∩T| != 1, when a split test sees both halves nonzero, or when
    the nonzero half of a split test is not the side the candidate hashes to.
    """
    tp, ts, _ = zs.shape
    ok = np.zeros(tp, dtype=np.bool_)
    index = np.full(tp, -1, dtype=np.int64)
    value = np.zeros(tp, dtype=np.int64)
    for i in range(tp):
        hits = 0
        who = -1
        for a in range(tpad.shape[0]):
            if pair_hash(hbase, first + i, hp, tpad[a]) % rng == 0:
                hits += 1
                who = tpad[a]
                if hits > 1:
                    break
        if hits != 1:
            continue
        clean = True
        for s in range(ts):
            lo, hi = zs[i, s, 0] != 0, zs[i, s, 1] != 0
            if lo and hi:
                clean = False
                break
            if lo or hi:
                side = pair_hash(sbase, (first + i) * ts + s, sp, who) & 1
                if (side == 1) != hi:
                    clean = False
                    break
        if clean:
            ok[i] = True
            index[i] = who
            value[i] = z[i]
    return ok, index, value


# --------------------------------------------------------------------------
# Seed-expanded F_q rows for the exhaustive oracle.


@njit(cache=True)
def expand_rows(base, rows, n, q):
    out = np.empty((rows, n), dtype=np.int64)
    for i in range(rows):
        for v in range(n):
            out[i, v] = coeff(base, i * n + v, q)
    return out
