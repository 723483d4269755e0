"""L0 sampling and deterministic sparse recovery over F_q."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _gf, _jit
from .algebra import SEED_BITS, HashFamily, bit_width, derive_seed, family_coeff, is_prime, smallest_prime_gt
from .stream import BitMeter, LinearSketch, edge_indices, edge_pairs, num_pairs

EMPTY = "EMPTY"
FAIL = "FAIL"
SAMPLE = "SAMPLE"
_STATUS = {0: EMPTY, 1: SAMPLE, 2: FAIL}

FINGERPRINT_FLOOR = 1 << 48
FINGERPRINT_CEIL = 1 << 63     # storable in int64; enough to meter a bank
FINGERPRINT_ARITH = 1 << 51    # the float mulmod is exact below this
LEVEL_K = 4                    # independence of the subsampling hashes


@dataclass(frozen=True)
class L0Result:
    status: str
    index: int | None = None
    value: int | None = None

    @property
    def ok(self) -> bool:
        return self.status == SAMPLE


def fingerprint_prime(m: int) -> int:
    P = smallest_prime_gt(max(m * m, FINGERPRINT_FLOOR))
    if P >= FINGERPRINT_CEIL:
        raise ValueError(f"domain {m} too large for 63-bit fingerprints")
    return P


def check_arithmetic(P: int) -> None:
    if P >= FINGERPRINT_ARITH:
        raise ValueError("sampler domain too large to update (fingerprint prime above 2^51); "
                         "such banks can be metered but not fed")


def fingerprint_bases(seed: int, w: int, P: int) -> np.ndarray:
    base = derive_seed(seed, "l0-fingerprint")
    return np.array([1 + family_coeff(base, t, P - 1) for t in range(w)], dtype=np.int64)


class L0Bank(LinearSketch):
    """``count`` independent L0 samplers over a vector of length m.

    Each sampler keeps r repetitions of ceil(log2 m)+1 nested levels, cut by a
    ``level_k``-wise hash (pairwise leaves a visible bias in which support
    element gets isolated; 4-wise does not at the sizes tested).  A level
    is an exact one-sparse detector: integer count, integer index-weighted sum
    and w polynomial fingerprints mod a prime P > m^2.  Samplers in one bank
    share their fingerprint bases (one declared sharing group).

    If ``n`` is given the bank sketches the edge vector of an n-vertex graph.
    """

    def __init__(self, count: int, m: int | None = None, *, delta_f: float = 0.01,
                 delta_e: float = 2.0 ** -20, seed: int = 0, fingerprint_seed: int | None = None,
                 value_bound: int = 1, n: int | None = None, level_k: int = LEVEL_K):
        if n is not None:
            m = num_pairs(n)
        if m is None or m < 1 or count < 1:
            raise ValueError("L0Bank needs count >= 1 and m >= 1")
        if not (0 < delta_f < 1 and 0 < delta_e < 1):
            raise ValueError("error probabilities must lie in (0, 1)")
        self.n = n if n is not None else 0
        self.count, self.m = count, m
        self.seed = seed
        self.fp_seed = seed if fingerprint_seed is None else fingerprint_seed
        self.value_bound = value_bound
        self.reps = max(1, math.ceil(math.log2(1 / delta_f)))
        self.levels = math.ceil(math.log2(m)) + 1 if m > 1 else 1
        self.top = self.levels - 1
        self.family = HashFamily(level_k, m, 1 << self.top, seed, "l0-level")
        self.P = fingerprint_prime(m)
        gap = math.log2(self.P / m)
        self.w = max(1, math.ceil((math.log2(self.reps * self.levels) + math.log2(1 / delta_e)) / gap))
        self.zs = fingerprint_bases(self.fp_seed, self.w, self.P)
        self.buckets = np.zeros((count, self.reps, self.levels, 2 + self.w), dtype=np.int64)

    @property
    def params(self) -> tuple:
        return ("L0Bank", self.count, self.m, self.n, self.reps, self.levels, self.family.k, self.w, self.P,
                self.seed, self.fp_seed, self.value_bound)

    def update(self, indices, deltas) -> None:
        idx = np.ascontiguousarray(indices, dtype=np.int64)
        dlt = np.ascontiguousarray(deltas, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.m):
            raise ValueError("index outside sampler domain")
        check_arithmetic(self.P)
        f = self.family
        _jit.l0_update(self.buckets, 0, f._ubase, f.k, f.p, self.top, self.P, self.zs, idx, dlt)

    def feed_arrays(self, us, vs, ds) -> None:
        if not self.n:
            raise TypeError("this bank sketches a plain vector; use update()")
        self.update(edge_indices(us, vs, self.n), ds)

    def _add_state(self, other: "L0Bank") -> None:
        _jit.add_mod_tail(self.buckets, other.buckets, self.P)

    def state(self) -> dict[str, np.ndarray]:
        return {"buckets": self.buckets}

    def query_all(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised query: (status codes 0/1/2 = EMPTY/SAMPLE/FAIL, index, value)."""
        return _jit.l0_query(self.buckets, self.P, self.zs, self.m)

    def query_all_with(self, indices, deltas) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """query_all on the bank plus extra updates, leaving the bank untouched."""
        idx = np.ascontiguousarray(indices, dtype=np.int64)
        dlt = np.ascontiguousarray(deltas, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.m):
            raise ValueError("index outside sampler domain")
        check_arithmetic(self.P)
        f = self.family
        return _jit.l0_query_injected(self.buckets, f._ubase, f.k, f.p, self.top, self.P, self.zs, self.m, idx, dlt)

    def query(self, b: int = 0) -> L0Result:
        st, idx, val = _jit.l0_query(self.buckets[b:b + 1], self.P, self.zs, self.m)
        status = _STATUS[int(st[0])]
        if status != SAMPLE:
            return L0Result(status)
        return L0Result(SAMPLE, int(idx[0]), int(val[0]))

    def sample_edge(self, b: int = 0) -> L0Result:
        """Like query, with the index decoded into an (u, v) pair for graph banks."""
        res = self.query(b)
        if res.ok and self.n:
            u, v = edge_pairs(np.array([res.index]), self.n)
            return L0Result(SAMPLE, (int(u[0]), int(v[0])), res.value)
        return res

    def sampler_sketch_bits(self) -> int:
        bound = self.value_bound * self.m
        per_level = bit_width(2 * bound + 1) + bit_width(2 * bound * self.m + 1) + self.w * bit_width(self.P)
        return self.reps * self.levels * per_level

    def fingerprint_group(self) -> tuple[str, int]:
        return f"l0-fingerprint:{self.fp_seed}:{self.P}:{self.w}", self.w * bit_width(self.P) + SEED_BITS

    def measure(self, count: int | None = None) -> BitMeter:
        """Meter of this bank, or of a bank of ``count`` samplers with the same parameters."""
        count = self.count if count is None else count
        key, bits = self.fingerprint_group()
        return BitMeter(count * self.sampler_sketch_bits(),
                        count * self.reps * self.family.bits_per_hash + SEED_BITS, {key: bits})


class L0Sampler(L0Bank):
    """A single L0 sampler (a bank of one)."""

    def __init__(self, m: int | None = None, **kw):
        super().__init__(1, m, **kw)


def l0_query(s: L0Bank, b: int = 0) -> L0Result:
    return s.query(b)


# --------------------------------------------------------------------------
# F_{q^e}


class GF:
    """Tables for F_{q^e} with a primitive element g (x modulo a primitive polynomial)."""

    def __init__(self, q: int, e: int):
        if not is_prime(q):
            raise ValueError(f"{q} is not prime")
        self.q, self.e, self.Q = q, e, q ** e
        if self.Q > 1 << 24:
            raise ValueError("extension field too large for table arithmetic")
        self.Q1 = self.Q - 1
        self.half = 0 if q == 2 else self.Q1 // 2
        for tail in itertools.product(range(q), repeat=e):
            flow = np.array(tail[::-1], dtype=np.int64)
            if flow[0] == 0:
                continue
            ok, exp, log = _gf.build_tables(q, e, flow)
            if ok:
                break
        else:  # pragma: no cover - a primitive polynomial always exists
            raise RuntimeError("no primitive polynomial found")
        self.modulus = flow
        self.exp, self.log = exp, log
        self.zech = _gf.build_zech(q, exp, log)

    def add(self, a: int, b: int) -> int:
        return int(_gf.gadd(a, b, self.exp, self.log, self.zech))

    def mul(self, a: int, b: int) -> int:
        return int(_gf.gmul(a, b, self.exp, self.log))

    def pow_g(self, k: int) -> int:
        return int(self.exp[k % self.Q1])


@lru_cache(maxsize=None)
def gf_tables(q: int, e: int) -> GF:
    return GF(q, e)


def extension_degree(q: int, m: int) -> int:
    e = 1
    while q ** e <= m:
        e += 1
    return e


class FqSparseRecovery(LinearSketch):
    """2k power sums s_r = sum_j x_j g^(j r) in F_{q^e}, with q^e > m.

    Recovers any vector over F_q with at most k nonzeros exactly.  Fully
    deterministic: no randomness is stored.
    """

    def __init__(self, k: int, q: int, m: int | None = None, *, n: int | None = None):
        if n is not None:
            m = num_pairs(n)
        if k < 1 or m is None or m < 1:
            raise ValueError("need k >= 1 and m >= 1")
        self.n = n if n is not None else 0
        self.k, self.q, self.m = k, q, m
        self.field = gf_tables(q, extension_degree(q, m))
        self.syndromes = np.zeros(2 * k, dtype=np.int64)

    @property
    def params(self) -> tuple:
        return ("FqSparseRecovery", self.k, self.q, self.m, self.n)

    def update(self, indices, values) -> None:
        idx = np.ascontiguousarray(indices, dtype=np.int64)
        val = np.ascontiguousarray(values, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.m):
            raise ValueError("index outside recovery domain")
        f = self.field
        _gf.syndrome_update(self.syndromes, idx, val, self.q, f.exp, f.log, f.zech)

    def feed_arrays(self, us, vs, ds) -> None:
        if not self.n:
            raise TypeError("this sketch covers a plain vector; use update()")
        self.update(edge_indices(us, vs, self.n), ds)

    def _add_state(self, other: "FqSparseRecovery") -> None:
        f = self.field
        _gf.vec_add(self.syndromes, other.syndromes, f.exp, f.log, f.zech)

    def subtract(self, indices, values) -> None:
        """Remove a known vector from the sketch (linearity)."""
        self.update(indices, -np.asarray(values, dtype=np.int64))

    def state(self) -> dict[str, np.ndarray]:
        return {"syndromes": self.syndromes}

    def measure(self) -> BitMeter:
        return BitMeter(2 * self.k * bit_width(self.field.Q), 0)

    def decode(self) -> dict[int, int] | None:
        """Exact support->value map when x is k-sparse, else None (NOT_SPARSE)."""
        f = self.field
        ok, pos, vals = _gf.decode(self.syndromes, self.k, self.m, self.q, f.exp, f.log, f.zech, f.half)
        if not ok:
            return None
        return dict(zip(pos.tolist(), vals.tolist()))


NOT_SPARSE = None


def fq_decode(s: FqSparseRecovery) -> dict[int, int] | None:
    return s.decode()
