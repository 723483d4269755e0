"""Sketches addressed by a vertex set S: NE-Counter, NE-Sampler and NE-Tester.

N(S) is the set of vertices outside S with at least one edge into S; edges with
both endpoints in S are invisible to all three sketches.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from . import _jit
from .algebra import SEED_BITS, HashFamily, bit_width, derive_seed
from .recovery import LEVEL_K, SAMPLE, L0Bank, check_arithmetic
from .stream import BitMeter, LinearSketch, edge_pairs, num_pairs, orient, vertex_mask

ONE = "One"
NOT_ONE = "NotOne"
YES = "Yes"
NO = "No"


def counter_width(n: int) -> int:
    # a counter never exceeds the number of vertex pairs in magnitude
    return bit_width(2 * num_pairs(n) + 1)


def _iterations(delta_e: float) -> int:
    return max(1, math.ceil(math.log2(1 / delta_e)))


class NECounter(LinearSketch):
    """Decides |N(S) ∩ T| = 1 with one-sided error δ_E."""

    def __init__(self, n: int, S, T, *, delta_e: float = 2.0 ** -20, seed: int = 0):
        self.n = n
        self.S = vertex_mask(n, S)
        self.T = vertex_mask(n, T)
        self.seed = seed
        self.t = _iterations(delta_e)
        self.family = HashFamily(2, n, 2, seed, "ne-counter")
        self.counters = np.zeros((self.t, 2), dtype=np.int64)

    @property
    def params(self) -> tuple:
        return ("NECounter", self.n, self.S.tobytes(), self.T.tobytes(), self.t, self.seed)

    def feed_arrays(self, us, vs, ds) -> None:
        _, outer, keep = orient(us, vs, self.S)
        d = ds[keep]
        sel = self.T[outer]
        _jit.counter_update(self.counters, self.family._ubase, 0, self.family.p,
                            np.ascontiguousarray(outer[sel]), np.ascontiguousarray(d[sel]))

    def _add_state(self, other: "NECounter") -> None:
        self.counters += other.counters

    def state(self) -> dict[str, np.ndarray]:
        return {"counters": self.counters}

    def query(self) -> str:
        return ONE if _jit.counter_says_one(self.counters) else NOT_ONE

    def measure(self) -> BitMeter:
        return BitMeter(2 * self.t * counter_width(self.n), self.t * self.family.bits_per_hash + SEED_BITS)


def ne_counter_query(c: NECounter) -> str:
    return c.query()


@dataclass(frozen=True)
class NESample:
    status: str
    edge: tuple[int, int] | None = None  # (endpoint in S, endpoint in N(S))
    component: int | None = None

    @property
    def ok(self) -> bool:
        return self.status == SAMPLE


class NESampler(LinearSketch):
    """Samples an edge from S to a near-uniform vertex of N(S).

    50 iterations of ceil(2 log2 n)+1 levels; level i keeps T_i = {v: h_i(v) = 0
    mod 2^i}, an NE-Counter for (S, T_i) and an L0 sampler over the S-T_i
    edges.  Per-level state is allocated the first time an update touches it;
    untouched levels are all-zero and cost nothing to hold.
    """

    ITERATIONS = 50

    def __init__(self, n: int, S, *, seed: int = 0, fingerprint_seed: int | None = None,
                 iterations: int = ITERATIONS):
        if n < 2:
            raise ValueError("NESampler needs n >= 2")
        self.n = n
        self.S = vertex_mask(n, S)
        self.seed = seed
        self.iterations = iterations
        self.levels = math.ceil(2 * math.log2(n)) + 1
        self.comps = iterations * self.levels
        delta_e = float(n) ** -10
        self.t = _iterations(delta_e)
        self.member_family = HashFamily(LEVEL_K, n, 1 << (self.levels - 1), seed, "nes-member")
        self.counter_family = HashFamily(2, n, 2, seed, "nes-counter")
        fp = derive_seed(seed, "nes-fp") if fingerprint_seed is None else fingerprint_seed
        self.l0 = L0Bank(1, n=n, delta_f=0.01, delta_e=delta_e, seed=derive_seed(seed, "nes-l0"),
                         fingerprint_seed=fp)
        self.slot = np.full(self.comps, -1, dtype=np.int64)
        self.used = 0
        self.counters = np.zeros((0, self.t, 2), dtype=np.int64)
        self.buckets = np.zeros((0,) + self.l0.buckets.shape[1:], dtype=np.int64)

    @property
    def params(self) -> tuple:
        return ("NESampler", self.n, self.S.tobytes(), self.seed, self.iterations, self.l0.params)

    def _allocate(self, comps: np.ndarray) -> None:
        fresh = comps[self.slot[comps] < 0]
        if not fresh.size:
            return
        need = self.used + fresh.size
        if need > self.counters.shape[0]:
            cap = max(need, 2 * self.counters.shape[0], 8)
            counters = np.zeros((cap,) + self.counters.shape[1:], dtype=np.int64)
            buckets = np.zeros((cap,) + self.buckets.shape[1:], dtype=np.int64)
            counters[:self.used] = self.counters[:self.used]
            buckets[:self.used] = self.buckets[:self.used]
            self.counters, self.buckets = counters, buckets
        self.slot[fresh] = np.arange(self.used, need)
        self.used = need

    def feed_arrays(self, us, vs, ds) -> None:
        inner, outer, keep = orient(us, vs, self.S)
        if not inner.size:
            return
        check_arithmetic(self.l0.P)
        inner = np.ascontiguousarray(inner)
        outer = np.ascontiguousarray(outer)
        d = np.ascontiguousarray(ds[keep])
        mf = self.member_family
        member = _jit.nes_membership(outer, mf._ubase, mf.k, mf.p, self.levels, self.comps)
        self._allocate(np.flatnonzero(member.any(axis=0)))
        l0 = self.l0
        _jit.nes_apply(inner, outer, d, self.n, member, self.slot, self.counters, self.buckets,
                       self.counter_family._ubase, self.counter_family.p,
                       l0.family._ubase, l0.family.k, l0.family.p, l0.top, l0.P, l0.zs)

    def _add_state(self, other: "NESampler") -> None:
        touched = np.flatnonzero(other.slot >= 0)
        if not touched.size:
            return
        self._allocate(touched)
        mine, theirs = self.slot[touched], other.slot[touched]
        self.counters[mine] += other.counters[theirs]
        block = self.buckets[mine]
        _jit.add_mod_tail(block, other.buckets[theirs], self.l0.P)
        self.buckets[mine] = block

    def state(self) -> dict[str, np.ndarray]:
        comps = np.flatnonzero(self.slot >= 0)
        at = self.slot[comps]
        live = self.counters[at].any(axis=(1, 2)) | self.buckets[at].any(axis=(1, 2, 3))
        if not live.any():
            return {}
        comps, at = comps[live], at[live]
        return {"comps": comps, "counters": self.counters[at], "buckets": self.buckets[at]}

    def __deepcopy__(self, memo) -> "NESampler":
        # hash families and the template bank are read-only after construction
        out = copy.copy(self)
        out.slot = self.slot.copy()
        out.counters = self.counters[:self.used].copy()
        out.buckets = self.buckets[:self.used].copy()
        return out

    def sample(self) -> NESample:
        l0 = self.l0
        for c in range(self.comps):
            s = self.slot[c]
            if s < 0 or not _jit.counter_says_one(self.counters[s]):
                continue
            st, idx, _ = _jit.l0_query(self.buckets[s:s + 1], l0.P, l0.zs, l0.m)
            if st[0] != 1:
                continue
            a, b = edge_pairs(idx, self.n)
            a, b = int(a[0]), int(b[0])
            edge = (a, b) if self.S[a] else (b, a)
            return NESample(SAMPLE, edge, c)
        return NESample("FAIL")

    def measure(self) -> BitMeter:
        per_comp = 2 * self.t * counter_width(self.n) + self.l0.sampler_sketch_bits()
        rand = (self.member_family.bits_per_hash + self.t * self.counter_family.bits_per_hash
                + self.l0.reps * self.l0.family.bits_per_hash)
        key, bits = self.l0.fingerprint_group()
        return BitMeter(self.comps * per_comp, self.comps * rand + SEED_BITS, {key: bits})


def ne_sample(s: NESampler) -> NESample:
    return s.sample()


def tester_size(n: int, a: int, b_tilde: int, scale: float = 1.0) -> int:
    return max(1, math.ceil(scale * (100 / 99) * 150 * math.log2(n) * (a + b_tilde) / b_tilde))


def tester_cutoff(n: int, scale: float = 1.0) -> int:
    return max(1, math.ceil(scale * 200 * math.log2(n)))


class NETester(LinearSketch):
    """Distinguishes |N(S) - T| <= b̃ from >= 2b̃ for a T given only at query time.

    ``scale`` multiplies the sampler count and the cutoff alike; 1.0 is the
    analysed setting.  At query time T is padded to exactly a vertices with
    dummy coordinates n, n+1, ... that no stream update can touch, so that a
    sample falls outside T with probability |N(S) - T| / (a + |N(S) - T|).
    """

    def __init__(self, n: int, S, a: int, b_tilde: int, *, seed: int = 0, scale: float = 1.0,
                 fingerprint_seed: int | None = None):
        if b_tilde < 1 or a < 16 * b_tilde:
            raise ValueError(f"NETester needs a >= 16*b_tilde (a={a}, b_tilde={b_tilde})")
        self.n = n
        self.S = vertex_mask(n, S)
        self.a, self.b_tilde, self.seed, self.scale = a, b_tilde, seed, scale
        self.k = tester_size(n, a, b_tilde, scale)
        self.cutoff = tester_cutoff(n, scale)
        self.bank = _tester_bank(n, a, self.k, seed, fingerprint_seed)

    @property
    def params(self) -> tuple:
        return ("NETester", self.n, self.S.tobytes(), self.a, self.b_tilde, self.k, self.seed)

    def feed_arrays(self, us, vs, ds) -> None:
        _, outer, keep = orient(us, vs, self.S)
        if outer.size:
            self.bank.update(outer, ds[keep])

    def _add_state(self, other: "NETester") -> None:
        self.bank._add_state(other.bank)

    def state(self) -> dict[str, np.ndarray]:
        return self.bank.state()

    def outside_count(self, T) -> int:
        """Samples landing outside T once an edge (w, min S) is injected for every w in padded T."""
        T = vertex_mask(self.n, T)
        real = np.flatnonzero(T & ~self.S)
        inject = np.concatenate([real, np.arange(self.n, self.n + max(0, self.a - real.size))])
        st, idx, _ = self.bank.query_all_with(inject, np.ones(inject.size, dtype=np.int64))
        hits = idx[st == 1]
        hits = hits[hits < self.n]
        return int(np.count_nonzero(~T[hits]))

    def test(self, T) -> str:
        return YES if self.outside_count(T) <= self.cutoff else NO

    def measure(self) -> BitMeter:
        return self.bank.measure()

    @staticmethod
    def meter(n: int, a: int, b_tilde: int, *, seed: int = 0, scale: float = 1.0,
              fingerprint_seed: int | None = None) -> BitMeter:
        """Meter of a tester with these parameters, without allocating its samplers."""
        return _tester_bank(n, a, 1, seed, fingerprint_seed).measure(tester_size(n, a, b_tilde, scale))


def _tester_bank(n: int, a: int, count: int, seed: int, fingerprint_seed: int | None) -> L0Bank:
    # coordinates [n, n + a) are the padding dummies
    return L0Bank(count, n + a, delta_f=0.01, delta_e=float(n) ** -10, seed=derive_seed(seed, "tester"),
                  fingerprint_seed=fingerprint_seed, value_bound=n)


def ne_test(t: NETester, T) -> str:
    return t.test(T)
