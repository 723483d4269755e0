"""Sparsify-case: hashed vertex groups wired by a circulant graph, each carrying a tester and an SNR sketch."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import SEED_BITS, HashFamily, derive_seed
from .matching import max_matching
from .neighborhood import NO, NETester
from .snr import RecoveryFailed, SNRecoverySketch
from .stream import BitMeter, LinearSketch

log = logging.getLogger(__name__)


class PromiseRegimeUnreachable(ValueError):
    """The tester and SNR parameter inequalities fail at this scale."""


@dataclass(frozen=True)
class RegularGraph:
    """Circulant d-regular graph on [k]: offsets ±1..±floor(d/2), plus k/2 when d is odd."""

    k: int
    d: int

    def __post_init__(self):
        if not 0 <= self.d < self.k:
            raise ValueError(f"need 0 <= d < k, got d={self.d}, k={self.k}")
        if self.d % 2 and self.k % 2:
            raise ValueError("odd degree needs an even number of nodes")

    @property
    def offsets(self) -> tuple[int, ...]:
        half = self.d // 2
        offs = [o for o in range(1, half + 1)] + [self.k - o for o in range(1, half + 1)]
        if self.d % 2:
            offs.append(self.k // 2)
        return tuple(sorted(offs))

    def neighbors(self, i: int) -> list[int]:
        return sorted((i + o) % self.k for o in self.offsets)

    def __call__(self, i: int, j: int) -> bool:
        return (j - i) % self.k in self.offsets


def regular_graph(k: int, d: int) -> RegularGraph:
    return RegularGraph(k, d)


@dataclass(frozen=True)
class SparsifyParams:
    n: int
    k: int
    d: int
    a: int
    b_tilde: int
    c: int
    hash_k: int

    def check_regime(self) -> None:
        if self.a < 16 * self.b_tilde or self.a < 100 * 2 * self.b_tilde:
            raise PromiseRegimeUnreachable(
                f"a={self.a} must be at least 16*b~ and 200*b~ (b~={self.b_tilde}) at n={self.n}")


def sparsify_parameters(n: int, opt: int, alpha: float, delta: float = 0.5) -> SparsifyParams:
    if opt < 1 or alpha <= 1 or not 0 < delta <= 0.5:
        raise ValueError("need opt >= 1, alpha > 1 and delta in (0, 1/2]")
    k = 10 * math.ceil(opt / alpha)   # always even, so an odd degree is admissible
    d = min(math.ceil(k / alpha), k - 1)
    return SparsifyParams(n, k, d, math.ceil(2 * opt / alpha ** 2), math.ceil(n ** (delta / 4)),
                          math.ceil(30 / delta), max(2, math.ceil(math.log2(n) ** 2)))


@dataclass
class SparsifyResult:
    matching: list[tuple[int, int]]
    recovered_edges: list[tuple[int, int]] = field(default_factory=list)
    removed_easy: int = 0
    removed_expanding: int = 0
    failed: int = 0
    survivors: int = 0


class SparsifySketch(LinearSketch):
    """Per group i: an NE-Tester and an SNR sketch over G(V_i), the edges from V_i into
    the groups adjacent to i.  All SNR copies share one seed, as do all tester
    fingerprints.  Group state exists only once an update touches the group.
    """

    def __init__(self, params: SparsifyParams, *, seed: int = 0, tester_scale: float = 1.0):
        self.p = params
        self.n, self.seed, self.tester_scale = params.n, seed, tester_scale
        self.F = RegularGraph(params.k, params.d)
        self.family = HashFamily(params.hash_k, params.n, params.k, seed, "sparsify-group")
        self.snr_seed = derive_seed(seed, "sparsify-snr")
        self.fp_seed = derive_seed(seed, "sparsify-fp")
        self._member: np.ndarray | None = None
        self._reach: np.ndarray | None = None
        self.testers: dict[int, NETester] = {}
        self.snrs: dict[int, SNRecoverySketch] = {}

    @classmethod
    def build(cls, n: int, opt: int, alpha: float, delta: float = 0.5, *, seed: int = 0,
              tester_scale: float = 1.0) -> "SparsifySketch":
        params = sparsify_parameters(n, opt, alpha, delta)
        params.check_regime()
        return cls(params, seed=seed, tester_scale=tester_scale)

    @property
    def params(self) -> tuple:
        return ("Sparsify", self.p, self.seed, self.tester_scale)

    @property
    def member(self) -> np.ndarray:
        """member[i, v]: v lies in V_i."""
        if self._member is None:
            self._member = self.family.table(np.arange(self.p.k), np.arange(self.n)) == 0
        return self._member

    @property
    def reach(self) -> np.ndarray:
        """reach[i, v]: v lies in some V_j with F(i, j)."""
        if self._reach is None:
            m = self.member
            self._reach = np.zeros_like(m)
            for o in self.F.offsets:
                self._reach |= np.roll(m, -o, axis=0)
        return self._reach

    def group(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.member[i])

    def _group_sketches(self, i: int) -> tuple[NETester, SNRecoverySketch]:
        if i not in self.testers:
            S = self.member[i]
            self.testers[i] = NETester(self.n, S, self.p.a, self.p.b_tilde, scale=self.tester_scale,
                                       seed=derive_seed(self.seed, "sparsify-tester", i),
                                       fingerprint_seed=self.fp_seed)
            self.snrs[i] = SNRecoverySketch(self.n, self.p.a, 2 * self.p.b_tilde, self.p.c, S=S,
                                            seed=self.snr_seed)
        return self.testers[i], self.snrs[i]

    def routes(self, u: int, v: int) -> list[int]:
        """Groups whose G(V_i) contains the pair (u, v)."""
        m, r = self.member, self.reach
        hit = (m[:, u] & r[:, v] & ~m[:, v]) | (m[:, v] & r[:, u] & ~m[:, u])
        return np.flatnonzero(hit).tolist()

    def feed_arrays(self, us, vs, ds) -> None:
        m, r = self.member, self.reach
        hit = (m[:, us] & r[:, vs]) | (m[:, vs] & r[:, us])
        for i in np.flatnonzero(hit.any(axis=1)):
            sel = hit[i]
            tester, snr = self._group_sketches(int(i))
            tester.feed_arrays(us[sel], vs[sel], ds[sel])
            snr.feed_arrays(us[sel], vs[sel], ds[sel])

    def _add_state(self, other: "SparsifySketch") -> None:
        for i in other.testers:
            tester, snr = self._group_sketches(i)
            tester._add_state(other.testers[i])
            snr._add_state(other.snrs[i])

    def state(self) -> dict[str, np.ndarray]:
        out = {}
        for i in sorted(self.testers):
            for name, sk in (("tester", self.testers[i]), ("snr", self.snrs[i])):
                for key, arr in sk.state().items():
                    if arr.any():
                        out[f"{i}/{name}/{key}"] = arr
        return out

    def recover(self, M_easy) -> SparsifyResult:
        covered = np.zeros(self.n, dtype=np.bool_)
        for e in M_easy:
            covered[list(e)] = True
        res = SparsifyResult([])
        neighborhoods: dict[int, frozenset[int]] = {}
        for i in sorted(self.testers):
            if (self.member[i] & covered).any():
                res.removed_easy += 1
                continue
            T = self.reach[i] & covered
            if self.testers[i].test(T) == NO:
                res.removed_expanding += 1
                continue
            try:
                neighborhoods[i] = self.snrs[i].recover(T).neighbors
            except RecoveryFailed:
                log.info("group %d: sparse recovery failed, dropping it", i)
                res.failed += 1
        res.survivors = len(neighborhoods)
        edges = set()
        for i in sorted(neighborhoods):
            for j in self.F.neighbors(i):
                if j <= i or j not in neighborhoods:
                    continue
                into_j = [v for v in neighborhoods[i] if self.member[j, v]]
                into_i = [u for u in neighborhoods[j] if self.member[i, u]]
                if len(into_j) == 1 and len(into_i) == 1 and into_i[0] != into_j[0]:
                    u, v = into_i[0], into_j[0]
                    edges.add((min(u, v), max(u, v)))
        res.recovered_edges = sorted(edges)
        res.matching = max_matching(res.recovered_edges)
        return res

    def measure(self) -> BitMeter:
        p = self.p
        snr = SNRecoverySketch(self.n, p.a, 2 * p.b_tilde, p.c, seed=self.snr_seed).measure()
        tester = NETester.meter(self.n, p.a, p.b_tilde, scale=self.tester_scale,
                                seed=self.seed, fingerprint_seed=self.fp_seed)
        groups = BitMeter(0, p.k * self.family.bits_per_hash + SEED_BITS)
        return (snr + tester).times(p.k) + groups


def sparsify_build(n: int, opt: int, alpha: float, delta: float = 0.5, seed: int = 0, **kw) -> SparsifySketch:
    return SparsifySketch.build(n, opt, alpha, delta, seed=seed, **kw)


def sparsify_recover(s: SparsifySketch, M_easy) -> list[tuple[int, int]]:
    return s.recover(M_easy).matching


class AmplifiedSparsify(LinearSketch):
    """Independent copies of one sparsify sketch; recovery keeps the largest matching.

    Copy 0 uses the base seed, so it coincides with the single sketch.
    """

    def __init__(self, params: SparsifyParams, copies: int, *, seed: int = 0, tester_scale: float = 1.0):
        if copies < 1:
            raise ValueError("need at least one copy")
        self.n, self.seed = params.n, seed
        self.copies = [SparsifySketch(params, seed=seed if c == 0 else derive_seed(seed, "copy", c),
                                      tester_scale=tester_scale) for c in range(copies)]

    @staticmethod
    def default_copies(delta: float) -> int:
        return math.ceil(60 / delta)

    @property
    def params(self) -> tuple:
        return ("AmplifiedSparsify", len(self.copies)) + self.copies[0].params

    def feed_arrays(self, us, vs, ds) -> None:
        for c in self.copies:
            c.feed_arrays(us, vs, ds)

    def _add_state(self, other: "AmplifiedSparsify") -> None:
        for mine, theirs in zip(self.copies, other.copies):
            mine._add_state(theirs)

    def state(self) -> dict[str, np.ndarray]:
        return {f"{c}/{k}": v for c, s in enumerate(self.copies) for k, v in s.state().items()}

    def recover(self, M_easy) -> SparsifyResult:
        results = [c.recover(M_easy) for c in self.copies]
        return max(results, key=lambda r: len(r.matching))

    def measure(self) -> BitMeter:
        total = BitMeter()
        for c in self.copies:
            total = total + c.measure()
        return total
