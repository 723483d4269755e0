"""Match-or-sparsify: NE-Samplers on hashed vertex groups, recovered greedily."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import HashFamily, derive_seed
from .matching import max_matching
from .neighborhood import NESampler
from .stream import BitMeter, LinearSketch

_ROW_CHUNK = 256


def mos_parameters(n: int, opt: int, alpha: float) -> tuple[int, int]:
    """Group count k = ceil(opt/alpha) and batch size s = ceil(opt^2/(alpha log2 n)^3)."""
    if opt < 1 or alpha <= 1 or n < 2:
        raise ValueError("need opt >= 1, alpha > 1 and n >= 2")
    k = math.ceil(opt / alpha)
    s = math.ceil(opt * opt / (alpha * math.log2(n)) ** 3)
    if k == 0 or s == 0:
        raise ValueError("rounded group count or step count is zero")
    return k, s


def in_regime(n: int, opt: int, alpha: float, delta: float) -> bool:
    return opt >= alpha * alpha * n ** delta


@dataclass
class MOSResult:
    matching: list[tuple[int, int]]
    steps: list[int] = field(default_factory=list)  # sampler index that produced each edge
    failed_steps: int = 0

    def batch(self, s: int) -> tuple[int, int]:
        """Edges contributed by the first and the second batch of s steps."""
        first = sum(1 for i in self.steps if i < s)
        return first, len(self.steps) - first


class MOSSketch(LinearSketch):
    """2s pairs (h_i, NE-Sampler on V_i = h_i^-1(0)).

    Samplers come into existence on the first update that touches their
    group; an untouched sampler is all-zero and reports FAIL.
    """

    def __init__(self, n: int, opt: int, alpha: float, *, seed: int = 0, iterations: int = NESampler.ITERATIONS):
        self.n, self.opt, self.alpha, self.seed = n, opt, alpha, seed
        self.k, self.s = mos_parameters(n, opt, alpha)
        self.steps = 2 * self.s
        self.iterations = iterations
        self.groups = HashFamily(2, n, self.k, seed, "mos-group")
        self.fp_seed = derive_seed(seed, "mos-fp")
        self._member: np.ndarray | None = None
        self.samplers: dict[int, NESampler] = {}

    @property
    def params(self) -> tuple:
        return ("MOS", self.n, self.opt, self.alpha, self.seed, self.iterations)

    @property
    def member(self) -> np.ndarray:
        if self._member is None:
            xs = np.arange(self.n)
            rows = [self.groups.table(np.arange(lo, min(lo + _ROW_CHUNK, self.steps)), xs) == 0
                    for lo in range(0, self.steps, _ROW_CHUNK)]
            self._member = np.concatenate(rows)
        return self._member

    def group(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.member[i])

    def sampler(self, i: int) -> NESampler:
        if i not in self.samplers:
            self.samplers[i] = NESampler(self.n, self.member[i], seed=derive_seed(self.seed, "mos-sampler", i),
                                         fingerprint_seed=self.fp_seed, iterations=self.iterations)
        return self.samplers[i]

    def feed_arrays(self, us, vs, ds) -> None:
        member = self.member
        cross = member[:, us] ^ member[:, vs]
        for i in np.flatnonzero(cross.any(axis=1)):
            sel = cross[i]
            self.sampler(int(i)).feed_arrays(us[sel], vs[sel], ds[sel])

    def _add_state(self, other: "MOSSketch") -> None:
        for i, s in other.samplers.items():
            self.sampler(i)._add_state(s)

    def state(self) -> dict[str, np.ndarray]:
        out = {}
        for i in sorted(self.samplers):
            for key, arr in self.samplers[i].state().items():
                out[f"{i}/{key}"] = arr
        return out

    def recover(self) -> MOSResult:
        matched: set[int] = set()
        res = MOSResult([])
        for i in range(self.steps):
            if i not in self.samplers:
                res.failed_steps += 1
                continue
            smp = self.samplers[i].sample()
            if not smp.ok:
                res.failed_steps += 1
                continue
            u, v = sorted(smp.edge)
            if u in matched or v in matched:
                continue
            matched.update((u, v))
            res.matching.append((u, v))
            res.steps.append(i)
        return res

    def measure(self) -> BitMeter:
        template = NESampler(self.n, [], seed=self.seed, fingerprint_seed=self.fp_seed, iterations=self.iterations)
        hashes = BitMeter(0, self.steps * self.groups.bits_per_hash)
        return template.measure().times(self.steps) + hashes


def mos_build(n: int, opt: int, alpha: float, seed: int = 0) -> MOSSketch:
    return MOSSketch(n, opt, alpha, seed=seed)


def mos_recover(s: MOSSketch) -> MOSResult:
    return s.recover()


@dataclass(frozen=True)
class Disjunction:
    match_case: bool
    sparsify_case: bool
    easy_size: int
    induced_edges: int
    induced_matching: int

    @property
    def holds(self) -> bool:
        return self.match_case or self.sparsify_case


def check_disjunction(M_easy, edges, n: int, opt: int, alpha: float, knob: float = 1.0) -> Disjunction:
    """Match-case or sparsify-case, decided exactly on the stored graph.

    Sparsify-case looks at the subgraph induced by vertices M_easy leaves
    unmatched: few edges yet a large matching.
    """
    covered = {w for e in M_easy for w in e}
    induced = [(u, v) for u, v in edges if u not in covered and v not in covered]
    mu = len(max_matching(induced))
    match_case = len(M_easy) >= knob * opt / (8 * alpha)
    sparse = len(induced) <= knob * 20 * opt * math.log2(n) ** 4 and mu >= 3 * opt / 4
    return Disjunction(match_case, sparse, len(M_easy), len(induced), mu)
