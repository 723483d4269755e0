"""Sparse-neighborhood recovery: recover N(S) - T when T is known only at query time.

The vector sketched is x(G, S): x_v = 0 on S, otherwise the number of edges
from v into S, reduced mod q where q is the least prime above c.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _jit
from .algebra import SEED_BITS, HashFamily, bit_width, derive_seed, smallest_prime_gt
from .recovery import FqSparseRecovery
from .stream import BitMeter, LinearSketch, orient, vertex_mask


class RecoveryFailed(RuntimeError):
    """The final sparse-recovery decode found no sparse enough residual."""


class WorkBoundExceeded(RuntimeError):
    pass


class NoCandidate(RuntimeError):
    pass


@dataclass(frozen=True)
class Level:
    j: int
    gamma: float
    a: float
    b: float

    @property
    def inner_sketches(self) -> int:
        return math.ceil(5 * self.a * math.log(8))

    @property
    def hash_range(self) -> int:
        return math.ceil(2 * self.a)

    @property
    def split_tests(self) -> int:
        return math.ceil(math.log2(1 / self.gamma))

    @property
    def padded_size(self) -> int:
        return math.ceil(self.a)


@dataclass(frozen=True)
class Schedule:
    levels: tuple[Level, ...]
    final_sparsity: int

    @property
    def depth(self) -> int:
        return len(self.levels)


def snr_schedule(n: int, a: float, b: float, max_levels: int | None = None) -> Schedule:
    """Levels j = 1..t with gamma halving, a quartering and b growing by the error budget."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    cap = math.ceil(math.log2(math.log2(n))) if n > 2 else 1
    if max_levels is not None:
        cap = min(cap, max_levels)
    gamma, aj, bj = 1 / 24, float(a), float(b)
    levels: list[Level] = []
    j = 1
    while j <= cap and aj >= 100 * bj:
        levels.append(Level(j, gamma, aj, bj))
        bj = bj + 12 * (gamma * bj + bj * bj / aj)
        gamma, aj = gamma / 2, aj / 4
        j += 1
    last = levels[-1] if levels else None
    final = math.ceil(last.a + last.b) if last else math.ceil(a + b)
    return Schedule(tuple(levels), final)


class _IndexRecoveryLevel:
    """t_p independent Index-Recovery sketches sharing (a_j, gamma_j)."""

    def __init__(self, level: Level, domain: int, q: int, seed: int):
        self.level, self.q = level, q
        self.h = HashFamily(2, domain, level.hash_range, seed, f"snr-index-{level.j}")
        self.split = HashFamily(2, domain, 2, seed, f"snr-split-{level.j}")
        tp, ts = level.inner_sketches, level.split_tests
        self.z = np.zeros(tp, dtype=np.int64)
        self.zs = np.zeros((tp, ts, 2), dtype=np.int64)

    def sketch(self, idx: np.ndarray, val: np.ndarray, z=None, zs=None):
        z = self.z if z is None else z
        zs = self.zs if zs is None else zs
        _jit.ir_update(z, zs, self.h._ubase, self.h.p, self.level.hash_range,
                       self.split._ubase, self.split.p, self.q, idx, val)
        return z, zs

    def recover(self, known: dict[int, int], padded_T: np.ndarray):
        z, zs = self.z.copy(), self.zs.copy()
        if known:
            idx = np.fromiter(known.keys(), dtype=np.int64, count=len(known))
            val = np.fromiter(known.values(), dtype=np.int64, count=len(known))
            rz, rzs = self.sketch(idx, val, np.zeros_like(z), np.zeros_like(zs))
            z = (z - rz) % self.q
            zs = (zs - rzs) % self.q
        return _jit.ir_recover(z, zs, self.h._ubase, self.h.p, self.level.hash_range,
                               self.split._ubase, self.split.p, padded_T, 0)

    def sketch_bits(self) -> int:
        return self.z.size * (1 + 2 * self.level.split_tests) * bit_width(self.q)

    def randomness_bits(self) -> int:
        return self.z.size * (self.h.bits_per_hash + self.level.split_tests * self.split.bits_per_hash)


@dataclass
class LevelTrace:
    j: int
    T_size: int
    recovered: dict[int, int]
    T_next: frozenset[int]


@dataclass
class SNRResult:
    neighbors: frozenset[int]
    vector: dict[int, int]
    trace: list[LevelTrace] = field(default_factory=list)


class SNRecoverySketch(LinearSketch):
    """Level recursion of partial recoveries followed by one exact sparse decode.

    With ``S`` given the sketch follows a graph stream; without it, feed the
    vector directly through ``update``.  Sketches built with the same seed and
    parameters share their randomness (one sharing group).
    """

    def __init__(self, n: int, a: int, b: int, c: int, *, S=None, seed: int = 0,
                 max_levels: int | None = None):
        if min(a, b, c) < 1:
            raise ValueError("a, b and c must be positive")
        self.n, self.a, self.b, self.c, self.seed = n, a, b, c, seed
        self.S = None if S is None else vertex_mask(n, S)
        self.q = smallest_prime_gt(c)
        self.schedule = snr_schedule(n, a, b, max_levels)
        self.domain = n + self.schedule.levels[0].padded_size if self.schedule.levels else n
        self.levels = [_IndexRecoveryLevel(lv, self.domain, self.q, seed) for lv in self.schedule.levels]
        self.final = FqSparseRecovery(self.schedule.final_sparsity, self.q, n)

    @property
    def params(self) -> tuple:
        s = None if self.S is None else self.S.tobytes()
        return ("SNR", self.n, self.a, self.b, self.c, self.seed, self.schedule.depth, s)

    def update(self, indices, values) -> None:
        idx = np.ascontiguousarray(indices, dtype=np.int64)
        val = np.ascontiguousarray(values, dtype=np.int64) % self.q
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise ValueError("index outside [0, n)")
        for lv in self.levels:
            lv.sketch(idx, val)
        self.final.update(idx, val)

    def feed_arrays(self, us, vs, ds) -> None:
        if self.S is None:
            raise TypeError("vector-mode sketch; use update()")
        _, outer, keep = orient(us, vs, self.S)
        if outer.size:
            self.update(outer, ds[keep])

    def _add_state(self, other: "SNRecoverySketch") -> None:
        for mine, theirs in zip(self.levels, other.levels):
            mine.z[:] = (mine.z + theirs.z) % self.q
            mine.zs[:] = (mine.zs + theirs.zs) % self.q
        self.final._add_state(other.final)

    def state(self) -> dict[str, np.ndarray]:
        out = {"final": self.final.syndromes}
        for lv in self.levels:
            out[f"z{lv.level.j}"] = lv.z
            out[f"zs{lv.level.j}"] = lv.zs
        return out

    def _pad(self, T: set[int], size: int) -> np.ndarray:
        real = sorted(T)
        dummies = range(self.n, self.n + max(0, size - len(real)))
        return np.array(real + list(dummies), dtype=np.int64)

    def recover(self, T) -> SNRResult:
        T0 = frozenset(int(v) for v in np.flatnonzero(vertex_mask(self.n, T)))
        Tj = set(T0)
        known: dict[int, int] = {}
        trace = []
        for lv in self.levels:
            ok, index, value = lv.recover(known, self._pad(Tj, lv.level.padded_size))
            size = len(Tj)
            y: dict[int, int] = {}
            for i, v in zip(index[ok].tolist(), value[ok].tolist()):
                if i >= self.n:
                    continue
                y[i] = v
                Tj.discard(i)
            for i, v in y.items():
                known[i] = (known.get(i, 0) + v) % self.q
            trace.append(LevelTrace(lv.level.j, size, y, frozenset(Tj)))
        residual = self.final.copy()
        if known:
            residual.subtract(list(known.keys()), list(known.values()))
        decoded = residual.decode()
        if decoded is None:
            raise RecoveryFailed("final residual is not sparse enough")
        x = dict(decoded)
        for i, v in known.items():
            x[i] = (x.get(i, 0) + v) % self.q
        x = {i: v for i, v in x.items() if v}
        return SNRResult(frozenset(i for i in x if i not in T0), x, trace)

    def measure(self) -> BitMeter:
        sketch = sum(lv.sketch_bits() for lv in self.levels) + self.final.measure().sketch_bits
        rand = sum(lv.randomness_bits() for lv in self.levels) + SEED_BITS
        return BitMeter(sketch, 0, {f"snr:{self.seed}:{self.n}:{self.a}:{self.b}:{self.c}": rand})


def snr_recover(s: SNRecoverySketch, T) -> frozenset[int]:
    return s.recover(T).neighbors


def index_recover(level: _IndexRecoveryLevel, n: int, T, inner: int = 0):
    """Run one inner Index-Recovery sketch of a level; returns (index, value) or None (FAIL)."""
    T = sorted(int(v) for v in T)
    padded = np.array(T + list(range(n, n + max(0, level.level.padded_size - len(T)))), dtype=np.int64)
    ok, index, value = _jit.ir_recover(level.z[inner:inner + 1], level.zs[inner:inner + 1],
                                       level.h._ubase, level.h.p, level.level.hash_range,
                                       level.split._ubase, level.split.p, padded, inner)
    if not ok[0] or index[0] >= n:
        return None
    return int(index[0]), int(value[0])


# --------------------------------------------------------------------------
# exhaustive-search oracle


def _rank_basis_left_null(A: np.ndarray, q: int) -> np.ndarray:
    """Rows N with N @ A = 0 (mod q) spanning the left null space of A."""
    rows, cols = A.shape
    M = np.concatenate([A % q, np.eye(rows, dtype=np.int64)], axis=1)
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if M[i, c] % q), None)
        if piv is None:
            continue
        M[[r, piv]] = M[[piv, r]]
        M[r] = M[r] * pow(int(M[r, c]), q - 2, q) % q
        for i in range(rows):
            if i != r and M[i, c]:
                M[i] = (M[i] - M[i, c] * M[r]) % q
        r += 1
        if r == rows:
            break
    return M[r:, cols:]


class ExhaustiveSNR(LinearSketch):
    """s_eq random F_q inner products; recovery enumerates every promise-consistent candidate.

    Rows are expanded from the seed rather than stored.  The part of a
    candidate inside T is solved by linear algebra over F_q, which accepts
    exactly the candidates brute force over F_q^T would accept.
    """

    def __init__(self, n: int, a: int, b: int, c: int, *, S=None, seed: int = 0,
                 work_bound: int = 5_000_000):
        self.n, self.a, self.b, self.c, self.seed = n, a, b, c, seed
        self.S = None if S is None else vertex_mask(n, S)
        self.q = smallest_prime_gt(c)
        lq = math.log2(self.q)
        total = a + a * lq + b * math.log2(n) + b * lq + 10 * math.log2(n)
        self.rows_count = math.ceil(2 * total / lq)
        self.work_bound = work_bound
        self.z = np.zeros(self.rows_count, dtype=np.int64)
        self._rows: np.ndarray | None = None

    @property
    def rows(self) -> np.ndarray:
        if self._rows is None:
            self._rows = _jit.expand_rows(np.uint64(derive_seed(self.seed, "exhaustive")),
                                          self.rows_count, self.n, self.q)
        return self._rows

    @property
    def params(self) -> tuple:
        s = None if self.S is None else self.S.tobytes()
        return ("ExhaustiveSNR", self.n, self.a, self.b, self.c, self.seed, s)

    def update(self, indices, values) -> None:
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.int64) % self.q
        self.z = (self.z + self.rows[:, idx] @ val) % self.q

    def feed_arrays(self, us, vs, ds) -> None:
        if self.S is None:
            raise TypeError("vector-mode sketch; use update()")
        _, outer, keep = orient(us, vs, self.S)
        if outer.size:
            self.update(outer, ds[keep])

    def _add_state(self, other: "ExhaustiveSNR") -> None:
        self.z = (self.z + other.z) % self.q

    def state(self) -> dict[str, np.ndarray]:
        return {"z": self.z}

    def measure(self) -> BitMeter:
        return BitMeter(self.rows_count * bit_width(self.q), SEED_BITS)

    def candidate_count(self, outside: int) -> int:
        return sum(math.comb(outside, s) * (self.q - 1) ** s for s in range(self.b + 1))

    def recover(self, T) -> frozenset[int]:
        T0 = np.flatnonzero(vertex_mask(self.n, T))
        outside = np.setdiff1d(np.arange(self.n), T0)
        if self.candidate_count(outside.size) > self.work_bound:
            raise WorkBoundExceeded(f"{self.candidate_count(outside.size)} candidates exceed the bound")
        q = self.q
        null = _rank_basis_left_null(self.rows[:, T0], q) if T0.size else np.eye(self.rows_count, dtype=np.int64)
        A_out = self.rows[:, outside]
        for size in range(self.b + 1):
            values = np.array(list(itertools.product(range(1, q), repeat=size)), dtype=np.int64).reshape((q - 1) ** size, size)
            for pos in itertools.combinations(range(outside.size), size):
                resid = (self.z[:, None] - A_out[:, list(pos)] @ values.T) % q
                hit = np.flatnonzero(~((null @ resid) % q).any(axis=0))
                if hit.size:
                    return frozenset(int(outside[p]) for p in pos)
        raise NoCandidate("no candidate vector matches the inner products")

    def brute_force(self, T) -> frozenset[int]:
        """Literal enumeration including the part inside T; tiny instances only."""
        T0 = sorted(np.flatnonzero(vertex_mask(self.n, T)).tolist())
        outside = [v for v in range(self.n) if v not in set(T0)]
        q = self.q
        work = q ** len(T0) * self.candidate_count(len(outside))
        if work > self.work_bound:
            raise WorkBoundExceeded(f"{work} candidates exceed the bound")
        inside = np.array(list(itertools.product(range(q), repeat=len(T0))), dtype=np.int64).reshape(q ** len(T0), len(T0))
        base = (self.z[:, None] - self.rows[:, T0] @ inside.T) % q
        for size in range(self.b + 1):
            for pos in itertools.combinations(outside, size):
                for vals in itertools.product(range(1, q), repeat=size):
                    contrib = self.rows[:, list(pos)] @ np.array(vals, dtype=np.int64) if size else 0
                    if (~((base - np.asarray(contrib)[..., None]) % q).any(axis=0)).any():
                        return frozenset(pos)
        raise NoCandidate("no candidate vector matches the inner products")


def exhaustive_snr_recover(s: ExhaustiveSNR, T) -> frozenset[int]:
    return s.recover(T)
