"""Guess-and-combine driver over powers of two, with fallbacks and the report format."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .algebra import derive_seed
from .matching import max_matching, validate_matching
from .mos import MOSSketch
from .sparsify import AmplifiedSparsify, PromiseRegimeUnreachable, sparsify_parameters
from .stream import BitMeter, LinearSketch, Stream, edge_indices, edge_pairs, num_pairs, sum_meters

SCHEMA = 1
FALLBACKS = ("parity_store", "best_effort_mos", "error")
ETA0 = 1 / 8


class ConfigError(ValueError):
    pass


class ParityStore(LinearSketch):
    """One bit per vertex pair: the net multiplicity mod 2."""

    def __init__(self, n: int):
        self.n = n
        self.bits = np.zeros(num_pairs(n), dtype=np.bool_)

    @property
    def params(self) -> tuple:
        return ("ParityStore", self.n)

    def feed_arrays(self, us, vs, ds) -> None:
        idx, counts = np.unique(edge_indices(us, vs, self.n), return_counts=True)
        odd = idx[counts % 2 == 1]
        self.bits[odd] ^= True

    def _add_state(self, other: "ParityStore") -> None:
        self.bits ^= other.bits

    def state(self) -> dict[str, np.ndarray]:
        return {"bits": np.packbits(self.bits)}

    def edges(self) -> list[tuple[int, int]]:
        u, v = edge_pairs(np.flatnonzero(self.bits), self.n)
        return list(zip(u.tolist(), v.tolist()))

    def recover(self) -> list[tuple[int, int]]:
        return max_matching(self.edges())

    def measure(self) -> BitMeter:
        return BitMeter(num_pairs(self.n), 0)


@dataclass(frozen=True)
class PipelineConfig:
    n: int
    alpha: float
    delta: float = 0.5
    seed: int = 0
    small_alpha_threshold: float = 100.0
    fallback: str = "parity_store"
    budget_bits: int | None = None
    regime_opt_factor: float = 1.0   # a guess o is in regime when o >= factor * alpha^2 * n^delta
    match_knob: float = 1.0          # multiplies the match-case threshold o / (8 beta)
    tester_scale: float = 1.0
    sparsify_copies: int | None = None   # None: ceil(60 / delta)
    per_guess: bool = True

    def validate(self) -> None:
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if not self.alpha > 1:
            raise ConfigError("alpha must exceed 1")
        if not 0 < self.delta <= 0.5:
            raise ConfigError("delta must lie in (0, 1/2]")
        if self.fallback not in FALLBACKS:
            raise ConfigError(f"fallback must be one of {', '.join(FALLBACKS)}")
        if self.budget_bits is not None and self.budget_bits < 0:
            raise ConfigError("budget_bits must be non-negative")
        if self.sparsify_copies is not None and self.sparsify_copies < 1:
            raise ConfigError("sparsify_copies must be positive")

    @property
    def beta(self) -> float:
        return self.alpha / (2 * ETA0)

    @property
    def copies(self) -> int:
        return self.sparsify_copies or AmplifiedSparsify.default_copies(self.delta)

    def as_dict(self) -> dict:
        return asdict(self)


def opt_guesses(n: int) -> list[int]:
    return [1 << i for i in range(math.ceil(math.log2(n)) + 1)]


@dataclass
class Guess:
    opt: int
    in_regime: bool
    mos: MOSSketch | None = None
    sparsify: AmplifiedSparsify | None = None
    sparsify_status: str = "skipped"
    fallback: str | None = None

    def flags(self) -> dict:
        return {"in_regime": self.in_regime, "mos": self.mos is not None,
                "sparsify": self.sparsify_status, "fallback": self.fallback}

    def meter(self) -> BitMeter:
        return sum_meters(s.measure() for s in (self.mos, self.sparsify) if s is not None)


@dataclass
class MatchingReport:
    matching: list[tuple[int, int]]
    bits: dict
    winning_opt: int | str | None
    regime_flags: dict
    validation: dict = field(default_factory=dict)
    candidates: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"schema": SCHEMA, "matching": [list(e) for e in self.matching], "bits": self.bits,
                "winning_opt": self.winning_opt, "regime_flags": self.regime_flags,
                "validation": self.validation, "candidates": self.candidates}


class Pipeline(LinearSketch):
    """Everything kept for one stream: per-guess sketches plus any fallback store."""

    def __init__(self, cfg: PipelineConfig):
        cfg.validate()
        self.cfg = cfg
        self.n = cfg.n
        self.guesses: list[Guess] = []
        self.parity: ParityStore | None = None
        if cfg.alpha <= cfg.small_alpha_threshold:
            self.parity = ParityStore(cfg.n)
            return
        parity_fits = cfg.budget_bits is None or num_pairs(cfg.n) <= cfg.budget_bits
        for o in opt_guesses(cfg.n):
            self.guesses.append(self._guess(o, parity_fits))

    def _guess(self, o: int, parity_fits: bool) -> Guess:
        cfg = self.cfg
        seed = derive_seed(cfg.seed, "guess", o)
        g = Guess(o, o >= cfg.regime_opt_factor * cfg.alpha ** 2 * cfg.n ** cfg.delta)
        if g.in_regime:
            g.mos = MOSSketch(cfg.n, o, cfg.beta, seed=seed)
            params = sparsify_parameters(cfg.n, o, cfg.beta, cfg.delta)
            try:
                params.check_regime()
            except PromiseRegimeUnreachable:
                g.sparsify_status = "unreachable"
            else:
                g.sparsify = AmplifiedSparsify(params, cfg.copies, seed=seed, tester_scale=cfg.tester_scale)
                g.sparsify_status = "built"
                return g
        policy = cfg.fallback
        if policy == "error":
            raise ConfigError(f"guess opt={o} is outside the sketch regime and fallback is 'error'")
        if policy == "parity_store" and not parity_fits:
            policy = "best_effort_mos"
        g.fallback = policy
        if policy == "parity_store" and self.parity is None:
            self.parity = ParityStore(cfg.n)
        if policy == "best_effort_mos" and g.mos is None:
            g.mos = MOSSketch(cfg.n, o, cfg.beta, seed=seed)
        return g

    @property
    def params(self) -> tuple:
        return ("Pipeline",) + tuple(sorted(self.cfg.as_dict().items()))

    def _sketches(self):
        for g in self.guesses:
            for s in (g.mos, g.sparsify):
                if s is not None:
                    yield s
        if self.parity is not None:
            yield self.parity

    def feed_arrays(self, us, vs, ds) -> None:
        for s in self._sketches():
            s.feed_arrays(us, vs, ds)

    def feed_stream(self, stream: Stream) -> "Pipeline":
        if stream.n != self.n:
            raise ValueError(f"stream has n={stream.n}, pipeline expects n={self.n}")
        for chunk in stream.chunks():
            self.feed_arrays(*chunk)
        return self

    def _add_state(self, other: "Pipeline") -> None:
        for mine, theirs in zip(self._sketches(), other._sketches()):
            mine._add_state(theirs)

    def state(self) -> dict[str, np.ndarray]:
        out = {}
        for g in self.guesses:
            for name, s in (("mos", g.mos), ("sparsify", g.sparsify)):
                if s is not None:
                    out.update({f"{g.opt}/{name}/{k}": v for k, v in s.state().items()})
        if self.parity is not None:
            out["parity"] = self.parity.state()["bits"]
        return out

    def measure(self) -> BitMeter:
        return sum_meters(s.measure() for s in self._sketches())

    def bits_report(self) -> dict:
        total = self.measure()
        out = {"total": total.total, "sketch": total.sketch_bits, "randomness": total.total_randomness,
               "fallback": self.parity.measure().total if self.parity is not None else 0}
        if self.cfg.per_guess:
            out["per_guess"] = {str(g.opt): g.meter().total for g in self.guesses}
        if self.cfg.budget_bits is not None:
            out["budget"] = self.cfg.budget_bits
            out["within_budget"] = total.total <= self.cfg.budget_bits
        return out

    def regime_flags(self) -> dict:
        cfg = self.cfg
        return {
            "small_alpha_branch": cfg.alpha <= cfg.small_alpha_threshold,
            "small_alpha_threshold": cfg.small_alpha_threshold,
            # the analysed constant is 100; below it the sketch path runs outside its stated assumptions
            "below_analysed_alpha": cfg.alpha <= 100,
            "alpha_within_range": cfg.alpha <= cfg.n ** (0.5 - cfg.delta),
            "beta": cfg.beta,
            "guesses": {str(g.opt): g.flags() for g in self.guesses},
        }

    def recover(self) -> MatchingReport:
        candidates: list[tuple[int | str, list[tuple[int, int]]]] = []
        detail: dict[str, dict] = {}
        for g in self.guesses:
            if g.mos is None:
                continue
            easy = g.mos.recover().matching
            best = easy
            info = {"easy": len(easy)}
            if len(easy) < self.cfg.match_knob * g.opt / (8 * self.cfg.beta) and g.sparsify is not None:
                hard = g.sparsify.recover(easy).matching
                info["hard"] = len(hard)
                if len(hard) > len(best):
                    best = hard
            candidates.append((g.opt, best))
            detail[str(g.opt)] = info
        if self.parity is not None:
            exact = self.parity.recover()
            candidates.append(("parity", exact))
            detail["parity"] = {"exact": len(exact)}
        winner, matching = max(candidates, key=lambda c: len(c[1]), default=(None, []))
        verdict = validate_matching(matching, matching)
        return MatchingReport(sorted(matching), self.bits_report(), winner, self.regime_flags(),
                              {"disjoint": verdict.disjoint}, detail)


def pipeline_build(cfg: PipelineConfig) -> Pipeline:
    return Pipeline(cfg)


def pipeline_recover(p: Pipeline) -> MatchingReport:
    return p.recover()


def run_pipeline(stream: Stream, cfg: PipelineConfig) -> MatchingReport:
    return Pipeline(cfg).feed_stream(stream).recover()
