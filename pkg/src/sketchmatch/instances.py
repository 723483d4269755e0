"""Seeded instance families rendered as dynamic edge streams."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .stream import Stream, edge_indices, edge_pairs, num_pairs

FAMILIES = ("erdos_renyi", "planted_matching", "hard_sparse_induced")


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    n: int
    seed: int = 0
    deletion_fraction: float = 0.0
    p: float = 0.01               # erdos_renyi edge probability
    mu: int | None = None         # planted_matching size, default n // 4
    distractors: int = 0          # planted_matching: extra edges inside the matched vertices
    alpha: float = 4.0            # hard_sparse_induced: dense side has n / alpha vertices
    noise: float = 0.5            # hard_sparse_induced: extra planted-side edges per planted vertex
    dense_degree: int = 16        # hard_sparse_induced: edges started at each dense-side vertex

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0 <= self.deletion_fraction < 1:
            raise ValueError("deletion_fraction must lie in [0, 1)")
        if self.family == "erdos_renyi" and not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        if self.family == "planted_matching":
            mu = self.planted_mu
            if not 0 <= mu <= self.n // 2:
                raise ValueError(f"mu must lie in [0, n/2], got {mu}")
            if self.distractors > num_pairs(2 * mu) - mu:
                raise ValueError("too many distractors for the matched vertex set")
        if self.family == "hard_sparse_induced":
            if self.alpha <= 1:
                raise ValueError("alpha must exceed 1")
            if self.n % 2:
                raise ValueError("hard_sparse_induced needs even n")
            if self.noise < 0 or self.dense_degree < 0:
                raise ValueError("noise and dense_degree must be non-negative")

    @property
    def planted_mu(self) -> int | None:
        if self.family == "planted_matching":
            return self.n // 4 if self.mu is None else self.mu
        if self.family == "hard_sparse_induced":
            return self.n // 2
        return None

    def as_dict(self) -> dict:
        return asdict(self)


def _sample_pairs(rng: np.random.Generator, n: int, count: int, exclude: np.ndarray) -> np.ndarray:
    """``count`` distinct pair indices of K_n avoiding ``exclude`` (sorted unique)."""
    total = num_pairs(n)
    if count > total - exclude.size:
        raise ValueError("not enough vertex pairs left")
    picked = np.zeros(0, dtype=np.int64)
    while picked.size < count:
        need = count - picked.size
        draw = rng.integers(0, total, size=2 * need + 16)
        draw = draw[~np.isin(draw, exclude)]
        picked = np.unique(np.concatenate([picked, draw]))
    return rng.permutation(picked)[:count]


def _pairs_within(rng: np.random.Generator, verts: np.ndarray, count: int, exclude: set[tuple[int, int]]):
    out: set[tuple[int, int]] = set()
    if verts.size < 2:
        return []
    while len(out) < count:
        a, b = rng.choice(verts, 2, replace=False)
        e = (int(min(a, b)), int(max(a, b)))
        if e not in exclude:
            out.add(e)
    return sorted(out)


def _render(n: int, keep: np.ndarray, churn: np.ndarray, rng: np.random.Generator,
            comments: list[str]) -> Stream:
    """Insert every kept and churned edge, delete each churned edge after its insertion, interleaved."""
    keep = keep.reshape(-1, 2)
    churn = churn.reshape(-1, 2)
    t_keep = rng.random(len(keep))
    t_in, t_out = np.sort(rng.random((2, len(churn))), axis=0)
    edges = np.concatenate([keep, churn, churn])
    ds = np.concatenate([np.ones(len(keep) + len(churn), dtype=np.int64), -np.ones(len(churn), dtype=np.int64)])
    order = np.argsort(np.concatenate([t_keep, t_in, t_out]), kind="stable")
    e = edges[order]
    us, vs = np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1])
    return Stream(n, us.astype(np.int64), vs.astype(np.int64), ds[order], comments)


def _split_churn(edges: np.ndarray, fraction: float, rng: np.random.Generator):
    edges = edges.reshape(-1, 2)
    cut = int(round(fraction * len(edges)))
    perm = rng.permutation(len(edges))
    return edges[perm[cut:]], edges[perm[:cut]]


def erdos_renyi(n: int, p: float, *, deletion_fraction: float = 0.0, seed: int = 0) -> Stream:
    spec = InstanceSpec("erdos_renyi", n, seed, deletion_fraction, p=p)
    spec.validate()
    rng = np.random.default_rng(seed)
    m = rng.binomial(num_pairs(n), p)
    js = np.sort(_sample_pairs(rng, n, m, np.zeros(0, dtype=np.int64)))
    extra = int(round(deletion_fraction / (1 - deletion_fraction) * m))
    extra = min(extra, num_pairs(n) - m)
    cj = _sample_pairs(rng, n, extra, js)
    keep = np.stack(edge_pairs(js, n), axis=1)
    churn = np.stack(edge_pairs(cj, n), axis=1)
    return _render(n, keep, churn, rng, [f"family erdos_renyi n={n} p={p} seed={seed}"])


def planted_matching(n: int, mu: int | None = None, *, distractors: int = 0, deletion_fraction: float = 0.0,
                     seed: int = 0) -> Stream:
    """A matching of size mu on shuffled labels; distractors stay inside its vertex set so mu is exact."""
    spec = InstanceSpec("planted_matching", n, seed, deletion_fraction, mu=mu, distractors=distractors)
    spec.validate()
    mu = spec.planted_mu
    rng = np.random.default_rng(seed)
    label = rng.permutation(n)
    matched = label[:2 * mu]
    M = matched.reshape(-1, 2)
    M_set = {(int(min(a, b)), int(max(a, b))) for a, b in M}
    extra = np.array(_pairs_within(rng, matched, distractors, M_set), dtype=np.int64).reshape(-1, 2)
    stay, churn = _split_churn(extra, deletion_fraction, rng)
    comments = [f"family planted_matching n={n} distractors={distractors} seed={seed}", f"planted_mu {mu}"]
    return _render(n, np.concatenate([M, stay]), churn, rng, comments)


def hard_sparse_induced(n: int, alpha: float = 4.0, *, noise: float = 0.5, dense_degree: int = 16,
                        deletion_fraction: float = 0.0, seed: int = 0) -> Stream:
    """Sparse planted side with a perfect matching, plus a dense side of about n/alpha vertices.

    The dense side also carries a perfect matching, so the maximum matching is
    exactly n/2; its edges reach anywhere in the graph.
    """
    spec = InstanceSpec("hard_sparse_induced", n, seed, deletion_fraction, alpha=alpha, noise=noise,
                        dense_degree=dense_degree)
    spec.validate()
    rng = np.random.default_rng(seed)
    label = rng.permutation(n)
    d = 2 * int(n / (2 * alpha))
    dense, planted = label[:d], label[d:]
    M = np.concatenate([planted.reshape(-1, 2), dense.reshape(-1, 2)])
    taken = {(int(min(a, b)), int(max(a, b))) for a, b in M}
    sparse = _pairs_within(rng, planted, int(noise * planted.size), taken)
    taken.update(sparse)
    distract: set[tuple[int, int]] = set()
    for v in dense.tolist():
        for w in rng.choice(n, min(dense_degree, n - 1), replace=False).tolist():
            e = (min(v, w), max(v, w))
            if v != w and e not in taken:
                distract.add(e)
    D = np.array(sorted(distract), dtype=np.int64).reshape(-1, 2)
    stay, churn = _split_churn(D, deletion_fraction, rng)
    keep = np.concatenate([M, np.array(sparse, dtype=np.int64).reshape(-1, 2), stay])
    comments = [f"family hard_sparse_induced n={n} alpha={alpha} dense_side={d} seed={seed}", f"planted_mu {n // 2}",
                f"planted_side {' '.join(map(str, sorted(planted.tolist())))}"]
    return _render(n, keep, churn, rng, comments)


def generate(spec: InstanceSpec) -> Stream:
    spec.validate()
    if spec.family == "erdos_renyi":
        return erdos_renyi(spec.n, spec.p, deletion_fraction=spec.deletion_fraction, seed=spec.seed)
    if spec.family == "planted_matching":
        return planted_matching(spec.n, spec.planted_mu, distractors=spec.distractors,
                                deletion_fraction=spec.deletion_fraction, seed=spec.seed)
    return hard_sparse_induced(spec.n, spec.alpha, noise=spec.noise, dense_degree=spec.dense_degree,
                               deletion_fraction=spec.deletion_fraction, seed=spec.seed)


def planted_mu(stream: Stream) -> int | None:
    for c in stream.comments:
        if c.startswith("planted_mu "):
            return int(c.split()[1])
    return None


def planted_side(stream: Stream) -> list[int] | None:
    for c in stream.comments:
        if c.startswith("planted_side"):
            return [int(x) for x in c.split()[1:]]
    return None


def net_edge_list(stream: Stream) -> list[tuple[int, int]]:
    """Edges of the net graph (a well-formed stream leaves multiplicities in {0, 1})."""
    return sorted(stream.net_edges())


def edge_ids(stream: Stream) -> np.ndarray:
    return edge_indices(stream.us, stream.vs, stream.n)
