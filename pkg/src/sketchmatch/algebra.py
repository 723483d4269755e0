"""Prime fields, prime search and seeded k-wise independent hashing."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import _jit

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
SEED_BITS = 64

# Bases 2..37 make Miller-Rabin deterministic for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

# Hash primes sit this many bits above max(domain, range) so that reducing a
# uniform F_p value mod m is uniform up to a 2^-16 relative bias.
HASH_PRIME_HEADROOM = 16


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for b in _MR_BASES:
        if n % b == 0:
            return n == b
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for b in _MR_BASES:
        x = pow(b, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def smallest_prime_gt(c: int) -> int:
    if c < 1:
        raise ValueError(f"smallest_prime_gt needs c >= 1, got {c}")
    q = c + 1
    while not is_prime(q):
        q += 1
    return q


def bit_width(x: int) -> int:
    """Bits needed to store one value in [0, x): ceil(log2 x), at least 1."""
    return max(1, (int(x) - 1).bit_length())


class PrimeField:
    """Arithmetic in F_q for a prime q."""

    def __init__(self, q: int):
        if not is_prime(q):
            raise ValueError(f"{q} is not prime")
        self.q = q

    def __repr__(self) -> str:
        return f"PrimeField({self.q})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrimeField) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("F", self.q))

    def check(self, a: int) -> int:
        if not 0 <= a < self.q:
            raise ValueError(f"{a} is not an element of F_{self.q}")
        return a

    def add(self, a: int, b: int) -> int:
        return (self.check(a) + self.check(b)) % self.q

    def sub(self, a: int, b: int) -> int:
        return (self.check(a) - self.check(b)) % self.q

    def mul(self, a: int, b: int) -> int:
        return self.check(a) * self.check(b) % self.q

    def neg(self, a: int) -> int:
        return -self.check(a) % self.q

    def inv(self, a: int) -> int:
        if self.check(a) == 0:
            raise ZeroDivisionError("inverse of 0")
        return pow(a, self.q - 2, self.q)

    @property
    def element_bits(self) -> int:
        return bit_width(self.q)


def field_arith(q: int, op: str, a: int, b: int | None = None) -> int:
    f = PrimeField(q)
    if op == "inv":
        return f.inv(a)
    if op not in ("add", "sub", "mul"):
        raise ValueError(f"unknown op {op!r}")
    if b is None:
        raise ValueError(f"{op} needs two operands")
    return getattr(f, op)(a, b)


# --------------------------------------------------------------------------
# seed derivation


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _tag_int(tag: int | str) -> int:
    if isinstance(tag, int):
        return tag & MASK64
    return int.from_bytes(hashlib.blake2b(tag.encode(), digest_size=8).digest(), "little")


def derive_seed(seed: int, *tags: int | str) -> int:
    """Stable 64-bit child seed; distinct tag paths give unrelated streams."""
    h = mix64((seed & MASK64) ^ 0x5851F42D4C957F2D)
    for tag in tags:
        h = mix64(h ^ mix64(_tag_int(tag) + GAMMA))
    return h


def family_coeff(base: int, j: int, p: int) -> int:
    return mix64(base + (j + 1) * GAMMA) % p


def hash_prime(domain: int, range_: int) -> int:
    return smallest_prime_gt(max(domain, range_) << HASH_PRIME_HEADROOM)


# --------------------------------------------------------------------------
# k-wise hashing


@dataclass(frozen=True)
class KWiseHash:
    """x -> (c_0 + c_1 x + ... + c_{k-1} x^{k-1} mod p) mod m on [n]."""

    k: int
    n: int
    m: int
    p: int
    coeffs: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        if len(self.coeffs) != self.k:
            raise ValueError("need exactly k coefficients")
        if self.p < max(self.n, self.m) or not is_prime(self.p):
            raise ValueError(f"p={self.p} must be a prime >= max(n, m)")

    def __call__(self, x: int) -> int:
        if not 0 <= x < self.n:
            raise ValueError(f"{x} outside hash domain [0, {self.n})")
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % self.p
        return acc % self.m

    @property
    def bits(self) -> int:
        return self.k * bit_width(self.p) + SEED_BITS


def hash_new(k: int, n: int, m: int, seed: int, p: int | None = None) -> KWiseHash:
    if k < 2:
        raise ValueError("k-wise hashing needs k >= 2")
    if n < 1 or m < 1:
        raise ValueError("domain and range must be non-empty")
    p = hash_prime(n, m) if p is None else p
    base = derive_seed(seed, "kwise")
    return KWiseHash(k, n, m, p, tuple(family_coeff(base, t, p) for t in range(k)), seed)


def hash_eval(h: KWiseHash, x: int) -> int:
    return h(x)


class HashFamily:
    """Indexed family of independent k-wise hashes [domain] -> [range].

    Member ``i`` is fully determined by (seed, tag, i); coefficients are
    re-derived on demand, while the meter still charges them as stored.
    """

    def __init__(self, k: int, domain: int, range_: int, seed: int, tag: str):
        if k < 2 or domain < 1 or range_ < 1:
            raise ValueError("bad hash family parameters")
        self.k, self.domain, self.range = k, domain, range_
        self.p = hash_prime(domain, range_)
        self.base = derive_seed(seed, tag)
        self._ubase = np.uint64(self.base)

    def member(self, i: int) -> KWiseHash:
        coeffs = tuple(family_coeff(self.base, i * self.k + t, self.p) for t in range(self.k))
        return KWiseHash(self.k, self.domain, self.range, self.p, coeffs, self.base)

    def table(self, idx: Iterable[int] | np.ndarray, xs: Iterable[int] | np.ndarray,
              m: int | None = None) -> np.ndarray:
        """Values h_i(x) mod m for every i in idx (rows) and x in xs (columns)."""
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        xs = np.ascontiguousarray(xs, dtype=np.int64)
        if xs.size and (xs.min() < 0 or xs.max() >= self.domain):
            raise ValueError("hash argument outside domain")
        return _jit.hash_table(self._ubase, self.k, self.p, self.range if m is None else m, idx, xs)

    @property
    def bits_per_hash(self) -> int:
        return self.k * bit_width(self.p)
