"""Random triple models and reproducible seeding.

Every sampler draws one uniform per candidate triple, in ascending triple
order, from a Philox stream keyed on ``(master, path)``. Two calls with the
same seed and different probabilities therefore see the same uniforms, which
gives the monotone coupling used by the threshold sweeps for free.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Optional

import numpy as np

from .core import DenseGraph, Triple, TripleSet, VertexSet, as_mask, members, triangles_of

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Seed:
    master: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.master <= MASK64:
            raise ValueError("master seed must fit in 64 bits")

    def child(self, *index: int) -> "Seed":
        return Seed(self.master, self.path + tuple(int(i) for i in index))

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master, spawn_key=self.path)
        return np.random.Generator(np.random.Philox(ss))

    def uniforms(self, count: int) -> np.ndarray:
        return self.rng().random(count)


def as_seed(seed) -> Seed:
    if isinstance(seed, Seed):
        return seed
    return Seed(int(seed) & MASK64)


@dataclass(frozen=True)
class LinearSamplePair:
    h: TripleSet
    h_prime: TripleSet


def sample_from(candidates: TripleSet, p: float, seed: Seed) -> TripleSet:
    """Keep each candidate independently with probability ``p``."""
    _check_probability(p)
    ordered = list(candidates)
    if p <= 0.0 or not ordered:
        return TripleSet(candidates.n)
    u = as_seed(seed).uniforms(len(ordered))
    return TripleSet(candidates.n, (t for t, x in zip(ordered, u) if x < p))


def sample_g3(n: int, p: float, seed: Seed) -> TripleSet:
    _check_probability(p)
    total = comb(n, 3)
    if p <= 0.0 or total == 0:
        return TripleSet(n)
    u = as_seed(seed).uniforms(total)
    keep = np.flatnonzero(u < p)
    if len(keep) == total:
        return TripleSet(n, (Triple(*c) for c in combinations(range(n), 3)))
    wanted = set(keep.tolist())
    return TripleSet(
        n, (Triple(*c) for i, c in enumerate(combinations(range(n), 3)) if i in wanted)
    )


def linear_filter(h_prime: TripleSet) -> TripleSet:
    """Triples sharing no edge with any other member of ``h_prime``."""
    index = h_prime.edge_index
    return TripleSet(
        h_prime.n, (t for t in h_prime if all(len(index[e]) == 1 for e in t.edges()))
    )


def sample_linear(g: DenseGraph, x: Optional[VertexSet], p: float, seed: Seed) -> LinearSamplePair:
    x_mask = as_mask(x if x is not None else 0)
    candidates = TripleSet(g.n, (t for t in triangles_of(g) if t.mask & x_mask != t.mask))
    h_prime = sample_from(candidates, p, seed)
    return LinearSamplePair(h=linear_filter(h_prime), h_prime=h_prime)


def sample_latin_support(n: int, p: float, seed: Seed):
    from .latin import LatinSupport

    _check_probability(p)
    u = as_seed(seed).uniforms(n * n * n).reshape(n, n, n)
    return LatinSupport(n, u < p)


def sample_vertex_subset(universe: VertexSet, k: int, seed: Seed) -> int:
    pool = members(as_mask(universe))
    if k > len(pool):
        raise ValueError("subset size exceeds universe")
    if k < 0:
        raise ValueError("subset size must be nonnegative")
    picked = as_seed(seed).rng().choice(len(pool), size=k, replace=False)
    return as_mask(pool[i] for i in picked.tolist())


def shuffled(items: list, seed: Seed) -> list:
    order = as_seed(seed).rng().permutation(len(items))
    return [items[i] for i in order.tolist()]


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
