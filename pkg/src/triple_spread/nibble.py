"""Approximate triangle covers of near-complete graphs from a sparse sample."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Optional

import numpy as np

from .core import DenseGraph, Edge, Triple, TripleSet, VertexSet, as_mask, members, triangles_of
from .sampling import Seed, as_seed, shuffled


class WeightRegularizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class RegularizedSample:
    triples: TripleSet
    per_edge_degree: dict
    target_degree: float
    tolerance: float
    rejected: bool


@dataclass(frozen=True)
class CoverResult:
    chosen: TripleSet
    leftover: DenseGraph
    leftover_max_degree: int
    success: bool = True
    restarts: int = 0
    history: tuple = field(default=(), compare=False)


def fractional_weights(
    g: DenseGraph,
    eps0: float = 0.1,
    slack: float = 0.05,
    max_iter: int = 200,
    target: Optional[float] = None,
    within: Optional[VertexSet] = None,
    candidates: Optional[TripleSet] = None,
    strict: bool = True,
) -> dict[Triple, float]:
    """Weights on triangles with every edge summing to about ``target``.

    ``target`` defaults to n/8 with n the number of vertices in ``within``.
    Weights start uniform and are rescaled per triangle by the geometric mean
    of target/current over its three edges, capped at 1. The minimum-degree
    check uses n-1 as the full degree so that K_n itself qualifies. With
    ``strict=False`` the last iterate is returned instead of raising.
    """
    mask = as_mask(within, g.n)
    verts = members(mask)
    n = len(verts)
    if target is None:
        target = n / 8
    min_deg = min((g.degree(v, mask) for v in verts), default=0)
    if n and min_deg < (1 - eps0) * (n - 1):
        raise ValueError(f"minimum degree {min_deg} below (1-{eps0})*(n-1) for n={n}")
    tris = list(candidates if candidates is not None else triangles_of(g, mask))
    if candidates is not None:
        tris = [t for t in tris if t.mask & mask == t.mask and all(g.has_edge(*e) for e in t.edges())]
    if not tris:
        return {}
    edge_ids: dict[Edge, int] = {}
    inc = np.empty((len(tris), 3), dtype=np.int64)
    for i, t in enumerate(tris):
        for j, e in enumerate(t.edges()):
            inc[i, j] = edge_ids.setdefault(e, len(edge_ids))
    per_edge = np.bincount(inc.ravel(), minlength=len(edge_ids))
    w = np.minimum(1.0, target / per_edge[inc].mean(axis=1))
    for _ in range(max_iter + 1):
        sums = np.bincount(inc.ravel(), weights=np.repeat(w, 3), minlength=len(edge_ids))
        if np.all(np.abs(sums - target) <= slack * target):
            return dict(zip(tris, w.tolist()))
        ratio = target / np.maximum(sums, 1e-300)
        w = np.minimum(1.0, w * np.cbrt(ratio[inc].prod(axis=1)))
    if not strict:
        return dict(zip(tris, w.tolist()))
    raise WeightRegularizationError("weight regularization failed")


def regular_subsample(
    g: DenseGraph,
    p: float,
    seed: Seed,
    weights: Optional[dict[Triple, float]] = None,
    tolerance: Optional[float] = None,
    min_expected_degree: float = 0.0,
    within: Optional[VertexSet] = None,
) -> RegularizedSample:
    """Keep triangle T with probability p * weight(T); reject on a bad edge degree."""
    mask = as_mask(within, g.n)
    if weights is None:
        weights = fractional_weights(g, within=mask)
    n = as_mask(mask).bit_count()
    if weights:
        sums: dict[Edge, float] = {}
        for t, w in weights.items():
            for e in t.edges():
                sums[e] = sums.get(e, 0.0) + w
        target = p * float(np.mean(list(sums.values())))
    else:
        target = p * n / 8
    if target < min_expected_degree:
        raise ValueError(f"expected edge degree {target:.3f} below minimum {min_expected_degree}")
    if tolerance is None:
        tolerance = 4 * sqrt(target) if target > 0 else 0.0
    ordered = sorted(weights)
    u = as_seed(seed).uniforms(len(ordered)) if ordered else np.empty(0)
    chosen = [t for t, x in zip(ordered, u) if x < p * weights[t]]
    ts = TripleSet(g.n, chosen)
    deg = {e: 0 for e in g.induced(mask).edges()}
    for t in chosen:
        for e in t.edges():
            deg[e] += 1
    rejected = any(abs(d - target) > tolerance for d in deg.values())
    return RegularizedSample(ts, deg, target, tolerance, rejected)


def _leftover(host: DenseGraph, chosen: list[Triple]) -> DenseGraph:
    return host.minus_triples(chosen)


def _score(g: DenseGraph) -> tuple[int, int]:
    return (g.max_degree(), g.edge_count)


def _greedy_once(triples: list[Triple], host: DenseGraph, seed: Seed, improve: bool) -> list[Triple]:
    covered: set[Edge] = set()
    chosen: list[Triple] = []
    for t in shuffled(triples, seed):
        es = t.edges()
        if all(host.has_edge(*e) and e not in covered for e in es):
            covered.update(es)
            chosen.append(t)
    if improve:
        chosen = _improve(triples, host, chosen, covered)
    return chosen


def _improve(triples: list[Triple], host: DenseGraph, chosen: list[Triple], covered: set[Edge]) -> list[Triple]:
    """Swap a chosen triangle for two blocked ones when that lowers the leftover score."""
    index: dict[Edge, list[Triple]] = {}
    for t in triples:
        if all(host.has_edge(*e) for e in t.edges()):
            for e in t.edges():
                index.setdefault(e, []).append(t)
    chosen_set = set(chosen)
    deg = [0] * host.n
    for u, v in host.edges():
        if (u, v) not in covered:
            deg[u] += 1
            deg[v] += 1
    changed = True
    while changed:
        changed = False
        for t in sorted(chosen_set):
            t_edges = set(t.edges())
            free = []
            for e in t.edges():
                for s in index.get(e, ()):
                    if s == t or s in chosen_set:
                        continue
                    others = [f for f in s.edges() if f != e]
                    if all(f not in covered or f in t_edges for f in others) and not (set(others) & t_edges):
                        free.append((e, s))
            swap = None
            for i in range(len(free)):
                for j in range(i + 1, len(free)):
                    (e1, s1), (e2, s2) = free[i], free[j]
                    if e1 != e2 and not set(s1.edges()) & set(s2.edges()):
                        swap = (s1, s2)
                        break
                if swap:
                    break
            if swap is None:
                continue
            new_deg = deg[:]
            for u, v in t.edges():
                new_deg[u] += 1
                new_deg[v] += 1
            for s in swap:
                for u, v in s.edges():
                    new_deg[u] -= 1
                    new_deg[v] -= 1
            if max(new_deg) > max(deg):
                continue
            chosen_set.discard(t)
            covered.difference_update(t_edges)
            for s in swap:
                chosen_set.add(s)
                covered.update(s.edges())
            deg = new_deg
            changed = True
    return sorted(chosen_set)


def greedy_cover(
    sample: RegularizedSample | TripleSet,
    host: DenseGraph,
    leftover_degree_target: int,
    seed: Seed,
    max_restarts: int = 10,
    improve: bool = True,
) -> CoverResult:
    """Random-greedy edge-disjoint triangle packing with local swaps.

    Restarts keep the best attempt so far, so the returned leftover never gets
    worse as restarts accumulate. ``success`` records whether the best attempt
    met ``leftover_degree_target``.
    """
    if isinstance(sample, RegularizedSample):
        if sample.rejected:
            raise ValueError("cannot cover from a rejected sample")
        triples = list(sample.triples)
    else:
        triples = list(sample)
    seed = as_seed(seed)
    best: Optional[tuple[tuple[int, int], list[Triple], DenseGraph]] = None
    history = []
    for attempt in range(max(1, max_restarts)):
        chosen = _greedy_once(triples, host, seed.child(attempt), improve)
        left = _leftover(host, chosen)
        score = _score(left)
        if best is None or score < best[0]:
            best = (score, chosen, left)
        history.append(best[0][0])
        if best[0][0] <= leftover_degree_target:
            break
    score, chosen, left = best
    return CoverResult(
        chosen=TripleSet(host.n, chosen),
        leftover=left,
        leftover_max_degree=score[0],
        success=score[0] <= leftover_degree_target,
        restarts=attempt,
        history=tuple(history),
    )
