"""Iterative absorption along a vortex V_0 ⊇ V_1 ⊇ ... ⊇ V_l = X.

One level (``run_level``) covers every edge of the current graph that is not
inside V_1:

1. set aside a random crossing reserve R between V \\ V_1 and V_1;
2. nibble-cover G_1 = G - R - G[V_1] from a weighted triangle sample;
3. cover the leftover edges with both ends outside V_1, each by a triangle
   through V_1 using two reserve edges (``cover_internal``);
4. cover the remaining crossing edges vertex by vertex with perfect
   matchings in link graphs inside V_1 (``cover_crossing``).

Only step 4 spends edges of G[V_1]; what it leaves is the level's leftover.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import ceil, floor
from typing import Callable, Optional, Sequence

from .core import DenseGraph, Edge, Triple, TripleSet, VertexSet, as_mask, edge_key, members, triangles_of
from .nibble import (
    WeightRegularizationError,
    fractional_weights,
    greedy_cover,
    regular_subsample,
)
from .params import PipelineParams
from .sampling import Seed, as_seed

log = logging.getLogger(__name__)


class StageError(RuntimeError):
    stage = "stage"

    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail


class ReserveSelectionError(StageError):
    stage = "reserve"

    @property
    def report(self) -> dict:
        return self.detail.get("report", {})


class InternalCoverError(StageError):
    stage = "internal_cover"


class LinkMatchingError(StageError):
    stage = "crossing_cover"


class NibbleError(StageError):
    stage = "nibble"


class ParityError(StageError, ValueError):
    stage = "parity"


@dataclass(frozen=True)
class Vortex:
    levels: tuple[int, ...]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(m.bit_count() for m in self.levels)

    def __len__(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    ok: bool
    worst: float
    bound: str


@dataclass(frozen=True)
class ReserveGraph:
    edges: DenseGraph
    q: float
    property_report: dict
    resamples: int = 0

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.property_report.values())


@dataclass(frozen=True)
class LevelResult:
    covered: TripleSet
    leftover_inside: DenseGraph
    stats: dict = field(default_factory=dict)


@dataclass(frozen=True)
class IAResult:
    covered: TripleSet
    leftover: DenseGraph
    vortex: Vortex
    levels: list


Allowed = Optional[Callable[[Triple], bool]]


def _allowed(candidates: Optional[TripleSet]) -> Allowed:
    if candidates is None:
        return None
    return candidates.__contains__


def build_vortex(
    n: int,
    x: VertexSet,
    ratio: float,
    seed: Seed,
    universe: Optional[VertexSet] = None,
    parts: Optional[Sequence[int]] = None,
) -> Vortex:
    """Nested random levels from the universe down to exactly ``x``.

    Sizes follow |V_{i+1}| = max(ceil(ratio * |V_i|), |x|), taking one vertex
    less when the ceiling would not shrink the level. With ``parts``
    every level holds the same number of vertices in each part, rounding
    down identically per part.
    """
    seed = as_seed(seed)
    top = as_mask(universe, n)
    x_mask = as_mask(x)
    if x_mask & ~top:
        raise ValueError("x must lie inside the universe")
    if x_mask == top:
        return Vortex((top,))
    if parts is None and x_mask.bit_count() > ratio * top.bit_count() + 1e-9:
        raise ValueError("|x| must be at most ratio * n")
    levels = [top]
    rng = seed.rng()
    while levels[-1] != x_mask:
        cur = levels[-1]
        if parts is None:
            size = max(min(ceil(ratio * cur.bit_count() - 1e-9), cur.bit_count() - 1), x_mask.bit_count())
            pools = [(members(cur & ~x_mask), size - x_mask.bit_count())]
        else:
            pools = []
            for j in range(3):
                part_mask = sum(1 << v for v in members(cur) if parts[v] == j)
                x_part = (x_mask & part_mask).bit_count()
                per = max(floor(ratio * part_mask.bit_count() + 1e-9), x_part)
                if per >= part_mask.bit_count() and part_mask != x_mask & part_mask:
                    per = max(x_part, part_mask.bit_count() - 1)
                pools.append((members(part_mask & ~x_mask), per - x_part))
        nxt = x_mask
        for pool, k in pools:
            if k > 0:
                picked = rng.choice(len(pool), size=k, replace=False)
                nxt |= as_mask(pool[i] for i in sorted(picked.tolist()))
        if nxt == cur:
            raise ValueError("vortex ratio too large to shrink the level")
        levels.append(nxt)
    return Vortex(tuple(levels))


def reserve_report(
    g: DenseGraph, r: DenseGraph, v1: int, q: float, tolerance: float, universe: int
) -> dict[str, PropertyCheck]:
    """Check the five reserve regularity conditions at multiplicative tolerance.

    A1-A3 compare against q times the available G-count. For the degree
    conditions A1-A2 a vertex with available crossing edges must also receive
    at least one reserve edge, so q = 0 fails them.
    """
    outside = members(universe & ~v1)
    inner = members(v1)
    n = universe.bit_count()
    lo, hi = 1 - tolerance, 1 + tolerance

    def band(actual: int, available: int, positive: bool) -> float:
        if available == 0:
            return 0.0 if actual == 0 else float("inf")
        if positive and actual == 0:
            return float("inf")
        mean = q * available
        return abs(actual - mean) / mean if mean else float("inf")

    def worst_band(pairs, positive: bool) -> float:
        return max((band(a, b, positive) for a, b in pairs), default=0.0)

    a1 = worst_band(((r.degree(v, v1), g.degree(v, v1)) for v in outside), True)
    a2 = worst_band(((r.degree(v, universe & ~v1), g.degree(v, universe & ~v1)) for v in inner), True)
    a3 = worst_band(
        (((r.adj[v] & g.adj[w]).bit_count(), (g.adj[v] & v1 & g.adj[w]).bit_count())
         for v in outside
         for w in inner),
        False,
    )
    a4_min = min(
        ((r.adj[u] & r.adj[v]).bit_count() for i, u in enumerate(outside) for v in outside[i + 1:]),
        default=float("inf"),
    )
    a5_max = max(
        ((r.adj[u] & r.adj[v]).bit_count() for i, u in enumerate(inner) for v in inner[i + 1:]),
        default=0,
    )
    a4_bound = lo * q * q * len(inner) / 2
    a5_bound = hi * 2 * q * q * n
    return {
        "A1": PropertyCheck("A1", a1 <= tolerance, a1, f"|deg - q*avail| <= {tolerance} * q*avail (outside)"),
        "A2": PropertyCheck("A2", a2 <= tolerance, a2, f"|deg - q*avail| <= {tolerance} * q*avail (inside)"),
        "A3": PropertyCheck("A3", a3 <= tolerance, a3, f"reserve/graph codegree within {tolerance}"),
        "A4": PropertyCheck("A4", a4_min >= a4_bound, a4_min, f">= {a4_bound:.3f}"),
        "A5": PropertyCheck("A5", a5_max <= a5_bound, a5_max, f"<= {a5_bound:.3f}"),
    }


def select_reserve(
    g: DenseGraph,
    v1: VertexSet,
    q: float,
    tolerance: float,
    seed: Seed,
    max_resamples: int,
    universe: Optional[VertexSet] = None,
) -> ReserveGraph:
    seed = as_seed(seed)
    v1 = as_mask(v1)
    universe = as_mask(universe, g.n) if universe is not None else (g.vertex_mask() | v1)
    if v1 == 0 or v1 & universe == universe:
        raise ValueError("v1 must be a proper nonempty subset of the vertex set")
    crossing = [(u, v) for u, v in g.edges() if (universe >> u & 1) and (universe >> v & 1)
                and ((v1 >> u & 1) != (v1 >> v & 1))]
    report: dict = {}
    for attempt in range(max_resamples + 1):
        u = seed.child(attempt).uniforms(len(crossing)) if crossing else []
        r = DenseGraph.from_edges(g.n, (e for e, x in zip(crossing, u) if x < q))
        report = reserve_report(g, r, v1, q, tolerance, universe)
        if all(c.ok for c in report.values()):
            return ReserveGraph(r, q, report, resamples=attempt)
    failed = sorted(k for k, c in report.items() if not c.ok)
    raise ReserveSelectionError(
        f"reserve selection failed after {max_resamples} resamples ({', '.join(failed)} violated)",
        report=report,
    )


def _pick(options: list, seed: Seed):
    return options[int(seed.rng().integers(len(options)))]


def cover_internal(
    l1: DenseGraph,
    g2: DenseGraph,
    p: float,
    seed: Seed,
    candidates: Optional[TripleSet] = None,
) -> TripleSet:
    """Cover every edge of ``l1`` by a triangle using two reserve edges of ``g2 - l1``.

    Each edge's candidate triangles survive independently with probability
    ``p`` (one exposure per edge, drawn from that edge's own seed). Edges are
    then processed most-constrained first: the edge with the fewest
    still-available candidates goes next, ties broken by a seeded random
    key, and one available triangle is taken uniformly at random.
    """
    seed = as_seed(seed)
    if not l1.is_subgraph_of(g2):
        raise ValueError("l1 must be a subgraph of g2")
    allowed = _allowed(candidates)
    reserve0 = g2.minus(l1)
    reserve = list(reserve0.adj)
    order = list(l1.edges())
    if not order:
        return TripleSet(g2.n)
    tiebreak = seed.child(0).uniforms(len(order)).tolist()
    options: dict[Edge, list[int]] = {}
    for u, v in order:
        ws = members(reserve0.adj[u] & reserve0.adj[v])
        exposed = seed.child(1, u, v).uniforms(len(ws)) if ws else []
        options[(u, v)] = [w for w, x in zip(ws, exposed)
                           if x < p and (allowed is None or allowed(Triple.of(u, v, w)))]
    pending = dict(zip(order, tiebreak))
    chosen: list[Triple] = []
    while pending:
        def avail(e: Edge) -> list[int]:
            u, v = e
            return [w for w in options[e] if reserve[u] >> w & 1 and reserve[v] >> w & 1]

        e = min(pending, key=lambda e: (len(avail(e)), pending[e]))
        ws = avail(e)
        if not ws:
            raise InternalCoverError(f"internal cover-down starved at edge {e}", edge=e)
        u, v = e
        w = _pick(ws, seed.child(2, u, v))
        for a in (u, v):
            reserve[a] &= ~(1 << w)
            reserve[w] &= ~(1 << a)
        chosen.append(Triple.of(u, v, w))
        del pending[e]
    return TripleSet(g2.n, chosen)


def _perfect_bipartite_matching(left: list[int], right: list[int], adj: dict[int, list[int]]) -> Optional[list[tuple[int, int]]]:
    """Augmenting-path matching; ``None`` unless every vertex is matched."""
    if len(left) != len(right):
        return None
    match_r: dict[int, int] = {}

    def augment(u: int, seen: set[int]) -> bool:
        for w in adj.get(u, ()):
            if w in seen:
                continue
            seen.add(w)
            if w not in match_r or augment(match_r[w], seen):
                match_r[w] = u
                return True
        return False

    for u in left:
        if not augment(u, set()):
            return None
    return [(u, w) for w, u in match_r.items()]


def cover_crossing(
    r3: DenseGraph,
    inner: DenseGraph,
    p: float,
    seed: Seed,
    max_retries: int = 20,
    v1: Optional[VertexSet] = None,
    parts: Optional[Sequence[int]] = None,
    candidates: Optional[TripleSet] = None,
) -> TripleSet:
    """Cover all of ``r3`` with triangles {v, a, b}, ab an unused inner edge.

    The link graph of an outside vertex v is the set of inner edges inside
    N(v), each kept with probability ``p``. Vertices are handled one at a
    time, always the one whose link has the fewest free edges to spare over
    the |link|/2 it needs. A perfect matching of its link is found on a
    random equipartition, retried on failure; with ``parts`` the two other
    parts give the bipartition directly.
    """
    seed = as_seed(seed)
    v1 = as_mask(v1) if v1 is not None else inner.vertex_mask()
    allowed = _allowed(candidates)
    outside = [v for v in range(r3.n) if r3.adj[v] and not v1 >> v & 1]
    for v in outside:
        if r3.adj[v] & ~v1:
            raise ValueError(f"r3 edge at {v} does not cross into v1")
        if r3.degree(v) % 2:
            raise ParityError(f"odd crossing degree at vertex {v}", vertex=v)
    exposed: dict[int, list[Edge]] = {}
    for v in outside:
        link = members(r3.adj[v])
        pairs = [(a, b) for i, a in enumerate(link) for b in link[i + 1:] if inner.adj[a] >> b & 1]
        kept = seed.child(0, v).uniforms(len(pairs)) if pairs else []
        exposed[v] = [
            (a, b) for (a, b), x in zip(pairs, kept)
            if x < p and (allowed is None or allowed(Triple.of(v, a, b)))
        ]
    free = list(inner.adj)

    def spare(v: int) -> int:
        return sum(1 for a, b in exposed[v] if free[a] >> b & 1) - r3.degree(v) // 2

    pending = set(outside)
    chosen: list[Triple] = []
    while pending:
        v = min(pending, key=lambda u: (spare(u), u))
        pending.discard(v)
        link = members(r3.adj[v])
        adj: dict[int, list[int]] = {}
        for a, b in exposed[v]:
            if free[a] >> b & 1:
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
        matching = None
        tries = 1 if parts is not None else max_retries + 1
        for attempt in range(tries):
            if parts is not None:
                side = {parts[w] for w in link}
                first = min(side) if side else 0
                left = [w for w in link if parts[w] == first]
                right = [w for w in link if parts[w] != first]
            else:
                perm = seed.child(1, v, attempt).rng().permutation(len(link)).tolist()
                half = len(link) // 2
                left = sorted(link[i] for i in perm[:half])
                right = sorted(link[i] for i in perm[half:])
            right_set = set(right)
            bip = {a: [b for b in adj.get(a, ()) if b in right_set] for a in left}
            matching = _perfect_bipartite_matching(left, right, bip)
            if matching is not None:
                break
        if matching is None:
            raise LinkMatchingError(f"link matching failed at vertex {v}", vertex=v)
        for a, b in matching:
            free[a] &= ~(1 << b)
            free[b] &= ~(1 << a)
            chosen.append(Triple.of(v, a, b))
    return TripleSet(r3.n, chosen)


def _check_level_parity(g: DenseGraph, outside: list[int], parts: Optional[Sequence[int]]) -> None:
    for v in outside:
        if parts is None:
            if g.degree(v) % 2:
                raise ParityError(f"odd degree at outside vertex {v}", vertex=v)
        else:
            j = parts[v]
            into = [sum(1 for w in members(g.adj[v]) if parts[w] == k) for k in ((j + 1) % 3, (j + 2) % 3)]
            if into[0] != into[1]:
                raise ParityError(f"unbalanced part degrees at outside vertex {v}", vertex=v)


def _cover_down(g1, reserve_edges, inner_graph, universe, outside_mask, v1, params, seed, stats, parts, candidates):
    """Nibble, internal and crossing cover-down for one level attempt."""
    n_u = universe.bit_count()
    target = params.nibble_target_fraction * n_u
    pool = triangles_of(g1, universe)
    if candidates is not None:
        pool = TripleSet(g1.n, (t for t in pool if t in candidates))
    nibble_chosen = TripleSet(g1.n)
    if len(pool):
        try:
            weights = fractional_weights(g1, eps0=1.0, slack=params.regularity_slack, target=target,
                                         within=g1.vertex_mask(), candidates=pool)
            stats["weights_regular"] = True
        except WeightRegularizationError:
            weights = fractional_weights(g1, eps0=1.0, slack=params.regularity_slack, target=target,
                                         within=g1.vertex_mask(), candidates=pool, strict=False)
            stats["weights_regular"] = False
        sample = None
        for attempt in range(max(1, params.nibble_restarts)):
            sample = regular_subsample(g1, params.nibble_p, seed.child(1, attempt), weights=weights,
                                       within=g1.vertex_mask())
            if not sample.rejected:
                break
        if sample.rejected:
            raise NibbleError("nibble sample rejected", target=sample.target_degree)
        cover = greedy_cover(sample, g1, ceil(params.nibble_leftover_fraction * n_u), seed.child(2),
                             max_restarts=params.nibble_restarts)
        nibble_chosen = cover.chosen
        stats["nibble_sample"] = len(sample.triples)
        stats["nibble_leftover_max_degree"] = cover.leftover_max_degree
        stats["nibble_target_met"] = cover.success
    leftover = g1.minus_triples(nibble_chosen)
    l1 = leftover.induced(outside_mask)
    l2 = leftover.minus(l1)
    r2 = l2.union(reserve_edges)
    stats["l1_edges"] = l1.edge_count
    stats["l2_edges"] = l2.edge_count

    internal = cover_internal(l1, l1.union(r2), params.internal_p, seed.child(3), candidates=candidates)
    r3 = r2.minus_triples(internal)
    crossing = cover_crossing(r3, inner_graph, params.crossing_p, seed.child(4),
                              max_retries=params.matching_retries, v1=v1, parts=parts,
                              candidates=candidates)
    return nibble_chosen, internal, crossing


def run_level(
    g: DenseGraph,
    v1: VertexSet,
    params: PipelineParams,
    seed: Seed,
    universe: Optional[VertexSet] = None,
    parts: Optional[Sequence[int]] = None,
    candidates: Optional[TripleSet] = None,
) -> LevelResult:
    """Cover every edge of ``g`` outside V_1 using triangles of ``g``."""
    seed = as_seed(seed)
    v1 = as_mask(v1)
    universe = as_mask(universe, g.n) if universe is not None else (g.vertex_mask() | v1)
    outside_mask = universe & ~v1
    outside = members(outside_mask)
    _check_level_parity(g, outside, parts)
    inner_graph = g.induced(v1)
    rest = g.minus(inner_graph)
    stats: dict = {"n": universe.bit_count(), "v1": v1.bit_count(), "edges": g.edge_count}
    if rest.edge_count == 0:
        stats["trivial"] = True
        return LevelResult(TripleSet(g.n), inner_graph, stats)

    reserve = select_reserve(g, v1, params.reserve_q, params.reserve_tolerance, seed.child(0),
                             params.reserve_max_resamples, universe=universe)
    stats["reserve_edges"] = reserve.edges.edge_count
    stats["reserve_resamples"] = reserve.resamples
    g1 = rest.minus(reserve.edges)

    attempt_seed = seed
    for restart in range(params.level_restarts + 1):
        if restart:
            attempt_seed = seed.child(5, restart)
        try:
            nibble_chosen, internal, crossing = _cover_down(
                g1, reserve.edges, inner_graph, universe, outside_mask, v1, params, attempt_seed,
                stats, parts, candidates,
            )
            break
        except (NibbleError, InternalCoverError, LinkMatchingError):
            if restart == params.level_restarts:
                raise
    stats["level_restarts"] = restart
    covered = nibble_chosen.union(internal, crossing)
    leftover_inside = inner_graph.minus_triples(crossing)
    stats["covered"] = len(covered)
    stats["inner_edges_used"] = inner_graph.edge_count - leftover_inside.edge_count
    stats["leftover_max_degree"] = leftover_inside.max_degree()

    # exact bookkeeping: covered edges and leftover partition g
    if covered.shadow().union(leftover_inside) != g or 3 * len(covered) + leftover_inside.edge_count != g.edge_count:
        raise AssertionError("level cover is not an exact partition of the input graph")
    return LevelResult(covered, leftover_inside, stats)


def run_vortex(
    g: DenseGraph,
    vortex: Vortex,
    params: PipelineParams,
    seed: Seed,
    parts: Optional[Sequence[int]] = None,
    candidates: Optional[TripleSet] = None,
) -> IAResult:
    """Apply ``run_level`` down the vortex.

    At stage i the edges inside V_{i+2} are held back (unless
    ``params.vortex_holdback`` is off), so an edge of G[V_i] is covered at
    stage i-1 or i and never earlier.
    """
    seed = as_seed(seed)
    levels = vortex.levels
    current = g.induced(levels[0])
    covered = TripleSet(g.n)
    stats = []
    for i in range(len(levels) - 1):
        if params.vortex_holdback and i + 2 < len(levels):
            held = current.induced(levels[i + 2])
        else:
            held = DenseGraph.empty(g.n)
        work = current.minus(held)
        result = run_level(work, levels[i + 1], params, seed.child(i), universe=levels[i],
                           parts=parts, candidates=candidates)
        stats.append(result.stats)
        covered = covered.union(result.covered)
        current = result.leftover_inside.union(held)
    return IAResult(covered, current, vortex, stats)
