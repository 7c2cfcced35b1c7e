"""Exact triangle decompositions at desk scale.

The solver is Knuth's Algorithm X in the dict-of-sets form: items are the
edges of the target graph, options are the candidate triples whose three
edges all belong to it. The branching item is always the one with the fewest
live options (ties broken by item order) and options are tried in ascending
order, so the first solution found is deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from .core import Decomposition, DenseGraph, Edge, Triple, TripleSet

INF = float("inf")


@dataclass(frozen=True)
class ExactCoverInstance:
    items: tuple[Edge, ...]
    options: tuple[Triple, ...]
    cap: Optional[int] = None

    @classmethod
    def build(cls, g: DenseGraph, candidates: TripleSet, cap: Optional[int] = None):
        if candidates.n != g.n:
            raise ValueError(f"candidate n={candidates.n} does not match graph n={g.n}")
        items = tuple(g.edges())
        options = tuple(t for t in candidates if all(g.has_edge(*e) for e in t.edges()))
        return cls(items, options, cap)


class _AlgorithmX:
    def __init__(self, inst: ExactCoverInstance):
        self.item_id = {e: i for i, e in enumerate(inst.items)}
        self.options = inst.options
        self.rows = [tuple(self.item_id[e] for e in t.edges()) for t in inst.options]
        self.cols: dict[int, set[int]] = {i: set() for i in range(len(inst.items))}
        for r, row in enumerate(self.rows):
            for i in row:
                self.cols[i].add(r)

    def _select(self, r: int) -> list[set[int]]:
        removed = []
        for i in self.rows[r]:
            for other in self.cols[i]:
                for k in self.rows[other]:
                    if k != i:
                        self.cols[k].discard(other)
            removed.append(self.cols.pop(i))
        return removed

    def _deselect(self, r: int, removed: list[set[int]]) -> None:
        for i in reversed(self.rows[r]):
            self.cols[i] = removed.pop()
            for other in self.cols[i]:
                for k in self.rows[other]:
                    if k != i:
                        self.cols[k].add(other)

    def solutions(self) -> Iterator[list[int]]:
        partial: list[int] = []

        def search():
            if not self.cols:
                yield list(partial)
                return
            item = min(self.cols, key=lambda i: (len(self.cols[i]), i))
            for r in sorted(self.cols[item]):
                partial.append(r)
                removed = self._select(r)
                yield from search()
                self._deselect(r, removed)
                partial.pop()

        yield from search()


def _quick_reject(g: DenseGraph, inst: ExactCoverInstance) -> bool:
    if g.edge_count % 3:
        return True
    if any(nb.bit_count() % 2 for nb in g.adj):
        return True
    covered = set()
    for t in inst.options:
        covered.update(t.edges())
    return len(covered) < len(inst.items)


def iter_decompositions(g: DenseGraph, candidates: TripleSet) -> Iterator[TripleSet]:
    inst = ExactCoverInstance.build(g, candidates)
    if _quick_reject(g, inst):
        return
    ax = _AlgorithmX(inst)
    for rows in ax.solutions():
        yield TripleSet(g.n, (inst.options[r] for r in rows))


def solve(g: DenseGraph, candidates: TripleSet) -> Optional[Decomposition]:
    for ts in iter_decompositions(g, candidates):
        return Decomposition(g, ts)
    return None


def count(g: DenseGraph, candidates: TripleSet, cap=INF) -> int:
    total = 0
    for _ in iter_decompositions(g, candidates):
        total += 1
        if total >= cap:
            break
    return total


def enumerate_all(g: DenseGraph, candidates: TripleSet, cap=INF) -> list[Decomposition]:
    out = []
    seen = set()
    for ts in iter_decompositions(g, candidates):
        if len(out) >= cap:
            break
        key = tuple(ts)
        if key in seen:
            continue
        seen.add(key)
        out.append(Decomposition(g, ts))
    return out


def naive_count(g: DenseGraph, candidates: TripleSet, cap=INF) -> int:
    """Plain backtracking over the lowest uncovered edge, no heuristics.

    Kept separate from Algorithm X so the two can cross-check each other.
    """
    edges = list(g.edges())
    eid = {e: i for i, e in enumerate(edges)}
    by_edge: list[list[int]] = [[] for _ in edges]
    for t in candidates:
        if all(e in eid for e in t.edges()):
            bits = 0
            for e in t.edges():
                bits |= 1 << eid[e]
            for e in t.edges():
                by_edge[eid[e]].append(bits)
    full = (1 << len(edges)) - 1
    found = 0

    def rec(covered: int) -> bool:
        nonlocal found
        if covered == full:
            found += 1
            return found >= cap
        free = ~covered & full
        low = (free & -free).bit_length() - 1
        for bits in by_edge[low]:
            if bits & covered == 0 and rec(covered | bits):
                return True
        return False

    if edges:
        rec(0)
    else:
        found = 1
    return min(found, cap)


def bose_construction(n: int) -> Decomposition:
    """STS(n) for n = 3 (mod 6) from the idempotent quasigroup x*y = (x+y)/2 mod v."""
    if n % 6 != 3:
        raise ValueError("Bose requires n ≡ 3 (mod 6)")
    v = n // 3
    half = (v + 1) // 2

    def point(x: int, i: int) -> int:
        return x + (i % 3) * v

    triples = [Triple.of(point(x, 0), point(x, 1), point(x, 2)) for x in range(v)]
    for i in range(3):
        for x in range(v):
            for y in range(x + 1, v):
                z = (x + y) * half % v
                triples.append(Triple.of(point(x, i), point(y, i), point(z, i + 1)))
    return Decomposition(DenseGraph.complete(n), TripleSet(n, triples))


def skolem_construction(n: int) -> Decomposition:
    """STS(n) for n = 1 (mod 6) from a half-idempotent commutative quasigroup."""
    if n % 6 != 1:
        raise ValueError("Skolem requires n ≡ 1 (mod 6)")
    k = (n - 1) // 6
    order = 2 * k
    inf = n - 1

    def op(x: int, y: int) -> int:
        s = (x + y) % order
        return s // 2 if s % 2 == 0 else k + s // 2

    def point(x: int, i: int) -> int:
        return x + (i % 3) * order

    triples = [Triple.of(point(x, 0), point(x, 1), point(x, 2)) for x in range(k)]
    for i in range(3):
        for x in range(k):
            triples.append(Triple.of(inf, point(x + k, i), point(x, i + 1)))
        for x in range(order):
            for y in range(x + 1, order):
                triples.append(Triple.of(point(x, i), point(y, i), point(op(x, y), i + 1)))
    return Decomposition(DenseGraph.complete(n), TripleSet(n, triples))


def steiner_triple_system(n: int) -> Decomposition:
    if n % 6 == 3:
        return bose_construction(n)
    if n % 6 == 1:
        return skolem_construction(n)
    raise ValueError(f"no Steiner triple system of order {n}: need n ≡ 1, 3 (mod 6)")
