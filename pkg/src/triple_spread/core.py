"""Graphs, triples and the decomposition checks everything else leans on.

Vertices are dense 0-based integers. Vertex subsets are Python ints used as
bitsets (bit ``v`` set iff ``v`` is in the subset); ``as_mask`` converts from
any iterable.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Iterator, NamedTuple, Optional, Union

VertexSet = Union[int, Iterable[int]]
Edge = tuple[int, int]


def as_mask(vertices: Optional[VertexSet], n: Optional[int] = None) -> int:
    """Bitmask for ``vertices``; ``None`` means all of ``range(n)``."""
    if vertices is None:
        if n is None:
            raise ValueError("need n to build the full vertex set")
        return (1 << n) - 1
    if isinstance(vertices, int):
        return vertices
    mask = 0
    for v in vertices:
        mask |= 1 << v
    return mask


def members(mask: int) -> list[int]:
    """Ascending list of the vertices in a bitmask."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Triple(NamedTuple):
    a: int
    b: int
    c: int

    @classmethod
    def of(cls, x: int, y: int, z: int) -> "Triple":
        a, b, c = sorted((x, y, z))
        if a == b or b == c:
            raise ValueError(f"triple needs three distinct vertices, got {(x, y, z)}")
        if a < 0:
            raise ValueError(f"negative vertex in {(x, y, z)}")
        return cls(a, b, c)

    def edges(self) -> tuple[Edge, Edge, Edge]:
        return ((self.a, self.b), (self.a, self.c), (self.b, self.c))

    @property
    def mask(self) -> int:
        return (1 << self.a) | (1 << self.b) | (1 << self.c)

    def __str__(self) -> str:
        return f"{self.a} {self.b} {self.c}"


class TripleSet:
    """An immutable set of triples over ``range(n)``.

    Iteration is always in ascending triple order so that anything sampled or
    solved over a TripleSet is reproducible.
    """

    __slots__ = ("n", "_triples", "__dict__")

    def __init__(self, n: int, triples: Iterable[Iterable[int]] = ()):
        self.n = n
        ts = set()
        for t in triples:
            t = t if isinstance(t, Triple) else Triple.of(*t)
            if t.c >= n:
                raise ValueError(f"triple {tuple(t)} out of range for n={n}")
            ts.add(t)
        self._triples = frozenset(ts)

    @cached_property
    def _sorted(self) -> tuple[Triple, ...]:
        return tuple(sorted(self._triples))

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._sorted)

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, t) -> bool:
        if not isinstance(t, Triple):
            try:
                t = Triple.of(*t)
            except (TypeError, ValueError):
                return False
        return t in self._triples

    def __eq__(self, other) -> bool:
        if not isinstance(other, TripleSet):
            return NotImplemented
        return self.n == other.n and self._triples == other._triples

    def __hash__(self) -> int:
        return hash((self.n, self._triples))

    def __repr__(self) -> str:
        return f"TripleSet(n={self.n}, size={len(self)})"

    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    @cached_property
    def edge_index(self) -> dict[Edge, list[Triple]]:
        """Edge -> incident triples, both in ascending order."""
        index: dict[Edge, list[Triple]] = {}
        for t in self._sorted:
            for e in t.edges():
                index.setdefault(e, []).append(t)
        return index

    def shadow(self) -> "DenseGraph":
        """The graph of all pairs covered by at least one triple."""
        return DenseGraph.from_edges(self.n, self.edge_index.keys())

    def vertex_mask(self) -> int:
        mask = 0
        for t in self._triples:
            mask |= t.mask
        return mask

    def is_edge_disjoint(self) -> bool:
        return all(len(ts) == 1 for ts in self.edge_index.values())

    def union(self, *others: Iterable[Triple]) -> "TripleSet":
        out = set(self._triples)
        for o in others:
            out.update(o)
        return TripleSet(self.n, out)

    def difference(self, other: Iterable[Triple]) -> "TripleSet":
        return TripleSet(self.n, self._triples.difference(other))

    def restrict(self, mask: int) -> "TripleSet":
        """Triples with all three vertices inside ``mask``."""
        return TripleSet(self.n, (t for t in self._triples if t.mask & mask == t.mask))


class DenseGraph:
    """Undirected simple graph on ``range(n)`` backed by per-vertex bitmasks."""

    __slots__ = ("n", "adj", "edge_count")

    def __init__(self, n: int, adj: Iterable[int]):
        adj = tuple(adj)
        if len(adj) != n:
            raise ValueError("adjacency length does not match n")
        full = (1 << n) - 1
        for v, nb in enumerate(adj):
            if nb >> v & 1:
                raise ValueError(f"self-loop at {v}")
            if nb & ~full:
                raise ValueError(f"neighbor out of range at {v}")
            for u in members(nb):
                if not adj[u] >> v & 1:
                    raise ValueError(f"asymmetric adjacency between {u} and {v}")
        self.n = n
        self.adj = adj
        self.edge_count = sum(nb.bit_count() for nb in adj) // 2

    @classmethod
    def _trusted(cls, n: int, adj: Iterable[int]) -> "DenseGraph":
        g = object.__new__(cls)
        g.n = n
        g.adj = tuple(adj)
        g.edge_count = sum(nb.bit_count() for nb in g.adj) // 2
        return g

    @classmethod
    def empty(cls, n: int) -> "DenseGraph":
        return cls._trusted(n, [0] * n)

    @classmethod
    def complete(cls, n: int, within: Optional[VertexSet] = None) -> "DenseGraph":
        mask = as_mask(within, n)
        return cls._trusted(n, [mask & ~(1 << v) if mask >> v & 1 else 0 for v in range(n)])

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Iterable[int]]) -> "DenseGraph":
        adj = [0] * n
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge {(u, v)} out of range for n={n}")
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return cls._trusted(n, adj)

    @classmethod
    def from_triples(cls, ts: TripleSet) -> "DenseGraph":
        return ts.shadow()

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseGraph):
            return NotImplemented
        return self.n == other.n and self.adj == other.adj

    def __hash__(self) -> int:
        return hash((self.n, self.adj))

    def __repr__(self) -> str:
        return f"DenseGraph(n={self.n}, edges={self.edge_count})"

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj[u] >> v & 1)

    def degree(self, v: int, within: Optional[int] = None) -> int:
        nb = self.adj[v]
        return (nb if within is None else nb & within).bit_count()

    def degrees(self) -> list[int]:
        return [nb.bit_count() for nb in self.adj]

    def edges(self) -> Iterator[Edge]:
        for u, nb in enumerate(self.adj):
            for v in members(nb >> (u + 1) << (u + 1)):
                yield (u, v)

    def vertex_mask(self) -> int:
        """Vertices with at least one edge."""
        return sum(1 << v for v, nb in enumerate(self.adj) if nb)

    def induced(self, mask: int) -> "DenseGraph":
        """Edges with both ends in ``mask`` (labels kept)."""
        return DenseGraph._trusted(
            self.n, [nb & mask if mask >> v & 1 else 0 for v, nb in enumerate(self.adj)]
        )

    def minus(self, other: "DenseGraph") -> "DenseGraph":
        return DenseGraph._trusted(self.n, [a & ~b for a, b in zip(self.adj, other.adj)])

    def union(self, other: "DenseGraph") -> "DenseGraph":
        return DenseGraph._trusted(self.n, [a | b for a, b in zip(self.adj, other.adj)])

    def intersection(self, other: "DenseGraph") -> "DenseGraph":
        return DenseGraph._trusted(self.n, [a & b for a, b in zip(self.adj, other.adj)])

    def minus_triples(self, ts: Iterable[Triple]) -> "DenseGraph":
        adj = list(self.adj)
        for t in ts:
            for u, v in t.edges():
                adj[u] &= ~(1 << v)
                adj[v] &= ~(1 << u)
        return DenseGraph._trusted(self.n, adj)

    def complement(self, within: Optional[VertexSet] = None) -> "DenseGraph":
        return DenseGraph.complete(self.n, within).minus(self)

    def is_subgraph_of(self, other: "DenseGraph") -> bool:
        return all(a & ~b == 0 for a, b in zip(self.adj, other.adj))

    def max_degree(self) -> int:
        return max((nb.bit_count() for nb in self.adj), default=0)


@dataclass(frozen=True)
class Decomposition:
    """Edge-disjoint triples covering ``target`` exactly."""

    target: DenseGraph
    triples: TripleSet

    def __post_init__(self):
        report = verify_decomposition(self.target, self.triples)
        if not report.valid:
            raise ValueError(f"not a decomposition: {report.first_violation}")

    def __len__(self) -> int:
        return len(self.triples)


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    first_violation: Optional[str] = None
    uncovered: int = 0
    overcovered: int = 0
    foreign: int = 0

    def __bool__(self) -> bool:
        return self.valid


def is_triangle_divisible(g: DenseGraph) -> bool:
    return g.edge_count % 3 == 0 and all(nb.bit_count() % 2 == 0 for nb in g.adj)


def verify_decomposition(g: DenseGraph, ts: Iterable[Iterable[int]]) -> VerificationReport:
    """Check that ``ts`` covers every edge of ``g`` exactly once and nothing else.

    ``ts`` may be any iterable of triples, so a multiset with a repeated
    triple is reported as overcovering rather than silently deduplicated.
    """
    n = g.n
    if isinstance(ts, TripleSet) and ts.n != n:
        return VerificationReport(False, f"vertex count mismatch: graph n={n}, triples n={ts.n}")
    cover: Counter = Counter()
    for raw in ts:
        t = raw if isinstance(raw, Triple) else Triple.of(*raw)
        if t.c >= n:
            return VerificationReport(False, f"triple {tuple(t)} out of range for n={n}", foreign=1)
        cover.update(t.edges())
    foreign = [e for e in cover if not g.has_edge(*e)]
    over = [e for e, k in cover.items() if k > 1]
    covered = sum(1 for e in cover if g.has_edge(*e))
    uncovered = g.edge_count - covered
    first = None
    if foreign:
        first = f"triple uses non-edge {min(foreign)}"
    elif over:
        e = min(over)
        first = f"edge {e} covered {cover[e]} times"
    elif uncovered:
        e = next(e for e in g.edges() if e not in cover)
        first = f"{uncovered} edges uncovered, first {e}"
    return VerificationReport(
        valid=first is None,
        first_violation=first,
        uncovered=uncovered,
        overcovered=len(over),
        foreign=len(foreign),
    )


def triangles_of(g: DenseGraph, within: Optional[VertexSet] = None) -> TripleSet:
    mask = as_mask(within, g.n)
    out = []
    for a in members(mask):
        higher_a = g.adj[a] & mask & ~((2 << a) - 1)
        for b in members(higher_a):
            for c in members(higher_a & g.adj[b] & ~((2 << b) - 1)):
                out.append(Triple(a, b, c))
    return TripleSet(g.n, out)


def complement_max_degree(g: DenseGraph, within: Optional[VertexSet] = None) -> int:
    mask = as_mask(within, g.n)
    best = 0
    for v in range(g.n):
        missing = (mask & ~g.adj[v] & ~(1 << v)).bit_count()
        best = max(best, missing)
    return best


def all_triples(n: int) -> TripleSet:
    return TripleSet(n, (Triple(*c) for c in combinations(range(n), 3)))


def uncovered_pairs(ts: TripleSet, g: Optional[DenseGraph] = None) -> int:
    """Number of edges of ``g`` (default K_n) lying in no triple of ``ts``."""
    g = g if g is not None else DenseGraph.complete(ts.n)
    return g.minus(ts.shadow()).edge_count


class FormatError(ValueError):
    pass


def format_triples(ts: Iterable[Triple], n: int) -> str:
    lines = [f"n={n}"]
    lines.extend(str(t) for t in sorted(ts))
    return "\n".join(lines) + "\n"


def parse_triples(text: str) -> tuple[int, list[Triple]]:
    """Parse the ``n=<count>`` + ``a b c`` per line format.

    Returns the raw list (duplicates kept) so callers can reject them.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise FormatError("missing header line 'n=<count>'")
    try:
        n = int(lines[0][2:])
    except ValueError:
        raise FormatError(f"bad header {lines[0]!r}") from None
    if n < 0:
        raise FormatError("negative vertex count")
    out = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 3:
            raise FormatError(f"line {lineno}: expected 3 integers, got {ln!r}")
        try:
            a, b, c = (int(x) for x in parts)
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer in {ln!r}") from None
        if not (a < b < c):
            raise FormatError(f"line {lineno}: triple not strictly ascending: {ln!r}")
        if a < 0 or c >= n:
            raise FormatError(f"line {lineno}: vertex out of range for n={n}")
        out.append(Triple(a, b, c))
    return n, out


def read_triple_set(text: str) -> TripleSet:
    n, ts = parse_triples(text)
    return TripleSet(n, ts)
