"""Latin squares as triangle decompositions of K_{n,n,n}.

Vertex layout on 3n labels: rows 0..n-1, columns n..2n-1, symbols 2n..3n-1.
Cell (i, j) holding symbol k is the triangle {i, n+j, 2n+k}.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import exact_oracle
from .core import DenseGraph, Triple, TripleSet, members
from .params import PipelineParams
from .pipeline import TrialRecord, construct_recursive, map_trials, sweep_table
from .sampling import Seed, as_seed, sample_latin_support

Grid = np.ndarray


@dataclass(frozen=True, eq=False)
class LatinSupport:
    n: int
    allowed: np.ndarray  # bool (row, column, symbol)

    def __post_init__(self):
        a = np.asarray(self.allowed, dtype=bool)
        if a.shape != (self.n, self.n, self.n):
            raise ValueError(f"support must have shape {(self.n,) * 3}, got {a.shape}")
        object.__setattr__(self, "allowed", a)

    @classmethod
    def full(cls, n: int) -> "LatinSupport":
        return cls(n, np.ones((n, n, n), dtype=bool))

    @classmethod
    def from_square(cls, grid) -> "LatinSupport":
        grid = np.asarray(grid)
        n = grid.shape[0]
        a = np.zeros((n, n, n), dtype=bool)
        for i in range(n):
            for j in range(n):
                a[i, j, grid[i, j]] = True
        return cls(n, a)

    def __contains__(self, cell) -> bool:
        i, j, k = cell
        return bool(self.allowed[i, j, k])

    def __eq__(self, other) -> bool:
        return isinstance(other, LatinSupport) and self.n == other.n and np.array_equal(self.allowed, other.allowed)

    def triples(self) -> TripleSet:
        n = self.n
        return TripleSet(3 * n, ((i, n + j, 2 * n + k) for i, j, k in zip(*np.nonzero(self.allowed))))

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "allowed": self.allowed.astype(int).tolist()})

    @classmethod
    def from_json(cls, text: str) -> "LatinSupport":
        data = json.loads(text)
        return cls(int(data["n"]), np.asarray(data["allowed"], dtype=bool))


class TripartiteGraph:
    """A DenseGraph on 3n vertices with no edge inside a part."""

    def __init__(self, n: int, graph: DenseGraph):
        if graph.n != 3 * n:
            raise ValueError("graph must have 3n vertices")
        for part in range(3):
            block = sum(1 << v for v in range(part * n, (part + 1) * n))
            for v in range(part * n, (part + 1) * n):
                if graph.adj[v] & block:
                    raise ValueError(f"edge inside part {part} at vertex {v}")
        self.n = n
        self.graph = graph

    @classmethod
    def complete(cls, n: int) -> "TripartiteGraph":
        return cls.from_edges(n, ((u, v) for u in range(3 * n) for v in range(u + 1, 3 * n) if u // n != v // n))

    @classmethod
    def from_edges(cls, n: int, edges) -> "TripartiteGraph":
        return cls(n, DenseGraph.from_edges(3 * n, edges))

    @property
    def parts(self) -> list[int]:
        return [v // self.n for v in range(3 * self.n)]

    def part_mask(self, j: int) -> int:
        return ((1 << self.n) - 1) << (j * self.n)

    def bipartite(self, j: int, k: int) -> list[tuple[int, int]]:
        """Edges between parts j and k (j < k)."""
        mk = self.part_mask(k)
        return [(u, v) for u in range(j * self.n, (j + 1) * self.n) for v in members(self.graph.adj[u] & mk)]

    def minus_edge(self, u: int, v: int) -> "TripartiteGraph":
        return TripartiteGraph(self.n, self.graph.minus(DenseGraph.from_edges(3 * self.n, [(u, v)])))


def is_tripartite_divisible_dense(g: DenseGraph, parts: Sequence[int]) -> bool:
    for v in range(g.n):
        j = parts[v]
        counts = [0, 0, 0]
        for w in members(g.adj[v]):
            counts[parts[w]] += 1
        if counts[j] or counts[(j + 1) % 3] != counts[(j + 2) % 3]:
            return False
    return True


def is_tripartite_divisible(g: TripartiteGraph) -> bool:
    return is_tripartite_divisible_dense(g.graph, g.parts)


def is_latin_square(grid) -> bool:
    grid = np.asarray(grid)
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        return False
    n = grid.shape[0]
    want = set(range(n))
    return all(set(grid[i, :].tolist()) == want for i in range(n)) and all(
        set(grid[:, j].tolist()) == want for j in range(n)
    )


def grid_to_triples(grid) -> TripleSet:
    grid = np.asarray(grid)
    n = grid.shape[0]
    return TripleSet(3 * n, ((i, n + j, 2 * n + int(grid[i, j])) for i in range(n) for j in range(n)))


def triples_to_grid(ts, n: int) -> Grid:
    """Inverse of ``grid_to_triples``; rejects anything that is not one triangle per cell."""
    grid = np.full((n, n), -1, dtype=np.int64)
    for t in ts:
        i, c, s = sorted(t)
        if not (0 <= i < n <= c < 2 * n <= s < 3 * n):
            raise ValueError(f"triple {tuple(t)} is not row/column/symbol")
        if grid[i, c - n] != -1:
            raise ValueError(f"cell {(i, c - n)} filled twice")
        grid[i, c - n] = s - 2 * n
    if (grid < 0).any():
        raise ValueError("some cell is empty")
    if not is_latin_square(grid):
        raise ValueError("rows or columns repeat a symbol")
    return grid


def cyclic_square(n: int) -> Grid:
    i, j = np.indices((n, n))
    return (i + j) % n


def random_latin_square(n: int, seed) -> Grid:
    """A random isotope of the cyclic square (rows, columns and symbols permuted)."""
    rng = as_seed(seed).rng()
    base = cyclic_square(n)
    r, c, s = rng.permutation(n), rng.permutation(n), rng.permutation(n)
    return s[base[np.ix_(r, c)]]


def solve_latin(s: LatinSupport) -> Optional[Grid]:
    g = TripartiteGraph.complete(s.n).graph
    dec = exact_oracle.solve(g, s.triples())
    return None if dec is None else triples_to_grid(dec.triples, s.n)


def format_grid(grid) -> str:
    return "".join(" ".join(str(int(x)) for x in row) + "\n" for row in np.asarray(grid))


def parse_grid(text: str) -> Grid:
    rows = [line.split() for line in text.splitlines() if line.strip()]
    try:
        grid = np.array([[int(x) for x in r] for r in rows], dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"bad grid: {exc}") from None
    if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
        raise ValueError("grid must be square")
    return grid


def construct_latin(
    g: TripartiteGraph,
    params: PipelineParams,
    seed,
    candidates: Optional[TripleSet] = None,
    depth: int = 1,
) -> TrialRecord:
    """Pipeline run with balanced vortex, part-respecting banks and tripartite absorbers."""
    return construct_recursive(g.graph, params, depth, seed, candidates=candidates, parts=g.parts,
                               universe=(1 << (3 * g.n)) - 1)


def _latin_trial(args) -> list[bool]:
    n, p_grid, method, seed, params = args
    out = []
    for p in p_grid:
        s = sample_latin_support(n, p, seed.child(0))
        if method == "oracle":
            out.append(solve_latin(s) is not None)
        else:
            rec = construct_latin(TripartiteGraph.complete(n), params, seed.child(1), candidates=s.triples())
            out.append(rec.success)
    return out


def latin_threshold_sweep(
    n: int,
    p_grid: Sequence[float],
    trials: int,
    seed=0,
    method: str = "oracle",
    params: Optional[PipelineParams] = None,
    workers: int = 1,
    return_outcomes: bool = False,
):
    if n < 1:
        raise ValueError("order must be positive")
    if method not in ("oracle", "pipeline"):
        raise ValueError("method must be 'oracle' or 'pipeline'")
    seed = as_seed(seed)
    params = params or PipelineParams(x_size=9, bank_outer_size=6)
    grid = [float(p) for p in p_grid]
    outcomes = map_trials(_latin_trial, [(n, grid, method, seed.child(t), params) for t in range(trials)], workers)
    rows = sweep_table(n, grid, outcomes)
    return (rows, outcomes) if return_outcomes else rows
