"""Desk-scale knobs for the construction.

The asymptotic quantities (|X| = M, bank counts, sampling densities, the
reserve rate q, the log-power leftover bounds) become plain fields here.
Densities left as ``None`` fall back to the formula they stand in for,
evaluated at the actual size.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

BANK_MODES = ("linear", "packing")


@dataclass(frozen=True)
class PipelineParams:
    # absorber template (banks)
    x_size: int = 9
    bank_count: int = 2
    bank_inner_size: Optional[int] = None  # |X_i|; None -> |X|
    bank_outer_size: int = 6  # |Y_i|
    bank_min_cover: Optional[int] = None  # every triangle of G[X] in this many banks
    bank_mode: str = "linear"
    bank_triple_density: Optional[float] = None  # None -> 1/|V(G_i')|
    bank_retries: int = 50
    absorber_m: int = 2
    absorber_restarts: int = 200

    # iterative absorption
    ia_density: float = 1.0
    vortex_ratio: float = 0.5
    vortex_holdback: bool = True  # hold back G[V_{i+2}] at stage i
    reserve_q: float = 0.25
    reserve_tolerance: float = 0.5
    reserve_max_resamples: int = 100
    nibble_p: float = 1.0
    nibble_target_fraction: float = 0.125  # per-edge weight target as a fraction of n
    regularity_slack: float = 0.05
    nibble_leftover_fraction: float = 0.25  # leftover max degree target / n
    nibble_restarts: int = 10
    internal_p: float = 1.0
    crossing_p: float = 1.0
    matching_retries: int = 20
    level_restarts: int = 0  # redo nibble + cover-down of a level with fresh seeds

    # inner decomposition
    inner_density: float = 1.0
    base_case_n: int = 9

    # hypotheses
    complement_degree_slack: float = 1.0  # allow Δ(G^c) up to slack * n / ln n

    def __post_init__(self):
        for name in ("ia_density", "inner_density", "nibble_p", "internal_p", "crossing_p", "reserve_q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.bank_triple_density is not None and not 0.0 <= self.bank_triple_density <= 1.0:
            raise ValueError("bank_triple_density must lie in [0, 1]")
        if self.base_case_n < 7:
            raise ValueError("base_case_n must be at least 7")
        if self.absorber_m < 2:
            raise ValueError("absorber_m must be at least 2")
        if self.bank_mode not in BANK_MODES:
            raise ValueError(f"bank_mode must be one of {BANK_MODES}")
        if not 0.0 < self.vortex_ratio < 1.0:
            raise ValueError("vortex_ratio must lie in (0, 1)")
        if self.x_size < 3:
            raise ValueError("x_size must be at least 3")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown pipeline parameters: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json_file(cls, path) -> "PipelineParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def with_(self, **changes) -> "PipelineParams":
        return replace(self, **changes)

    def min_bank_cover(self) -> int:
        if self.bank_min_cover is not None:
            return self.bank_min_cover
        return max(1, self.bank_count // 4)
