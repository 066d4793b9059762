"""Seeded synthetic taxonomies and per-level classifier scores.

Emulates a stack of classifiers of controllable quality on a complete
leveled tree: the true class's logit gets a fixed margin of 1.0 and every
logit receives Gaussian noise whose scale is that level's accuracy knob
(0 = perfect, larger = worse). Streams come from a PCG64 generator seeded
from the config, drawn in a fixed order (labels first, then levels top-down),
so equal configs give bitwise-equal outputs on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import taxonomy as tx
from .errors import InputError
from .scores import LOGITS, ScoreMatrix

MARGIN = 1.0
RNG_ALGORITHM = "pcg64"


@dataclass(frozen=True)
class SynthConfig:
    """Branching factor, noise scale per level (top-down, fine last), sample count, seed."""

    branching: tuple[int, ...]
    n_samples: int
    noise: tuple[float, ...]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "branching", tuple(int(b) for b in self.branching))
        object.__setattr__(self, "noise", tuple(float(s) for s in self.noise))
        if len(self.branching) < 1:
            raise InputError("branching must list at least one level")
        if len(self.noise) != len(self.branching):
            raise InputError(
                f"{len(self.noise)} noise scales for {len(self.branching)} levels"
            )
        if any(b < 1 for b in self.branching):
            raise InputError(f"branching factors must be positive: {self.branching}")
        if any(s < 0 for s in self.noise):
            raise InputError(f"noise scales must be non-negative: {self.noise}")
        if self.n_samples < 1:
            raise InputError(f"n_samples must be positive: {self.n_samples}")

    @property
    def n_levels(self) -> int:
        return len(self.branching)

    @property
    def n_leaves(self) -> int:
        out = 1
        for b in self.branching:
            out *= b
        return out


def gen_taxonomy(cfg: SynthConfig) -> tx.Taxonomy:
    """Complete leveled tree for the config; node names are ``n{level}_{index}``."""
    edges = []
    for level, b in enumerate(cfg.branching, start=1):
        width = 1
        for factor in cfg.branching[: level - 1]:
            width *= factor
        for i in range(width * b):
            edges.append((f"n{level}_{i}", f"n{level - 1}_{i // b}"))
    return tx.build_taxonomy(edges)


def gen_instance(cfg: SynthConfig):
    """Ground-truth labels plus noisy logits for every level.

    Returns ``(labels, fine, uppers)`` where labels index ``leaf_order``,
    ``fine`` is the leaf-level logits matrix and ``uppers`` lists the
    coarse-level matrices for depths 1 .. n_levels-1, topmost first. Columns
    follow the taxonomy's canonical order at each level.
    """
    t = gen_taxonomy(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    labels = rng.integers(0, cfg.n_leaves, size=cfg.n_samples)

    matrices = []
    for depth in range(1, cfg.n_levels + 1):
        order = tx.level_order(t, depth)
        names = tuple(t.names[i] for i in order)
        amap = tx.ancestor_index_map(t, depth)
        targets = amap[labels]
        logits = rng.normal(0.0, cfg.noise[depth - 1], size=(cfg.n_samples, len(order)))
        logits[np.arange(cfg.n_samples), targets] += MARGIN
        matrices.append(ScoreMatrix(logits, LOGITS, names))

    return labels, matrices[-1], matrices[:-1]
