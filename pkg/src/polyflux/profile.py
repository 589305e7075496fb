"""Piecewise-constant state profiles and seeded random-profile generators.

A :class:`Profile` takes the value ``pieces[j]`` (a state index) on
``[breakpoints[j-1], breakpoints[j])``; it is right-continuous and constant
outside ``[breakpoints[0], breakpoints[-1]]``.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    EmptyWindow,
    InadmissibleUpJump,
    NonIncreasingBreakpoints,
    RedundantPiece,
    ValidationError,
)
from .flux import PolygonalFlux

__all__ = [
    "Profile",
    "RandomProfileModel",
    "make_profile",
    "sample",
    "realization_rng",
    "total_variation",
    "l1_distance",
]


@dataclass(frozen=True)
class Profile:
    flux: PolygonalFlux
    breakpoints: tuple[float, ...]
    pieces: tuple[int, ...]

    def eval(self, x: float) -> int:
        return self.pieces[bisect.bisect_right(self.breakpoints, x)]

    def eval_left(self, x: float) -> int:
        return self.pieces[bisect.bisect_left(self.breakpoints, x)]

    def eval_many(self, x) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, np.asarray(x, dtype=float), side="right")
        return np.asarray(self.pieces)[idx]

    def values(self) -> np.ndarray:
        """State values (not indices) of the pieces."""
        return np.asarray(self.flux.states)[list(self.pieces)]

    @property
    def jumps(self) -> list[tuple[float, int, int]]:
        """``(position, left state, right state)`` for every breakpoint."""
        return [(x, self.pieces[j], self.pieces[j + 1]) for j, x in enumerate(self.breakpoints)]

    def window(self) -> tuple[float, float] | None:
        if not self.breakpoints:
            return None
        return self.breakpoints[0], self.breakpoints[-1]

    def to_dict(self) -> dict:
        """Canonical form: state *values*, not indices."""
        return {
            "kind": "deterministic",
            "breakpoints": [float(x) for x in self.breakpoints],
            "pieces": [self.flux.states[k] for k in self.pieces],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def loads(cls, text: str, flux: PolygonalFlux) -> "Profile":
        d = json.loads(text)
        return make_profile(d["breakpoints"], state_indices(flux, d["pieces"]), flux)


def state_indices(flux: PolygonalFlux, values: Sequence[float]) -> list[int]:
    """Map state values to indices; every value must be one of the flux states."""
    lookup = {float(s): k for k, s in enumerate(flux.states)}
    out = []
    for v in values:
        try:
            out.append(lookup[float(v)])
        except KeyError:
            raise ValidationError(f"{v} is not one of the flux states {flux.states}") from None
    return out


def make_profile(breakpoints: Sequence[float], pieces: Sequence[int], flux: PolygonalFlux) -> Profile:
    """Validate and build an admissible profile.

    ``pieces`` are state indices and must number ``len(breakpoints) + 1``.
    Upward jumps may only go to the next state; downward jumps are free.
    """
    bp = tuple(float(x) for x in breakpoints)
    pc = tuple(int(k) for k in pieces)
    if len(pc) != len(bp) + 1:
        raise ValidationError(f"{len(bp)} breakpoints need {len(bp) + 1} pieces, got {len(pc)}")
    if not all(math.isfinite(x) for x in bp):
        raise NonIncreasingBreakpoints("breakpoints must be finite")
    for j in range(len(bp) - 1):
        if not bp[j + 1] > bp[j]:
            raise NonIncreasingBreakpoints(f"breakpoint {bp[j + 1]} follows {bp[j]}")
    for k in pc:
        if not 0 <= k < flux.M:
            raise ValidationError(f"state index {k} outside 0..{flux.M - 1}")
    for j in range(len(bp)):
        u, v = pc[j], pc[j + 1]
        if u == v:
            raise RedundantPiece(f"pieces {j} and {j + 1} share state {flux.states[u]}")
        if v > u + 1:
            raise InadmissibleUpJump(f"up-jump {flux.states[u]}->{flux.states[v]} at x={bp[j]} skips a state")
    return Profile(flux, bp, pc)


def collapse(positions: Sequence[float], lefts: Sequence[int], rights: Sequence[int], flux, left_state: int) -> Profile:
    """Build a profile from ordered jumps, merging jumps that share a position.

    The jumps are in true left-to-right order, so a position below its
    predecessor can only be rounding and is treated as coincident.
    """
    bp: list[float] = []
    pc: list[int] = [left_state]
    for x, _, v in zip(positions, lefts, rights):
        if bp and x <= bp[-1]:
            pc[-1] = v
            if pc[-1] == pc[-2]:
                bp.pop()
                pc.pop()
        else:
            bp.append(x)
            pc.append(v)
    return make_profile(bp, pc, flux)


def total_variation(profile: Profile) -> float:
    u = profile.values()
    return float(np.abs(np.diff(u)).sum())


def l1_distance(a: Profile, b: Profile) -> float:
    """Exact ``∫|a - b| dx``; infinite when the far-field states differ."""
    if a.pieces[0] != b.pieces[0] or a.pieces[-1] != b.pieces[-1]:
        return math.inf
    xs = sorted(set(a.breakpoints) | set(b.breakpoints))
    if len(xs) < 2:
        return 0.0
    states = np.asarray(a.flux.states)
    mids = [(xs[i] + xs[i + 1]) / 2 for i in range(len(xs) - 1)]
    ua = states[a.eval_many(mids)]
    ub = states[b.eval_many(mids)]
    return float(np.sum(np.abs(ua - ub) * np.diff(xs)))


KINDS = ("deterministic", "iid_grid", "markov_jump")


@dataclass(frozen=True)
class RandomProfileModel:
    """Recipe for seeded random initial data.

    ``deterministic``
        returns ``profile`` for every realization.
    ``iid_grid``
        cells of width ``spacing`` tile ``window``; each cell draws its state
        from ``weights``. A draw that would make an up-jump skipping a state is
        rejected and redrawn, so every cell after the first is distributed as
        ``weights`` restricted to ``{0, ..., previous + 1}``.
    ``markov_jump``
        jump positions form a rate-``lam`` Poisson process on ``window``; the
        first state comes from ``weights`` (uniform if absent) and each jump
        draws the next state from its ``transition`` row restricted to
        admissible moves (``j != i`` and ``j <= i + 1``).
    """

    kind: str
    flux: PolygonalFlux
    seed: int = 0
    profile: Profile | None = None
    window: tuple[float, float] | None = None
    spacing: float | None = None
    lam: float | None = None
    weights: tuple[float, ...] | None = None
    transition: tuple[tuple[float, ...], ...] | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        M = self.flux.M
        if self.kind not in KINDS:
            raise ValidationError(f"unknown profile kind {self.kind!r}")
        if self.kind == "deterministic":
            if self.profile is None:
                raise ValidationError("deterministic model needs a profile")
            return
        if self.window is None or not self.window[1] > self.window[0]:
            raise EmptyWindow(f"window {self.window} is empty")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (M,) or np.any(w < 0) or w.sum() <= 0:
                raise ValidationError("weights need M nonnegative entries with positive sum")
        if self.kind == "iid_grid":
            if self.weights is None:
                raise ValidationError("iid_grid needs weights")
            if not (self.spacing and self.spacing > 0):
                raise ValidationError("iid_grid needs a positive spacing")
        if self.kind == "markov_jump":
            if not (self.lam and self.lam > 0):
                raise ValidationError("markov_jump needs a positive rate lambda")
            P = np.asarray(self.transition, dtype=float)
            if P.shape != (M, M) or np.any(P < 0):
                raise ValidationError("transition must be an MxM nonnegative matrix")

    def cell_transition(self) -> np.ndarray:
        """Row-stochastic matrix of the iid_grid rejection chain (cell to next cell)."""
        w = np.asarray(self.weights, dtype=float)
        M = len(w)
        P = np.zeros((M, M))
        for i in range(M):
            row = w.copy()
            row[i + 2:] = 0.0
            if row.sum() > 0:
                P[i] = row / row.sum()
            else:
                # unreachable from a positive-weight first cell
                P[i, i] = 1.0
        return P

    def jump_transition(self) -> np.ndarray:
        P = np.asarray(self.transition, dtype=float).copy()
        M = P.shape[0]
        for i in range(M):
            P[i, i] = 0.0
            P[i, i + 2:] = 0.0
            s = P[i].sum()
            if s > 0:
                P[i] /= s
        return P


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for realization ``index``; depends only on ``(seed, index)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def sample(model: RandomProfileModel, index: int) -> Profile:
    if model.kind == "deterministic":
        return model.profile
    rng = realization_rng(model.seed, index)
    flux = model.flux
    M = flux.M
    a, b = model.window
    if model.kind == "iid_grid":
        n = max(1, int(math.ceil((b - a) / model.spacing - 1e-9)))
        P = model._cache.get("cell")
        if P is None:
            P = model._cache.setdefault("cell", np.cumsum(model.cell_transition(), axis=1))
        w = np.cumsum(np.asarray(model.weights, dtype=float))
        w /= w[-1]
        draws = rng.random(n)
        cells = np.empty(n, dtype=int)
        cells[0] = min(int(np.searchsorted(w, draws[0], side="right")), M - 1)
        for i in range(1, n):
            row = P[cells[i - 1]]
            cells[i] = min(int(np.searchsorted(row, draws[i] * row[-1], side="right")), M - 1)
        bp, pc = [], [int(cells[0])]
        for i in range(1, n):
            if cells[i] != pc[-1]:
                bp.append(a + i * model.spacing)
                pc.append(int(cells[i]))
        return make_profile(bp, pc, flux)
    # markov_jump
    P = model._cache.get("jump")
    if P is None:
        P = model._cache.setdefault("jump", model.jump_transition())
    if model.weights is None:
        w = np.full(M, 1.0 / M)
    else:
        w = np.asarray(model.weights, dtype=float) / np.sum(model.weights)
    state = int(rng.choice(M, p=w))
    bp, pc = [], [state]
    x = a + rng.exponential(1.0 / model.lam)
    while x < b:
        row = P[state]
        if row.sum() == 0:
            break
        state = int(rng.choice(M, p=row))
        bp.append(float(x))
        pc.append(state)
        x += rng.exponential(1.0 / model.lam)
    return make_profile(bp, pc, flux)
