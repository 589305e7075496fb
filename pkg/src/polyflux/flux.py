"""Convex polygonal flux, Rankine-Hugoniot speeds and the Legendre transform.

States are referred to by their 0-based position in the ascending state list.
A flux with states ``u[0] < ... < u[M-1]`` and values ``f[i] = f(u[i])`` is
the piecewise-linear interpolant of those nodes; ``slopes[k]`` is the slope on
``[u[k], u[k+1]]`` and is also the speed of a front joining neighbours ``k``
and ``k+1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._config import TOL
from .errors import EqualStates, LengthMismatch, NonConvex, NonIncreasingStates

__all__ = ["PolygonalFlux", "LegendreTransform", "build_flux", "rh_speed", "legendre"]


@dataclass(frozen=True)
class PolygonalFlux:
    states: tuple[float, ...]
    values: tuple[float, ...]
    slopes: tuple[float, ...] = field(init=False)
    speeds: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        u = np.asarray(self.states, dtype=float)
        f = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "slopes", tuple(float(s) for s in np.diff(f) / np.diff(u)))
        # pairwise chord speeds; diagonal left as nan
        with np.errstate(invalid="ignore", divide="ignore"):
            c = (f[:, None] - f[None, :]) / (u[:, None] - u[None, :])
        np.fill_diagonal(c, np.nan)
        c.setflags(write=False)
        object.__setattr__(self, "speeds", c)

    @property
    def M(self) -> int:
        return len(self.states)

    @property
    def lipschitz(self) -> float:
        return max(abs(s) for s in self.slopes)

    def speed(self, i: int, j: int) -> float:
        return rh_speed(self, i, j)

    def exact_speed(self, i: int, j: int) -> Fraction:
        """Chord speed in exact rational arithmetic (inputs taken as exact binary floats)."""
        if i == j:
            raise EqualStates(f"no front joins state {i} to itself")
        fi, fj = Fraction(self.values[i]), Fraction(self.values[j])
        ui, uj = Fraction(self.states[i]), Fraction(self.states[j])
        return (fi - fj) / (ui - uj)

    def to_dict(self) -> dict:
        return {"states": list(self.states), "flux_values": list(self.values)}


def build_flux(states: Sequence[float], values: Sequence[float]) -> PolygonalFlux:
    """Validate the node lists and return a strictly convex polygonal flux."""
    if len(states) != len(values):
        raise LengthMismatch(f"{len(states)} states but {len(values)} flux values")
    if len(states) < 2:
        raise LengthMismatch("need at least two states")
    u = [float(s) for s in states]
    f = [float(v) for v in values]
    if not np.all(np.isfinite(u + f)):
        raise NonIncreasingStates("states and flux values must be finite")
    for k in range(len(u) - 1):
        if not u[k + 1] > u[k]:
            raise NonIncreasingStates(f"states[{k + 1}]={u[k + 1]} does not exceed states[{k}]={u[k]}")
    flux = PolygonalFlux(tuple(u), tuple(f))
    c = flux.slopes
    for k in range(len(c) - 1):
        if not c[k + 1] - c[k] > TOL:
            raise NonConvex(f"slopes {c[k]} and {c[k + 1]} are not strictly increasing")
    return flux


def rh_speed(flux: PolygonalFlux, i: int, j: int) -> float:
    """Rankine-Hugoniot speed of a front between states ``i`` and ``j``."""
    if i == j:
        raise EqualStates(f"no front joins state {i} to itself")
    if i > j:
        i, j = j, i
    return (flux.values[j] - flux.values[i]) / (flux.states[j] - flux.states[i])


@dataclass(frozen=True)
class LegendreTransform:
    """``f*(q) = max_i (q u_i - f_i)``, convex and piecewise linear in ``q``.

    Its kinks sit at the flux slopes; between ``slopes[k-1]`` and ``slopes[k]``
    it has slope ``states[k]``.
    """

    flux: PolygonalFlux
    breakpoints: tuple[float, ...]
    node_values: tuple[float, ...]

    @property
    def slope_range(self) -> tuple[float, float]:
        return self.flux.states[0], self.flux.states[-1]

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        u = np.asarray(self.flux.states)
        f = np.asarray(self.flux.values)
        out = np.max(q[..., None] * u - f, axis=-1)
        return float(out) if out.ndim == 0 else out

    def argmax(self, q: float) -> list[int]:
        """Indices attaining the maximum, i.e. the subgradient of ``f*`` at ``q``."""
        vals = [q * ui - fi for ui, fi in zip(self.flux.states, self.flux.values)]
        best = max(vals)
        return [i for i, v in enumerate(vals) if best - v <= TOL * max(1.0, abs(best))]

    def exact(self, q: Fraction) -> Fraction:
        # float screen, then exact comparison among the near-maximal terms only
        qf = float(q)
        vals = [qf * ui - fi for ui, fi in zip(self.flux.states, self.flux.values)]
        best = max(vals)
        band = 1e-9 * (1.0 + abs(best) + abs(qf) * max(abs(u) for u in self.flux.states))
        return max(
            q * Fraction(self.flux.states[i]) - Fraction(self.flux.values[i])
            for i, v in enumerate(vals)
            if v >= best - band
        )


def legendre(flux: PolygonalFlux) -> LegendreTransform:
    c = flux.slopes
    node_values = tuple(ck * flux.states[k] - flux.values[k] for k, ck in enumerate(c))
    return LegendreTransform(flux, tuple(c), node_values)
