"""Hopf-Lax variational oracle for polygonal flux and piecewise-constant data.

The solution at ``(x, t)`` is read off the largest minimiser ``a`` of

    I(p) = G(p) + t * f*((x - p) / t),    G(p) = ∫_0^p g,

as the state whose slope interval of ``f*`` contains ``(x - a) / t``. Both
terms are piecewise linear, so the minimum is attained on the finite set of
kinks: the profile breakpoints and the points ``x - c_k t``. This module
shares nothing with the front tracker except the input types.

Candidate values are screened in floating point and the near-minimal ones are
re-evaluated in exact rational arithmetic, so ties (flat stretches of ``I``)
are resolved exactly.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NonpositiveTime
from .flux import PolygonalFlux, legendre
from .profile import Profile

__all__ = ["HopfLax", "VariationalProblem", "functional", "inverse_lagrangian", "query"]

# relative screening band for the float pass; far wider than float error
_SCREEN = 1e-9


class HopfLax:
    """Precomputed integrated data for one ``(flux, profile)`` pair."""

    def __init__(self, flux: PolygonalFlux, profile: Profile):
        self.flux = flux
        self.profile = profile
        self.fstar = legendre(flux)
        self.ys = np.asarray(profile.breakpoints, dtype=float)
        self.vals = np.asarray(flux.states)[list(profile.pieces)]
        self.slopes = np.asarray(flux.slopes)
        # H(p) = ∫_{y_0}^p g, tabulated at the breakpoints; G = H - H(0)
        if len(self.ys):
            self.Hs = np.concatenate([[0.0], np.cumsum(self.vals[1:-1] * np.diff(self.ys))])
        else:
            self.Hs = np.zeros(0)
        self._H0 = float(self._H(np.array(0.0)))
        self.exact_ys = [Fraction(y) for y in profile.breakpoints]
        self.exact_vals = [Fraction(flux.states[k]) for k in profile.pieces]
        self.exact_Hs = [Fraction(0)]
        for j in range(1, len(self.exact_ys)):
            self.exact_Hs.append(self.exact_Hs[-1] + self.exact_vals[j] * (self.exact_ys[j] - self.exact_ys[j - 1]))
        self.exact_slopes = [flux.exact_speed(k, k + 1) for k in range(flux.M - 1)]
        self._exact_H0 = self._exact_H(Fraction(0))

    def _H(self, p):
        p = np.asarray(p, dtype=float)
        if not len(self.ys):
            return self.vals[0] * p
        j = np.searchsorted(self.ys, p, side="right")
        anchor = np.where(j == 0, 0, j - 1)
        return np.where(
            j == 0,
            self.vals[0] * (p - self.ys[0]),
            self.Hs[anchor] + self.vals[j] * (p - self.ys[anchor]),
        )

    def _exact_H(self, p: Fraction) -> Fraction:
        if not self.exact_ys:
            return self.exact_vals[0] * p
        j = bisect.bisect_right(self.exact_ys, p)
        if j == 0:
            return self.exact_vals[0] * (p - self.exact_ys[0])
        return self.exact_Hs[j - 1] + self.exact_vals[j] * (p - self.exact_ys[j - 1])

    def G(self, p):
        out = self._H(p) - self._H0
        return float(out) if np.ndim(out) == 0 else out

    def functional(self, p, x: float, t: float):
        if not t > 0:
            raise NonpositiveTime(f"t={t}")
        p = np.asarray(p, dtype=float)
        out = self._H(p) - self._H0 + t * self.fstar((x - p) / t)
        return float(out) if np.ndim(out) == 0 else out

    def exact_functional(self, p: Fraction, x: Fraction, t: Fraction) -> Fraction:
        return self._exact_H(p) - self._exact_H0 + t * self.fstar.exact((x - p) / t)

    def candidates(self, x: float, t: float) -> np.ndarray:
        return np.unique(np.concatenate([self.ys, x - self.slopes * t]))

    def inverse_lagrangian(self, x: float, t: float) -> float:
        """Largest minimiser of ``I``; ``inf`` when ``I`` is minimal on its whole right tail."""
        return float(self._argmin(x, t))

    def _argmin(self, x: float, t: float):
        if not t > 0:
            raise NonpositiveTime(f"t={t}")
        x, t = float(x), float(t)
        nb = len(self.ys)
        cands = np.concatenate([self.ys, x - self.slopes * t])
        vals = self.functional(cands, x, t)
        keep = set(np.flatnonzero(vals <= vals.min() + _SCREEN * (1.0 + np.abs(vals).max())).tolist())
        # beyond the last candidate I has slope g(+inf) - u_0 >= 0: flat when g ends in state 0
        right_flat = self.profile.pieces[-1] == 0
        if right_flat:
            top = cands.max()
            keep.update(np.flatnonzero(cands >= top - _SCREEN * (1.0 + abs(top))).tolist())
        fx, ft = Fraction(x), Fraction(t)
        points = {self.exact_ys[i] if i < nb else fx - self.exact_slopes[i - nb] * ft for i in keep}
        if len(points) == 1 and not right_flat:
            # a single screened candidate needs no exact comparison
            return points.pop()
        exact = {p: self.exact_functional(p, fx, ft) for p in points}
        m = min(exact.values())
        a = max(p for p, v in exact.items() if v == m)
        if right_flat and a == max(exact):
            return math.inf
        return a

    def query(self, x: float, t: float) -> int:
        a = self._argmin(x, t)
        if a == math.inf:
            return 0
        s = (Fraction(float(x)) - a) / Fraction(float(t))
        # s == c_k belongs to the upper state (largest-argmin convention)
        return bisect.bisect_right(self.exact_slopes, s)

    def query_many(self, xs, ts) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ts = np.broadcast_to(np.asarray(ts, dtype=float), xs.shape)
        return np.array([self.query(x, t) for x, t in zip(xs.ravel(), ts.ravel())], dtype=int).reshape(xs.shape)


@dataclass(frozen=True)
class VariationalProblem:
    flux: PolygonalFlux
    profile: Profile
    x: float
    t: float

    @property
    def oracle(self) -> HopfLax:
        return HopfLax(self.flux, self.profile)


def functional(problem: VariationalProblem, p: float) -> float:
    return problem.oracle.functional(p, problem.x, problem.t)


def inverse_lagrangian(problem: VariationalProblem) -> float:
    return problem.oracle.inverse_lagrangian(problem.x, problem.t)


def query(problem: VariationalProblem) -> int:
    return problem.oracle.query(problem.x, problem.t)
