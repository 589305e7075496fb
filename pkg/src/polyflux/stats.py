"""Seeded ensembles and counting estimators for n-point statistics.

Point-value statistics count the state at grid points (and pairs of grid
points). Shock statistics count fronts per species in boxes ``[e_b, e_{b+1})``
of ``box_edges``. Every estimator is a table of integer counts, so partial
tallies from any split of the realizations merge by addition and the result
does not depend on how the work was scheduled.

Two-point shock statistics pair a front of species ``s`` in box ``b1`` with
the *label* of box ``b2``: the net jump ``(u(e_{b2}-), u(e_{b2+1}-))`` across
that box, which is ``(w, w)`` when the box holds no net jump. Summing the
pair table over labels therefore reproduces the one-point table exactly.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NotCovered, RealizationError, ValidationError
from .fronttrack import FrontSolution, solve
from .profile import RandomProfileModel, sample

__all__ = [
    "EnsembleSpec",
    "PointEstimate",
    "ShockEstimate",
    "EnsembleResult",
    "run_ensemble",
    "estimate_F",
    "estimate_shock_density",
    "check_compatibility",
]


@dataclass(frozen=True)
class EnsembleSpec:
    model: RandomProfileModel
    N: int
    times: tuple[float, ...]
    x_grid: tuple[float, ...]
    max_order: int = 1
    box_edges: tuple[float, ...] | None = None
    coincidence_widths: tuple[float, ...] = ()
    horizon: float | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError("N must be at least 1")
        if any(t < 0 for t in self.times):
            raise ValidationError("times must be nonnegative")
        if self.horizon is not None and any(t > self.horizon for t in self.times):
            raise ValidationError("times must not exceed the horizon")
        if self.max_order not in (1, 2):
            raise ValidationError("max_order must be 1 or 2")
        if len(self.edges) < 2 or np.any(np.diff(self.edges) <= 0):
            raise ValidationError("box edges must be strictly increasing with at least two entries")

    @property
    def edges(self) -> np.ndarray:
        return np.asarray(self.x_grid if self.box_edges is None else self.box_edges, dtype=float)

    @property
    def T(self) -> float:
        if self.horizon is not None:
            return self.horizon
        return max(max(self.times, default=0.0), 1.0)


@dataclass
class PointEstimate:
    times: tuple[float, ...]
    x_grid: tuple[float, ...]
    counts1: np.ndarray  # (time, x, state)
    counts2: np.ndarray | None  # (time, x, y, state_x, state_y)
    N: int = 0

    def merge(self, other: "PointEstimate") -> "PointEstimate":
        return PointEstimate(
            self.times,
            self.x_grid,
            self.counts1 + other.counts1,
            None if self.counts2 is None else self.counts2 + other.counts2,
            self.N + other.N,
        )

    def p1(self, t: float, x: float) -> np.ndarray:
        return self.counts1[_index(self.times, t, "time"), _index(self.x_grid, x, "x")] / self.N


@dataclass
class ShockEstimate:
    times: tuple[float, ...]
    edges: np.ndarray
    M: int
    counts1: np.ndarray  # (time, box, u, v)
    pairs: np.ndarray | None  # (time, box1, species1, box2, label2); species index u*M+v
    events: np.ndarray  # (u, w, v) collision tallies
    coincidence_widths: tuple[float, ...]
    coincidence: np.ndarray  # (time, width): fronts whose own box label differs from their species
    N: int = 0

    def merge(self, other: "ShockEstimate") -> "ShockEstimate":
        return ShockEstimate(
            self.times,
            self.edges,
            self.M,
            self.counts1 + other.counts1,
            None if self.pairs is None else self.pairs + other.pairs,
            self.events + other.events,
            self.coincidence_widths,
            self.coincidence + other.coincidence,
            self.N + other.N,
        )


@dataclass
class EnsembleResult:
    point: PointEstimate
    shock: ShockEstimate
    archive: list = field(default_factory=list)  # event records, each with "realization"

    def merge(self, other: "EnsembleResult") -> "EnsembleResult":
        return EnsembleResult(
            self.point.merge(other.point),
            self.shock.merge(other.shock),
            sorted(self.archive + other.archive, key=lambda r: r["realization"]),
        )


def _index(grid, value, what) -> int:
    for i, g in enumerate(grid):
        if g == value:
            return i
    raise NotCovered(f"{what}={value} is not on the estimate grid")


def _empty(spec: EnsembleSpec, M: int) -> EnsembleResult:
    nt, nx, nb = len(spec.times), len(spec.x_grid), len(spec.edges) - 1
    point = PointEstimate(
        tuple(spec.times),
        tuple(spec.x_grid),
        np.zeros((nt, nx, M), dtype=np.int64),
        np.zeros((nt, nx, nx, M, M), dtype=np.int64) if spec.max_order >= 2 else None,
    )
    shock = ShockEstimate(
        tuple(spec.times),
        spec.edges,
        M,
        np.zeros((nt, nb, M, M), dtype=np.int64),
        np.zeros((nt, nb, M * M, nb, M * M), dtype=np.int64) if spec.max_order >= 2 else None,
        np.zeros((M, M, M), dtype=np.int64),
        tuple(spec.coincidence_widths),
        np.zeros((nt, len(spec.coincidence_widths)), dtype=np.int64),
    )
    return EnsembleResult(point, shock)


def _labels(sol_slice, edges, M):
    """Species index ``u*M+v`` of the net jump across each box."""
    idx = np.searchsorted(sol_slice.breakpoints, edges, side="left")
    lim = np.asarray(sol_slice.pieces)[idx]  # left limits at the edges
    return lim[:-1] * M + lim[1:]


def tally(sol: FrontSolution, spec: EnsembleSpec, res: EnsembleResult) -> None:
    """Add one realization's counts to ``res`` in place."""
    M = sol.flux.M
    edges = spec.edges
    xs = np.asarray(spec.x_grid, dtype=float)
    for ti, t in enumerate(spec.times):
        sl = sol.slice(t)
        st = sl.eval_many(xs)
        np.add.at(res.point.counts1[ti], (np.arange(len(xs)), st), 1)
        if res.point.counts2 is not None:
            onehot = np.eye(M, dtype=np.int64)[st]
            res.point.counts2[ti] += onehot[:, None, :, None] * onehot[None, :, None, :]
        pos = np.asarray(sl.breakpoints)
        if not len(pos):
            continue
        u = np.asarray(sl.pieces[:-1])
        v = np.asarray(sl.pieces[1:])
        box = np.searchsorted(edges, pos, side="right") - 1
        inside = (box >= 0) & (box < len(edges) - 1)
        np.add.at(res.shock.counts1[ti], (box[inside], u[inside], v[inside]), 1)
        if res.shock.pairs is not None and inside.any():
            lab = _labels(sl, edges, M)
            sp = u[inside] * M + v[inside]
            for b1, s1 in zip(box[inside], sp):
                res.shock.pairs[ti, b1, s1, np.arange(len(lab)), lab] += 1
        if spec.coincidence_widths:
            lo, hi = edges[0], edges[-1]
            for wi, w in enumerate(spec.coincidence_widths):
                n = int(round((hi - lo) / w))
                fine = lo + w * np.arange(n + 1)
                fine[-1] = hi
                b = np.searchsorted(fine, pos, side="right") - 1
                ok = (b >= 0) & (b < n)
                lab = _labels(sl, fine, M)
                res.shock.coincidence[ti, wi] += int(np.sum(lab[b[ok]] != (u * M + v)[ok]))
    for e in sol.events:
        if e.t <= spec.T:
            res.shock.events[e.left_species[0], e.middle, e.right_species[1]] += 1


def _run_chunk(args) -> EnsembleResult:
    spec, lo, hi = args
    flux = spec.model.flux
    res = _empty(spec, flux.M)
    for i in range(lo, hi):
        try:
            sol = solve(flux, sample(spec.model, i), spec.T)
            tally(sol, spec, res)
        except Exception as exc:  # noqa: BLE001 - re-raised with the index attached
            raise RealizationError(i, exc) from exc
        for rec in sol.event_records():
            res.archive.append({"realization": i, **rec})
    res.point.N = res.shock.N = hi - lo
    return res


def chunks(N: int, n: int, start: int = 0) -> list[tuple[int, int]]:
    n = max(1, min(n, N))
    bounds = np.linspace(start, start + N, n + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def run_ensemble(spec: EnsembleSpec, workers: int = 1, start: int = 0) -> EnsembleResult:
    """Solve realizations ``start .. start+N-1`` and tally them.

    Realization ``i`` always uses ``sample(spec.model, i)``, so results are
    identical for any ``workers`` and any split of the index range.
    """
    parts = chunks(spec.N, workers * 4 if workers > 1 else 1, start)
    tasks = [(spec, a, b) for a, b in parts]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_chunk, tasks))
    else:
        results = [_run_chunk(t) for t in tasks]
    out = results[0]
    for r in results[1:]:
        out = out.merge(r)
    return out


def estimate_F(point: PointEstimate, t: float, xs: Sequence[float], ks: Sequence[int]) -> float:
    """Empirical ``P{u(x_i, t) >= states[k_i] for all i}``; ``k = 0`` is the whole space."""
    ti = _index(point.times, t, "time")
    ix = [_index(point.x_grid, x, "x") for x in xs]
    if len(ix) == 1:
        return float(point.counts1[ti, ix[0], ks[0]:].sum() / point.N)
    if len(ix) == 2:
        if point.counts2 is None:
            raise NotCovered("two-point counts were not collected")
        return float(point.counts2[ti, ix[0], ix[1], ks[0]:, ks[1]:].sum() / point.N)
    raise NotCovered("only one- and two-point estimates are collected")


def _box_range(edges: np.ndarray, box) -> slice:
    lo, hi = box
    i = np.flatnonzero(edges == lo)
    j = np.flatnonzero(edges == hi)
    if not len(i) or not len(j) or j[0] <= i[0]:
        raise NotCovered(f"box {box} does not align with the box edges")
    return slice(int(i[0]), int(j[0]))


def estimate_shock_density(shock: ShockEstimate, species: tuple[int, int], t: float, box) -> float:
    """Expected number of ``species`` fronts in ``box = (lo, hi)`` per realization."""
    ti = _index(shock.times, t, "time")
    sl = _box_range(shock.edges, box)
    u, v = species
    if not (0 <= u < shock.M and 0 <= v < shock.M):
        raise NotCovered(f"species {species} outside the state range")
    return float(shock.counts1[ti, sl, u, v].sum() / shock.N)


def pair_mass(shock: ShockEstimate, t: float, s1, box1, s2, box2) -> float:
    if shock.pairs is None:
        raise NotCovered("pair counts were not collected")
    ti = _index(shock.times, t, "time")
    b1 = _box_range(shock.edges, box1)
    b2 = _box_range(shock.edges, box2)
    if b2.stop - b2.start != 1:
        raise NotCovered("second slot must be a single box")
    M = shock.M
    return float(shock.pairs[ti, b1, s1[0] * M + s1[1], b2.start, s2[0] * M + s2[1]].sum() / shock.N)


@dataclass
class CompatibilityReport:
    marginal_max_abs: int  # largest |Σ_label pairs - singles| over all cells (counts)
    coincidence: dict  # time -> list of coincident-box masses, one per width
    widths: tuple[float, ...]

    @property
    def marginal_ok(self) -> bool:
        return self.marginal_max_abs == 0

    @property
    def coincidence_ok(self) -> bool:
        for masses in self.coincidence.values():
            if any(b > a for a, b in zip(masses, masses[1:])):
                return False
            if masses and masses[0] > 0 and not masses[-1] < masses[0]:
                return False
        return True

    @property
    def ok(self) -> bool:
        return self.marginal_ok and self.coincidence_ok


def check_compatibility(shock: ShockEstimate) -> CompatibilityReport:
    """Marginalisation of pair counts and the coincidence limit across box widths."""
    if shock.pairs is None:
        raise NotCovered("pair counts were not collected")
    M = shock.M
    singles = shock.counts1.reshape(shock.counts1.shape[0], shock.counts1.shape[1], M * M)
    summed = shock.pairs.sum(axis=4)  # (time, b1, s1, b2)
    worst = int(np.abs(summed - singles[..., None]).max()) if summed.size else 0
    order = np.argsort(shock.coincidence_widths)[::-1]
    widths = tuple(shock.coincidence_widths[i] for i in order)
    coinc = {
        t: [float(shock.coincidence[ti, i] / shock.N) for i in order] for ti, t in enumerate(shock.times)
    }
    return CompatibilityReport(worst, coinc, widths)


def point_rows(point: PointEstimate, flux) -> list[tuple]:
    s = flux.states
    rows = []
    for ti, t in enumerate(point.times):
        for xi, x in enumerate(point.x_grid):
            for k in np.flatnonzero(point.counts1[ti, xi]):
                rows.append((t, x, s[k], int(point.counts1[ti, xi, k]), point.N))
    return rows


def point2_rows(point: PointEstimate, flux) -> list[tuple]:
    if point.counts2 is None:
        return []
    s = flux.states
    rows = []
    for ti, xi, yi, k, l in zip(*np.nonzero(point.counts2)):
        rows.append(
            (point.times[ti], point.x_grid[xi], point.x_grid[yi], s[k], s[l], int(point.counts2[ti, xi, yi, k, l]), point.N)
        )
    return rows


def shock_rows(shock: ShockEstimate, flux) -> list[tuple]:
    s = flux.states
    e = shock.edges
    return [
        (shock.times[ti], float(e[b]), float(e[b + 1]), s[u], s[v], int(shock.counts1[ti, b, u, v]), shock.N)
        for ti, b, u, v in zip(*np.nonzero(shock.counts1))
    ]


def pair_rows(shock: ShockEstimate, flux) -> list[tuple]:
    if shock.pairs is None:
        return []
    s = flux.states
    e = shock.edges
    M = shock.M
    rows = []
    for ti, b1, s1, b2, s2 in zip(*np.nonzero(shock.pairs)):
        rows.append(
            (
                shock.times[ti],
                float(e[b1]),
                float(e[b1 + 1]),
                float(e[b2]),
                float(e[b2 + 1]),
                s[s1 // M],
                s[s1 % M],
                s[s2 // M],
                s[s2 % M],
                int(shock.pairs[ti, b1, s1, b2, s2]),
                shock.N,
            )
        )
    return rows


def event_rows(shock: ShockEstimate, flux) -> list[tuple]:
    s = flux.states
    return [(s[u], s[w], s[v], int(shock.events[u, w, v]), shock.N) for u, w, v in zip(*np.nonzero(shock.events))]


def merge_all(results: Sequence[EnsembleResult]) -> EnsembleResult:
    out = results[0]
    for r in results[1:]:
        out = out.merge(r)
    return out


def default_window(model: RandomProfileModel) -> tuple[float, float]:
    if model.window is not None:
        return model.window
    w = model.profile.window()
    return w if w is not None else (-1.0, 1.0)
