"""Checks for the two kinetic hierarchies of n-point functions.

Point-value hierarchy
    Tail CDFs ``F_k(x, t) = P{u(x, t) >= u_k}`` obey free transport at the
    neighbour slope ``c_{k-1}`` until fronts interact. :func:`verify_transport`
    measures the exact deviation from transport and locates the region where
    the transported CDFs stop being monotone in ``k`` (the multivalued
    overlap).

Shock-species hierarchy
    A front of species ``(u, v)`` is created when ``(u, w)`` catches ``(w, v)``
    and destroyed when it catches ``(v, w)`` from the left or is caught by
    ``(w, u)``. :func:`interaction_sets` gives the admissible partners,
    :func:`classify_event` assigns every collision its three roles, and
    :func:`ledger_verify` checks the one-point equation in weak form against
    smooth test functions along exact trajectories.

All state arguments are 0-based indices into ``flux.states``.
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyWindow, InadmissibleSpecies, RoleViolation
from .flux import PolygonalFlux
from .fronttrack import CollisionEvent, FrontSolution
from .profile import Profile

__all__ = [
    "InteractionSets",
    "interaction_sets",
    "brute_force_sets",
    "compare_interaction_sets",
    "Classification",
    "classify_event",
    "Bump",
    "seeded_bumps",
    "LedgerReport",
    "ledger_verify",
    "TransportCheck",
    "verify_transport",
]


def admissible(u: int, v: int) -> bool:
    return u != v and v <= u + 1


@dataclass(frozen=True)
class InteractionSets:
    species: tuple[int, int]
    w1: frozenset[int]  # middle states w with (u,w) + (w,v) -> (u,v)
    w2: frozenset[int]  # right partners: (u,v) + (v,w) -> (u,w)
    w3: frozenset[int]  # left partners: (w,u) + (u,v) -> (w,v)


def interaction_sets(M: int, u: int, v: int) -> InteractionSets:
    """Partner sets from the one-point case split, clamped to ``0..M-1``.

    Up-jump ``v = u+1``: no creation, ``W2 = {w < u}``, ``W3 = {w > u+1}``.
    Down-jump ``v < u``: ``W1 = {w <= u+1}``, ``W2 = {w <= v+1}``,
    ``W3 = {w >= u-1}``. Every set excludes ``u`` and ``v``.
    """
    if isinstance(M, PolygonalFlux):
        M = M.M
    if not (0 <= u < M and 0 <= v < M) or not admissible(u, v):
        raise InadmissibleSpecies(f"species ({u},{v}) is not admissible")
    states = range(M)
    if v == u + 1:
        w1: Iterable[int] = ()
        w2 = (w for w in states if w < u)
        w3 = (w for w in states if w > u + 1)
    else:
        w1 = (w for w in states if w <= u + 1)
        w2 = (w for w in states if w <= v + 1)
        w3 = (w for w in states if w >= u - 1)
    drop = {u, v}
    return InteractionSets(
        (u, v),
        frozenset(w1) - drop,
        frozenset(w2) - drop,
        frozenset(w3) - drop,
    )


def indicator_growth(u: int, v: int) -> bool:
    """Growth indicator written on the n-point equation: ``1{v = u+1}``."""
    return v == u + 1


def catches(flux: PolygonalFlux, left: tuple[int, int], right: tuple[int, int]) -> bool:
    return flux.speeds[left] > flux.speeds[right]


def brute_force_sets(flux: PolygonalFlux, u: int, v: int) -> InteractionSets:
    """Enumerate triples directly: all species admissible and the left one faster."""
    M = flux.M
    w1, w2, w3 = set(), set(), set()
    for w in range(M):
        if w in (u, v):
            continue
        if admissible(u, w) and admissible(w, v) and catches(flux, (u, w), (w, v)):
            w1.add(w)
        if admissible(v, w) and admissible(u, w) and catches(flux, (u, v), (v, w)):
            w2.add(w)
        if admissible(w, u) and admissible(w, v) and catches(flux, (w, u), (u, v)):
            w3.add(w)
    return InteractionSets((u, v), frozenset(w1), frozenset(w2), frozenset(w3))


@dataclass
class SetComparison:
    """Outcome of checking :func:`interaction_sets` against enumeration.

    ``vacuous`` lists formula members whose partner species is itself an
    inadmissible up-jump; the corresponding terms multiply a density that is
    identically zero. ``genuine`` lists every other disagreement.
    ``indicator_mismatch`` lists species where the growth indicator
    ``1{v=u+1}`` disagrees with whether enumeration finds any creating middle.
    """

    checked: int = 0
    vacuous: list = field(default_factory=list)
    genuine: list = field(default_factory=list)
    indicator_mismatch: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.genuine

    def summary(self) -> str:
        lines = [f"{self.checked} species checked, {len(self.genuine)} genuine disagreements"]
        if self.vacuous:
            lines.append(
                f"{len(self.vacuous)} formula-only W1 members pair with an inadmissible species (vanishing terms)"
            )
        if self.indicator_mismatch:
            lines.append(
                f"growth indicator 1{{v=u+1}} disagrees with enumeration on {len(self.indicator_mismatch)} species; "
                "W1 follows the one-point case split (growth only for down-jumps)"
            )
        return "\n".join(lines)


def compare_interaction_sets(flux: PolygonalFlux) -> SetComparison:
    M = flux.M
    out = SetComparison()
    for u in range(M):
        for v in range(M):
            if not admissible(u, v):
                continue
            out.checked += 1
            f = interaction_sets(M, u, v)
            b = brute_force_sets(flux, u, v)
            for name, partner in (
                ("w1", lambda w: [(u, w), (w, v)]),
                ("w2", lambda w: [(v, w), (u, w)]),
                ("w3", lambda w: [(w, u), (w, v)]),
            ):
                fs, bs = getattr(f, name), getattr(b, name)
                for w in sorted(fs ^ bs):
                    rec = (name, (u, v), w)
                    if w in fs and not all(admissible(*s) for s in partner(w)):
                        out.vacuous.append(rec)
                    else:
                        out.genuine.append(rec)
            if indicator_growth(u, v) != bool(b.w1):
                out.indicator_mismatch.append((u, v))
    return out


@dataclass(frozen=True)
class Classification:
    event: CollisionEvent
    growth: tuple[tuple[int, int], int]  # (created species, middle w)
    right_decay: tuple[tuple[int, int], int]  # (left species, partner v)
    left_decay: tuple[tuple[int, int], int]  # (right species, partner u)
    coefficient: float


def classify_event(flux: PolygonalFlux, event: CollisionEvent) -> Classification:
    u, w = event.left_species
    w2, v = event.right_species
    M = flux.M
    if event.annihilation:
        raise RoleViolation(f"{event.left_species} and {event.right_species} cancelled in a triple collision")
    if w != w2:
        raise RoleViolation(f"fronts {event.left_species} and {event.right_species} share no middle state")
    if event.created_species != (u, v):
        raise RoleViolation(f"created {event.created_species}, expected {(u, v)}")
    for s in ((u, w), (w, v), (u, v)):
        if not (0 <= s[0] < M and 0 <= s[1] < M) or not admissible(*s):
            raise RoleViolation(f"species {s} is not admissible")
    coef = float(flux.speeds[u, w] - flux.speeds[w, v])
    if not coef > 0:
        raise RoleViolation(f"left front {(u, w)} cannot catch {(w, v)} (coefficient {coef})")
    if w not in interaction_sets(M, u, v).w1:
        raise RoleViolation(f"middle {w} not in W1{(u, v)}")
    if v not in interaction_sets(M, u, w).w2:
        raise RoleViolation(f"partner {v} not in W2{(u, w)}")
    if u not in interaction_sets(M, w, v).w3:
        raise RoleViolation(f"partner {u} not in W3{(w, v)}")
    return Classification(event, ((u, v), w), ((u, w), v), ((w, v), u), coef)


def _bump(z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    m = np.abs(z) < 1
    out[m] = np.exp(-1.0 / (1.0 - z[m] ** 2))
    return out


def _dbump(z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    m = np.abs(z) < 1
    zm = z[m]
    out[m] = np.exp(-1.0 / (1.0 - zm**2)) * (-2.0 * zm / (1.0 - zm**2) ** 2)
    return out


@dataclass(frozen=True)
class Bump:
    """Smooth test function supported on ``|x-xc| < wx, |t-tc| < wt``."""

    xc: float
    tc: float
    wx: float
    wt: float

    def __call__(self, x, t):
        return _bump((np.asarray(x) - self.xc) / self.wx) * _bump((np.asarray(t) - self.tc) / self.wt)

    def dx(self, x, t):
        return _dbump((np.asarray(x) - self.xc) / self.wx) / self.wx * _bump((np.asarray(t) - self.tc) / self.wt)

    def dt(self, x, t):
        return _bump((np.asarray(x) - self.xc) / self.wx) * _dbump((np.asarray(t) - self.tc) / self.wt) / self.wt


def seeded_bumps(seed: int, n: int, x_range: tuple[float, float], t_range: tuple[float, float]) -> list[Bump]:
    (x0, x1), (t0, t1) = x_range, t_range
    if not (x1 > x0 and t1 > t0):
        raise EmptyWindow(f"bump placement needs nonempty ranges, got {x_range} x {t_range}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        wx = rng.uniform(0.1, 0.5) * (x1 - x0)
        wt = rng.uniform(0.1, 0.5) * (t1 - t0)
        out.append(Bump(rng.uniform(x0, x1), rng.uniform(t0, t1), wx, wt))
    return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


def transport_integral(phi: Bump, t0, t1, x0, c, panels: int = 48):
    """``∫_{t0}^{t1} (φ_t + c φ_x)(x0 + c(τ - t0), τ) dτ`` for arrays of trajectories.

    Composite Gauss-Legendre on the part of each segment inside the support
    of ``φ``; the integrand is smooth there and vanishes to all orders at the
    support boundary.
    """
    t0, t1, x0, c = (np.asarray(a, dtype=float) for a in (t0, t1, x0, c))
    lo = np.maximum(t0, phi.tc - phi.wt)
    hi = np.minimum(t1, phi.tc + phi.wt)
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = t0 + (phi.xc - phi.wx - x0) / c
        tb = t0 + (phi.xc + phi.wx - x0) / c
    moving = c != 0
    lo = np.where(moving, np.maximum(lo, np.minimum(ta, tb)), lo)
    hi = np.where(moving, np.minimum(hi, np.maximum(ta, tb)), hi)
    out = np.zeros(np.broadcast(t0, c).shape)
    ok = hi > lo
    if not ok.any():
        return out
    lo, hi, t0k, x0k, ck = lo[ok], hi[ok], np.broadcast_to(t0, ok.shape)[ok], np.broadcast_to(x0, ok.shape)[ok], np.broadcast_to(c, ok.shape)[ok]
    edges = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, panels + 1)[None, :]
    a, b = edges[:, :-1, None], edges[:, 1:, None]
    tau = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES
    xs = x0k[:, None, None] + ck[:, None, None] * (tau - t0k[:, None, None])
    integrand = phi.dt(xs, tau) + ck[:, None, None] * phi.dx(xs, tau)
    out[ok] = np.sum(0.5 * (b - a) * _GL_WEIGHTS * integrand, axis=(1, 2))
    return out


@dataclass
class LedgerReport:
    births: Counter = field(default_factory=Counter)  # species -> fronts present at t=0
    creations: Counter = field(default_factory=Counter)
    destructions: Counter = field(default_factory=Counter)
    survivors: Counter = field(default_factory=Counter)
    classifications: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)  # (species, bump index) -> float
    violations: list = field(default_factory=list)
    realizations: int = 0
    events: int = 0

    @property
    def max_residual(self) -> float:
        return max((abs(r) for r in self.residuals.values()), default=0.0)

    def balance(self) -> dict:
        """``births + creations - destructions - survivors`` per species; all zero when consistent."""
        keys = set(self.births) | set(self.creations) | set(self.destructions) | set(self.survivors)
        return {
            s: self.births[s] + self.creations[s] - self.destructions[s] - self.survivors[s] for s in sorted(keys)
        }

    @property
    def balanced(self) -> bool:
        return all(v == 0 for v in self.balance().values())

    def ok(self, tol: float = 1e-9) -> bool:
        return not self.violations and self.balanced and self.max_residual < tol

    def to_dict(self, flux: PolygonalFlux | None = None) -> dict:
        def name(s):
            return list(s) if flux is None else [flux.states[s[0]], flux.states[s[1]]]

        species = sorted(set(self.births) | set(self.creations) | set(self.destructions) | set(self.survivors))
        bal = self.balance()
        return {
            "realizations": self.realizations,
            "events": self.events,
            "species": [
                {
                    "species": name(s),
                    "births": self.births[s],
                    "creations": self.creations[s],
                    "destructions": self.destructions[s],
                    "survivors": self.survivors[s],
                    "balance": bal[s],
                }
                for s in species
            ],
            "max_residual": self.max_residual,
            "violations": [str(v) for v in self.violations],
            "ok": self.ok(),
        }


def ledger_verify(
    solutions: FrontSolution | Sequence[FrontSolution],
    test_functions: Sequence[Bump] = (),
) -> LedgerReport:
    """Event bookkeeping and the weak one-point equation on every species.

    For a species ``s`` and test function ``φ`` the trajectory side
    ``Σ ∫ (∂_t + c_s ∂_x) φ`` (by quadrature along every ``s``-trajectory)
    must equal the event side ``Σ_destroyed φ(e) - Σ_created φ(e)`` plus the
    boundary terms at ``t = 0`` and at the horizon. Created/destroyed roles
    come from :func:`classify_event`, not from the trajectories.
    """
    if isinstance(solutions, FrontSolution):
        solutions = [solutions]
    rep = LedgerReport()
    traj_side: dict = defaultdict(float)
    event_side: dict = defaultdict(float)
    for r, sol in enumerate(solutions):
        rep.realizations += 1
        rep.events += len(sol.events)
        flux = sol.flux
        created_by = Counter(e.created for e in sol.events)
        killed_by = Counter()
        for e in sol.events:
            killed_by[e.left] += 1
            killed_by[e.right] += 1
        for f in sol.fronts:
            if f.t_birth == 0.0 and created_by[f.id] == 0:
                rep.births[f.species] += 1
            elif created_by[f.id] != 1:
                rep.violations.append((r, "birth", f.id, created_by[f.id]))
            if f.t_death is None:
                rep.survivors[f.species] += 1
            elif killed_by[f.id] != 1:
                rep.violations.append((r, "death", f.id, killed_by[f.id]))
        for e in sol.events:
            try:
                cl = classify_event(flux, e)
            except RoleViolation as exc:
                rep.violations.append((r, "role", e, str(exc)))
                if e.annihilation:
                    rep.destructions[e.left_species] += 1
                    rep.destructions[e.right_species] += 1
                continue
            rep.classifications.append(cl)
            rep.creations[cl.growth[0]] += 1
            rep.destructions[cl.right_decay[0]] += 1
            rep.destructions[cl.left_decay[0]] += 1
        if not test_functions:
            continue
        T = sol.horizon
        a = sol.arrays()
        species = list(zip(a["u"].tolist(), a["v"].tolist()))
        t_end = np.where(np.isfinite(a["td"]), a["td"], T)
        ex = np.array([e.x for e in sol.events])
        et = np.array([e.t for e in sol.events])
        # signed event-side contributions: +1 per destroyed species, -1 per created
        terms = []
        for j, e in enumerate(sol.events):
            terms += [(e.left_species, j, 1.0), (e.right_species, j, 1.0)]
            if not e.annihilation:
                terms.append((e.created_species, j, -1.0))
        born = [f for f in sol.fronts if f.t_birth == 0.0 and created_by[f.id] == 0]
        bx = np.array([f.x_birth for f in born])
        alive = [f for f in sol.fronts if f.t_death is None] if math.isfinite(T) else []
        sx = np.array([f.position(T) for f in alive])
        for m, phi in enumerate(test_functions):
            if not math.isfinite(T) and len(sol.fronts):
                t_end = np.where(np.isfinite(a["td"]), a["td"], phi.tc + phi.wt)
            vals = transport_integral(phi, a["tb"], t_end, a["xb"], a["c"])
            for s, val in zip(species, vals.tolist()):
                traj_side[(s, m)] += val
            pe = phi(ex, et).tolist() if len(ex) else []
            for s, j, sign in terms:
                event_side[(s, m)] += sign * pe[j]
            for f, p in zip(born, phi(bx, 0.0).tolist() if born else []):
                event_side[(f.species, m)] -= p
            for f, p in zip(alive, phi(sx, T).tolist() if alive else []):
                event_side[(f.species, m)] += p
    for key in set(traj_side) | set(event_side):
        rep.residuals[key] = traj_side[key] - event_side[key]
    return rep


def _indicator_intervals(profile: Profile, k: int, shift: float = 0.0) -> list[tuple[float, float]]:
    """Intervals ``[a, b)`` where the profile state index is ``>= k``, shifted by ``shift``."""
    edges = [-math.inf] + [x + shift for x in profile.breakpoints] + [math.inf]
    out: list[tuple[float, float]] = []
    for j, s in enumerate(profile.pieces):
        if s >= k:
            a, b = edges[j], edges[j + 1]
            if out and out[-1][1] == a:
                out[-1] = (out[-1][0], b)
            else:
                out.append((a, b))
    return out


def _difference(A, B):
    """``A \\ B`` for sorted disjoint interval lists."""
    out = []
    for a0, a1 in A:
        cur = a0
        for b0, b1 in B:
            if b1 <= cur or b0 >= a1:
                continue
            if b0 > cur:
                out.append((cur, b0))
            cur = max(cur, b1)
            if cur >= a1:
                break
        if cur < a1:
            out.append((cur, a1))
    return [(a, b) for a, b in out if b > a]


def _measure(intervals) -> float:
    return float(sum(b - a for a, b in intervals))


@dataclass
class TransportCheck:
    """Deviation of the exact tail CDFs from pure transport.

    ``residual[t][k]`` is ``∫ |F_k(x, t) - F_k(x - c_{k-1} t, 0)| dx`` for the
    threshold ``u >= states[k]`` (``k = 1..M-1``); ``mismatch[t][k]`` lists
    where the two differ. ``overlap[t]`` lists where the transported CDFs are
    not monotone in ``k``. ``first_collision`` is the first event time, or 0
    when the data already contains a jump between non-neighbouring states.
    """

    speeds: tuple[float, ...]
    first_collision: float
    times: list[float]
    residual: dict
    mismatch: dict
    overlap: dict

    def clean_before_collision(self) -> bool:
        return all(
            r == 0.0 for t in self.times if t < self.first_collision for r in self.residual[t].values()
        )

    @property
    def breakdown_detected(self) -> bool:
        return any(self.overlap[t] for t in self.times)

    def to_dict(self) -> dict:
        return {
            "speeds": list(self.speeds),
            "first_collision": self.first_collision if math.isfinite(self.first_collision) else None,
            "times": [
                {
                    "t": t,
                    "residual": {str(k): r for k, r in sorted(self.residual[t].items())},
                    "overlap": [[a, b] for a, b in self.overlap[t]],
                }
                for t in self.times
            ],
            "clean_before_collision": self.clean_before_collision(),
            "breakdown_detected": self.breakdown_detected,
        }


def verify_transport(solution: FrontSolution, times: Sequence[float]) -> TransportCheck:
    flux = solution.flux
    init = solution.profile
    M = flux.M
    speeds = flux.slopes
    first = solution.first_event_time
    if any(u > v + 1 for _, u, v in init.jumps):
        first = 0.0
    residual, mismatch, overlap = {}, {}, {}
    for t in times:
        t = float(t)
        sl = solution.slice(t)
        residual[t], mismatch[t] = {}, {}
        transported = {}
        for k in range(1, M):
            tr = _indicator_intervals(init, k, speeds[k - 1] * t)
            ex = _indicator_intervals(sl, k)
            diff = sorted(_difference(tr, ex) + _difference(ex, tr))
            transported[k] = tr
            mismatch[t][k] = diff
            residual[t][k] = _measure(diff)
        ov = []
        for k in range(1, M - 1):
            ov += _difference(transported[k + 1], transported[k])
        overlap[t] = _merge(sorted(ov))
    return TransportCheck(tuple(speeds), first, [float(t) for t in times], residual, mismatch, overlap)


def _merge(intervals):
    out = []
    for a, b in intervals:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out
