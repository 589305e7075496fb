"""Exact event-driven front tracking.

Every jump of the initial profile becomes a front moving at its
Rankine-Hugoniot speed. When a front catches its right neighbour the two
merge into one front carrying the outer states; nothing ever splits, because
admissible up-jumps join neighbouring states and move at a single slope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._config import TOL
from .errors import InadmissibleMergeInternal, OutOfHorizon, TripleCollision
from .flux import PolygonalFlux, rh_speed
from .profile import Profile, collapse

__all__ = ["Front", "CollisionEvent", "FrontSolution", "solve", "next_collision"]


@dataclass
class Front:
    id: int
    u: int
    v: int
    speed: float
    t_birth: float
    x_birth: float
    t_death: float | None = None
    rank: int = 0  # left-to-right order among alive fronts, inherited from the left parent

    @property
    def species(self) -> tuple[int, int]:
        return self.u, self.v

    def position(self, t: float) -> float:
        return self.x_birth + self.speed * (t - self.t_birth)

    def alive(self, t: float) -> bool:
        return self.t_birth <= t and (self.t_death is None or t < self.t_death)

    @property
    def x_death(self) -> float | None:
        return None if self.t_death is None else self.position(self.t_death)


@dataclass(frozen=True)
class CollisionEvent:
    t: float
    x: float
    left: int
    right: int
    created: int
    left_species: tuple[int, int]
    right_species: tuple[int, int]
    created_species: tuple[int, int] | None
    triple: bool = False

    @property
    def middle(self) -> int:
        return self.left_species[1]

    @property
    def annihilation(self) -> bool:
        """Fronts ``(u, w)`` and ``(w, u)`` met and cancelled; only possible in a triple collision."""
        return self.created_species is None


def meeting_time(left: Front, right: Front) -> float:
    """Time at which two fronts occupy the same position (``inf`` if never)."""
    dc = left.speed - right.speed
    if dc <= TOL:
        return math.inf
    return (right.x_birth - left.x_birth - right.speed * right.t_birth + left.speed * left.t_birth) / dc


def next_collision(alive: list[Front], t_now: float = 0.0) -> tuple[float, int] | None:
    """Earliest collision among adjacent pairs of ``alive`` (ordered left to right).

    Returns ``(time, i)`` where the pair is ``alive[i], alive[i+1]``, or None
    when no pair can ever meet. Times within ``TOL`` of each other are ties,
    broken by leftmost meeting position and then lowest left-front id. A pair
    already sitting at one point (the aftermath of a triple collision) meets
    at ``t_now``.
    """
    cands = []
    for i in range(len(alive) - 1):
        left, right = alive[i], alive[i + 1]
        tm = meeting_time(left, right)
        if math.isfinite(tm):
            tm = max(tm, t_now)
            cands.append((tm, left.position(tm), left.id, i))
        elif left.u == right.v:
            # (u,w) and (w,u) share a speed; they only coincide after a triple collision
            x = left.position(t_now)
            if abs(right.position(t_now) - x) <= TOL * max(1.0, abs(x)):
                cands.append((t_now, x, left.id, i))
    if not cands:
        return None
    t_min = min(c[0] for c in cands)
    tied = [c for c in cands if c[0] - t_min <= TOL]
    tm, _, _, i = min(tied, key=lambda c: (c[1], c[2]))
    return tm, i


@dataclass
class FrontSolution:
    flux: PolygonalFlux
    profile: Profile
    fronts: list[Front]
    events: list[CollisionEvent]
    horizon: float = math.inf
    _arrays: dict = field(default_factory=dict, repr=False)

    def _check_time(self, t: float):
        if not (0.0 <= t <= self.horizon):
            raise OutOfHorizon(f"t={t} outside [0, {self.horizon}]")

    def arrays(self) -> dict:
        if not self._arrays:
            fr = self.fronts
            self._arrays.update(
                tb=np.array([f.t_birth for f in fr]),
                td=np.array([math.inf if f.t_death is None else f.t_death for f in fr]),
                xb=np.array([f.x_birth for f in fr]),
                c=np.array([f.speed for f in fr]),
                u=np.array([f.u for f in fr], dtype=int),
                v=np.array([f.v for f in fr], dtype=int),
                rank=np.array([f.rank for f in fr], dtype=int),
            )
        return self._arrays

    def alive_at(self, t: float) -> list[Front]:
        """Fronts alive at ``t`` ordered left to right.

        Fronts never cross, so the order is structural (by rank) rather than
        by computed position, which can invert by rounding when two fronts
        are about to meet.
        """
        return sorted((f for f in self.fronts if f.alive(t)), key=lambda f: f.rank)

    def positions(self, t: float) -> np.ndarray:
        return np.array([f.position(t) for f in self.alive_at(t)])

    def slice(self, t: float) -> Profile:
        self._check_time(t)
        alive = self.alive_at(t)
        return collapse(
            [f.position(t) for f in alive],
            [f.u for f in alive],
            [f.v for f in alive],
            self.flux,
            self.profile.pieces[0],
        )

    def query(self, x: float, t: float) -> int:
        self._check_time(t)
        return self._query(x, t, left=False)

    def query_left(self, x: float, t: float) -> int:
        self._check_time(t)
        return self._query(x, t, left=True)

    def _query(self, x, t, left):
        a = self.arrays()
        mask = (a["tb"] <= t) & (t < a["td"])
        if not mask.any():
            return self.profile.pieces[0]
        key = np.argsort(a["rank"][mask], kind="stable")
        pos = (a["xb"][mask] + a["c"][mask] * (t - a["tb"][mask]))[key]
        # a rounding-level inversion counts as coincidence, as in slice()
        pos = np.maximum.accumulate(pos)
        v = a["v"][mask][key]
        n = np.searchsorted(pos, x, side="left" if left else "right")
        return self.profile.pieces[0] if n == 0 else int(v[n - 1])

    def query_many(self, xs, ts) -> np.ndarray:
        xs, ts = np.broadcast_arrays(np.asarray(xs, dtype=float), np.asarray(ts, dtype=float))
        for t in (ts.min(initial=0.0), ts.max(initial=0.0)):
            self._check_time(float(t))
        out = [self._query(x, t, False) for x, t in zip(xs.ravel().tolist(), ts.ravel().tolist())]
        return np.array(out, dtype=int).reshape(xs.shape)

    def distance_to_front(self, x: float, t: float) -> float:
        a = self.arrays()
        mask = (a["tb"] <= t) & (t <= a["td"])
        if not mask.any():
            return math.inf
        pos = a["xb"][mask] + a["c"][mask] * (t - a["tb"][mask])
        return float(np.min(np.abs(pos - x)))

    @property
    def first_event_time(self) -> float:
        return self.events[0].t if self.events else math.inf

    def event_records(self) -> list[dict]:
        s = self.flux.states
        return [
            {
                "t": e.t,
                "x": e.x,
                "left": [s[e.left_species[0]], s[e.left_species[1]]],
                "right": [s[e.right_species[0]], s[e.right_species[1]]],
                "created": None if e.annihilation else [s[e.created_species[0]], s[e.created_species[1]]],
                **({"triple": True} if e.triple else {}),
            }
            for e in self.events
        ]

    def trajectory_rows(self) -> list[tuple]:
        s = self.flux.states
        return [
            (f.id, s[f.u], s[f.v], f.t_birth, f.x_birth, f.speed, "" if f.t_death is None else f.t_death)
            for f in self.fronts
        ]


def solve(flux: PolygonalFlux, profile: Profile, T: float = math.inf, strict_triples: bool = False) -> FrontSolution:
    """Track all fronts of ``profile`` up to horizon ``T`` (``inf``: until quiescent)."""
    if not T > 0:
        raise OutOfHorizon(f"horizon must be positive, got {T}")
    fronts = [
        Front(j, u, v, rh_speed(flux, u, v), 0.0, x, rank=j)
        for j, (x, u, v) in enumerate(profile.jumps)
    ]
    alive = list(fronts)
    events: list[CollisionEvent] = []
    t = 0.0
    while True:
        nxt = next_collision(alive, t)
        if nxt is None or nxt[0] > T:
            break
        t, i = nxt
        left, right = alive[i], alive[i + 1]
        u, v = left.u, right.v
        if u == v:
            x = left.position(t)
            if strict_triples:
                raise TripleCollision(f"fronts {left.species} and {right.species} cancel at x={x}, t={t}")
            left.t_death = right.t_death = t
            alive[i:i + 2] = []
            events.append(CollisionEvent(t, x, left.id, right.id, -1, left.species, right.species, None, True))
            continue
        if v > u + 1:
            raise InadmissibleMergeInternal(f"merge of {left.species} and {right.species} gives ({u},{v})")
        x = left.position(t)
        triple = any(
            abs(alive[j].position(t) - x) <= TOL * max(1.0, abs(x))
            for j in (i - 1, i + 2)
            if 0 <= j < len(alive)
        )
        if events and abs(events[-1].t - t) <= TOL and abs(events[-1].x - x) <= TOL * max(1.0, abs(x)):
            triple = True
        if triple and strict_triples:
            raise TripleCollision(f"three fronts meet at x={x}, t={t}")
        new = Front(len(fronts), u, v, rh_speed(flux, u, v), t, x, rank=left.rank)
        left.t_death = right.t_death = t
        fronts.append(new)
        alive[i:i + 2] = [new]
        events.append(CollisionEvent(t, x, left.id, right.id, new.id, left.species, right.species, new.species, triple))
    return FrontSolution(flux, profile, fronts, events, T)
