"""Command-line front end.

Usage::

    polyflux --config run.json --command solve --out results/

A config is one JSON object. Numbers may be written as JSON numbers or as
strings holding a decimal or an integer ratio such as ``"9/4"``. Profile
pieces are given as state *values*, not indices. See ``README.md`` for the
full schema and the files each command writes.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import re
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import records
from .errors import IoError, PolyfluxError, SchemaError, ValidationError
from .flux import PolygonalFlux, build_flux
from .fronttrack import FrontSolution, solve
from .hierarchy import compare_interaction_sets, ledger_verify, seeded_bumps, verify_transport
from .hopflax import HopfLax
from .profile import KINDS, RandomProfileModel, make_profile, sample, state_indices
from .stats import (
    EnsembleSpec,
    check_compatibility,
    event_rows,
    pair_rows,
    point2_rows,
    point_rows,
    run_ensemble,
    shock_rows,
)

__all__ = ["RunConfig", "parse_config", "run", "emit_report", "main", "COMMANDS"]

COMMANDS = ("solve", "oracle", "crosscheck", "ensemble", "verify-h1", "verify-h2", "report")

_TOP_KEYS = {
    "states",
    "flux_values",
    "profile",
    "horizon",
    "times",
    "x_grid",
    "box_edges",
    "coincidence_widths",
    "n",
    "max_order",
    "workers",
    "queries",
    "bumps",
    "expect_breakdown",
}
_PROFILE_KEYS = {"kind", "breakpoints", "pieces", "lambda", "transition", "weights", "spacing", "window", "seed"}

# default sizes when the config and the flags are silent
_DEFAULT_N = {"crosscheck": 1000, "ensemble": 1000, "verify-h1": 100, "verify-h2": 1000, "report": 1000}


@dataclass(frozen=True)
class RunConfig:
    flux: PolygonalFlux
    model: RandomProfileModel
    horizon: float | None = None
    times: tuple[float, ...] = ()
    x_grid: tuple[float, ...] = ()
    box_edges: tuple[float, ...] | None = None
    coincidence_widths: tuple[float, ...] = ()
    n: int | None = None
    max_order: int = 1
    workers: int = 1
    queries: str | None = None
    bumps: int = 10
    expect_breakdown: bool = False
    source: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def seed(self) -> int:
        return self.model.seed

    @property
    def deterministic(self) -> bool:
        return self.model.kind == "deterministic"

    def window(self) -> tuple[float, float]:
        if self.model.window is not None:
            return tuple(self.model.window)
        w = self.model.profile.window()
        return w if w is not None else (-1.0, 1.0)

    def size(self, command: str) -> int:
        if self.deterministic:
            return 1
        return self.n if self.n is not None else _DEFAULT_N.get(command, 1)

    def dumps(self) -> str:
        """Canonical serialized form: sorted keys, parsed numbers as doubles."""
        return json.dumps(self.source, sort_keys=True, separators=(",", ":"))


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


class _Reader:
    """Typed field access that reports the field path (and line) on failure."""

    def __init__(self, text: str):
        self.text = text

    def fail(self, path: str, msg: str, cls=SchemaError):
        line = _line_of(self.text, path.split(".")[-1].split("[")[0])
        where = f"{path} (line {line})" if line else path
        raise cls(f"{where}: {msg}")

    def number(self, value, path: str, allow_inf: bool = False) -> float:
        if isinstance(value, bool):
            self.fail(path, "expected a number")
        if isinstance(value, (int, float)):
            out = float(value)
        elif isinstance(value, str):
            s = value.strip()
            if allow_inf and s.lower() in ("inf", "+inf", "infinity"):
                return math.inf
            try:
                out = float(Fraction(s))
            except (ValueError, ZeroDivisionError):
                self.fail(path, f"cannot parse {value!r} as a decimal or p/q ratio")
        else:
            self.fail(path, f"expected a number, got {type(value).__name__}")
        if not math.isfinite(out):
            self.fail(path, "must be finite")
        return out

    def numbers(self, value, path: str) -> list[float]:
        if not isinstance(value, list):
            self.fail(path, "expected a list")
        return [self.number(v, f"{path}[{i}]") for i, v in enumerate(value)]

    def integer(self, value, path: str, lo: int | None = None) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, "expected an integer")
        if lo is not None and value < lo:
            self.fail(path, f"must be at least {lo}")
        return value

    def grid(self, value, path: str) -> list[float]:
        if isinstance(value, dict):
            extra = set(value) - {"start", "stop", "num"}
            if extra or len(value) != 3:
                self.fail(path, "grid objects need exactly start, stop, num")
            a, b = self.number(value["start"], f"{path}.start"), self.number(value["stop"], f"{path}.stop")
            n = self.integer(value["num"], f"{path}.num", 2)
            return [float(x) for x in np.linspace(a, b, n)]
        return self.numbers(value, path)


def parse_config(text: str, base_dir: str | Path | None = None) -> RunConfig:
    """Parse and fully validate a config; raises on the first problem found."""
    if not text.strip():
        raise SchemaError("config is empty")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("config must be a JSON object")
    r = _Reader(text)
    for key in sorted(set(raw) - _TOP_KEYS):
        r.fail(key, "unknown key")
    for key in ("states", "flux_values", "profile"):
        if key not in raw:
            raise SchemaError(f"{key}: required key missing")

    states = r.numbers(raw["states"], "states")
    values = r.numbers(raw["flux_values"], "flux_values")
    try:
        flux = build_flux(states, values)
    except ValidationError as exc:
        r.fail("flux_values", str(exc), type(exc))

    prof = raw["profile"]
    if not isinstance(prof, dict):
        r.fail("profile", "expected an object")
    for key in sorted(set(prof) - _PROFILE_KEYS):
        r.fail(f"profile.{key}", "unknown key")
    kind = prof.get("kind", "deterministic")
    if kind not in KINDS:
        r.fail("profile.kind", f"must be one of {', '.join(KINDS)}")
    seed = r.integer(prof.get("seed", 0), "profile.seed", 0)
    src_profile: dict = {"kind": kind, "seed": seed}
    opts: dict = {}
    if kind == "deterministic":
        bps = r.numbers(prof.get("breakpoints", []), "profile.breakpoints")
        if "pieces" not in prof:
            r.fail("profile.pieces", "required for a deterministic profile")
        vals = r.numbers(prof["pieces"], "profile.pieces")
        try:
            profile = make_profile(bps, state_indices(flux, vals), flux)
        except ValidationError as exc:
            r.fail("profile.pieces", str(exc), type(exc))
        opts["profile"] = profile
        src_profile.update(breakpoints=bps, pieces=vals)
    else:
        if "window" not in prof:
            r.fail("profile.window", f"required for kind {kind}")
        win = r.numbers(prof["window"], "profile.window")
        if len(win) != 2:
            r.fail("profile.window", "expected [a, b]")
        opts["window"] = tuple(win)
        src_profile["window"] = win
        if "weights" in prof:
            opts["weights"] = tuple(r.numbers(prof["weights"], "profile.weights"))
            src_profile["weights"] = list(opts["weights"])
        if "spacing" in prof:
            opts["spacing"] = r.number(prof["spacing"], "profile.spacing")
            src_profile["spacing"] = opts["spacing"]
        if "lambda" in prof:
            opts["lam"] = r.number(prof["lambda"], "profile.lambda")
            src_profile["lambda"] = opts["lam"]
        if "transition" in prof:
            rows = prof["transition"]
            if not isinstance(rows, list):
                r.fail("profile.transition", "expected a list of rows")
            opts["transition"] = tuple(
                tuple(r.numbers(row, f"profile.transition[{i}]")) for i, row in enumerate(rows)
            )
            src_profile["transition"] = [list(row) for row in opts["transition"]]
    try:
        model = RandomProfileModel(kind, flux, seed=seed, **opts)
    except ValidationError as exc:
        r.fail("profile", str(exc), type(exc))

    cfg: dict = {"flux": flux, "model": model}
    src: dict = {"states": list(flux.states), "flux_values": list(flux.values), "profile": src_profile}
    if "horizon" in raw:
        h = r.number(raw["horizon"], "horizon", allow_inf=True)
        if not h > 0:
            r.fail("horizon", "must be positive")
        cfg["horizon"] = h
    if "times" in raw:
        ts = r.numbers(raw["times"], "times")
        if any(t < 0 for t in ts):
            r.fail("times", "times must be nonnegative")
        cfg["times"] = tuple(ts)
    if "x_grid" in raw:
        cfg["x_grid"] = tuple(r.grid(raw["x_grid"], "x_grid"))
        if not cfg["x_grid"]:
            r.fail("x_grid", "must not be empty")
    if "box_edges" in raw:
        edges = r.grid(raw["box_edges"], "box_edges")
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            r.fail("box_edges", "need at least two strictly increasing edges")
        cfg["box_edges"] = tuple(edges)
    if "coincidence_widths" in raw:
        ws = r.numbers(raw["coincidence_widths"], "coincidence_widths")
        if any(w <= 0 for w in ws):
            r.fail("coincidence_widths", "widths must be positive")
        cfg["coincidence_widths"] = tuple(ws)
    if "n" in raw:
        cfg["n"] = r.integer(raw["n"], "n", 1)
    if "max_order" in raw:
        cfg["max_order"] = r.integer(raw["max_order"], "max_order", 1)
        if cfg["max_order"] > 2:
            r.fail("max_order", "only orders 1 and 2 are estimated")
    if "workers" in raw:
        cfg["workers"] = r.integer(raw["workers"], "workers", 1)
    if "bumps" in raw:
        cfg["bumps"] = r.integer(raw["bumps"], "bumps", 1)
    if "expect_breakdown" in raw:
        if not isinstance(raw["expect_breakdown"], bool):
            r.fail("expect_breakdown", "expected true or false")
        cfg["expect_breakdown"] = raw["expect_breakdown"]
    if "queries" in raw:
        if not isinstance(raw["queries"], str):
            r.fail("queries", "expected a file path")
        q = Path(raw["queries"])
        if base_dir is not None and not q.is_absolute():
            q = Path(base_dir) / q
        cfg["queries"] = str(q)
    for key in ("horizon", "times", "x_grid", "box_edges", "coincidence_widths", "n", "max_order", "workers", "bumps", "expect_breakdown"):
        if key in cfg:
            v = cfg[key]
            src[key] = list(v) if isinstance(v, tuple) else v
    if "horizon" in src and math.isinf(src["horizon"]):
        src["horizon"] = "inf"
    if "queries" in raw:
        src["queries"] = raw["queries"]
    return RunConfig(source=src, **cfg)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)


def with_overrides(cfg: RunConfig, seed=None, n=None, horizon=None, expect_breakdown=False) -> RunConfig:
    if seed is not None:
        src = copy.deepcopy(cfg.source)
        src["profile"]["seed"] = int(seed)
        cfg = replace(cfg, model=replace(cfg.model, seed=int(seed), _cache={}), source=src)
    if n is not None:
        if n < 1:
            raise ValidationError("--n must be at least 1")
        cfg = replace(cfg, n=int(n))
    if horizon is not None:
        if not horizon > 0:
            raise ValidationError("--horizon must be positive")
        cfg = replace(cfg, horizon=float(horizon))
    if expect_breakdown:
        cfg = replace(cfg, expect_breakdown=True)
    return cfg


# ---------------------------------------------------------------- commands


def _horizon(cfg: RunConfig) -> float:
    return cfg.horizon if cfg.horizon is not None else math.inf


def _times(cfg: RunConfig) -> tuple[float, ...]:
    if cfg.times:
        return cfg.times
    h = _horizon(cfg)
    return (h if math.isfinite(h) else 1.0,)


def _plot_time(cfg: RunConfig, sol: FrontSolution) -> float:
    """Finite end time for polylines, sampling and the ledger."""
    h = _horizon(cfg)
    if math.isfinite(h):
        return h
    last = max((e.t for e in sol.events), default=0.0)
    return max(max(_times(cfg), default=0.0), 2.0 * last, 1.0)


def _x_grid(cfg: RunConfig) -> tuple[float, ...]:
    if cfg.x_grid:
        return cfg.x_grid
    a, b = cfg.window()
    return tuple(float(x) for x in np.linspace(a, b, 41))


def _solutions(cfg: RunConfig, command: str, T: float):
    for i in range(cfg.size(command)):
        yield solve(cfg.flux, sample(cfg.model, i), T)


def _cmd_solve(cfg: RunConfig, out: Path) -> dict:
    sol = solve(cfg.flux, sample(cfg.model, 0), _horizon(cfg))
    records.write_jsonl(out / "events.jsonl", sol.event_records())
    records.write_csv(out / "trajectories.csv", records.TRAJECTORY_HEADER, sol.trajectory_rows())
    return {"ok": True, "fronts": len(sol.fronts), "events": len(sol.events)}


def _oracle_points(cfg: RunConfig) -> list[tuple[float, float]]:
    if cfg.queries:
        rows = records.read_csv(Path(cfg.queries))
        pts = []
        for i, row in enumerate(rows):
            try:
                pts.append((float(Fraction(row["x"])), float(Fraction(row["t"]))))
            except (KeyError, ValueError, ZeroDivisionError, TypeError) as exc:
                raise SchemaError(f"{cfg.queries} row {i + 2}: need numeric x and t columns") from exc
        return pts
    return [(x, t) for t in _times(cfg) if t > 0 for x in _x_grid(cfg)]


def _cmd_oracle(cfg: RunConfig, out: Path) -> dict:
    hl = HopfLax(cfg.flux, sample(cfg.model, 0))
    s = cfg.flux.states
    rows = [(x, t, s[hl.query(x, t)]) for x, t in _oracle_points(cfg)]
    records.write_csv(out / "oracle.csv", ("x", "t", "state"), rows)
    return {"ok": True, "queries": len(rows)}


def crosscheck_points(sol: FrontSolution, n: int, seed: int, T: float) -> tuple[np.ndarray, np.ndarray]:
    """``n`` seeded points in ``(0, T]`` times the window widened by the largest travel distance."""
    prof = sol.profile
    w = prof.window() or (-1.0, 1.0)
    margin = sol.flux.lipschitz * T + 1.0
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0, 1)))
    xs = rng.uniform(w[0] - margin, w[1] + margin, n)
    ts = T * (1.0 - rng.random(n))
    return xs, ts


def crosscheck(sol: FrontSolution, xs, ts, band: float = 1e-9) -> dict:
    hl = HopfLax(sol.flux, sol.profile)
    mismatches, skipped = [], 0
    for x, t in zip(np.asarray(xs, float).tolist(), np.asarray(ts, float).tolist()):
        if sol.distance_to_front(x, t) <= band:
            skipped += 1
            continue
        a, b = sol.query(x, t), hl.query(x, t)
        if a != b:
            mismatches.append({"x": x, "t": t, "fronttrack": sol.flux.states[a], "hopflax": sol.flux.states[b]})
    return {"points": len(xs), "skipped": skipped, "mismatches": mismatches}


def _cmd_crosscheck(cfg: RunConfig, out: Path) -> dict:
    n = cfg.n if cfg.n is not None else _DEFAULT_N["crosscheck"]
    sol = solve(cfg.flux, sample(cfg.model, 0), _horizon(cfg))
    T = _plot_time(cfg, sol)
    xs, ts = crosscheck_points(sol, n, cfg.seed, T)
    res = crosscheck(sol, xs, ts)
    res["ok"] = not res["mismatches"]
    res["t_max"] = T
    records.write_json(out / "crosscheck.json", res)
    return {"ok": res["ok"], "points": res["points"], "skipped": res["skipped"], "mismatches": len(res["mismatches"])}


def _ensemble_spec(cfg: RunConfig, command: str) -> EnsembleSpec:
    return EnsembleSpec(
        cfg.model,
        cfg.size(command),
        _times(cfg),
        _x_grid(cfg),
        max_order=cfg.max_order,
        box_edges=cfg.box_edges,
        coincidence_widths=cfg.coincidence_widths,
        horizon=cfg.horizon if cfg.horizon is not None and math.isfinite(cfg.horizon) else None,
    )


def _cmd_ensemble(cfg: RunConfig, out: Path) -> dict:
    spec = _ensemble_spec(cfg, "ensemble")
    res = run_ensemble(spec, workers=cfg.workers)
    flux = cfg.flux
    records.write_csv(out / "p1.csv", ("t", "x", "state", "count", "N"), point_rows(res.point, flux))
    records.write_csv(out / "shocks.csv", ("t", "box_lo", "box_hi", "u", "v", "count", "N"), shock_rows(res.shock, flux))
    records.write_csv(out / "event_tallies.csv", ("u", "w", "v", "count", "N"), event_rows(res.shock, flux))
    records.write_jsonl(out / "events.jsonl", res.archive)
    summary = {"ok": True, "N": spec.N, "events": len(res.archive)}
    if spec.max_order == 2:
        records.write_csv(out / "p2.csv", ("t", "x", "y", "state_x", "state_y", "count", "N"), point2_rows(res.point, flux))
        records.write_csv(
            out / "pairs.csv",
            ("t", "box1_lo", "box1_hi", "box2_lo", "box2_hi", "u1", "v1", "u2", "v2", "count", "N"),
            pair_rows(res.shock, flux),
        )
        comp = check_compatibility(res.shock)
        records.write_json(
            out / "compatibility.json",
            {
                "marginal_max_abs": comp.marginal_max_abs,
                "marginal_ok": comp.marginal_ok,
                "widths": list(comp.widths),
                "coincidence": [{"t": t, "mass": m} for t, m in comp.coincidence.items()],
                "coincidence_ok": comp.coincidence_ok,
            },
        )
        summary["ok"] = comp.ok
        summary["marginal_max_abs"] = comp.marginal_max_abs
    return summary


def _overlap_rows(checks) -> list[tuple]:
    rows = []
    for r, chk in checks:
        for t in chk.times:
            for j, (a, b) in enumerate(chk.overlap[t]):
                rows.append((r, t, j, a, b))
    return rows


def overlap_polygons(times: Sequence[float], overlap: dict) -> list[tuple]:
    """Vertices ``(polygon, vertex, t, x)`` of the overlap region in the x-t plane.

    Component ``j`` of the overlap at consecutive sampled times is joined into
    one polygon: left endpoints upward in ``t``, then right endpoints downward.
    """
    rows, pid = [], 0
    width = max((len(overlap[t]) for t in times), default=0)
    for j in range(width):
        run: list[float] = []
        for t in list(times) + [None]:
            if t is not None and len(overlap[t]) > j:
                run.append(t)
                continue
            if run:
                verts = [(s, overlap[s][j][0]) for s in run] + [(s, overlap[s][j][1]) for s in reversed(run)]
                rows += [(pid, k, s, x) for k, (s, x) in enumerate(verts)]
                pid += 1
                run = []
    return rows


def _cmd_verify_h1(cfg: RunConfig, out: Path) -> dict:
    times = _times(cfg)
    checks = []
    for r, sol in enumerate(_solutions(cfg, "verify-h1", _horizon(cfg))):
        checks.append((r, verify_transport(sol, times)))
    clean = all(c.clean_before_collision() for _, c in checks)
    broke = [r for r, c in checks if c.breakdown_detected]
    exact = all(v == 0.0 for _, c in checks for t in c.times for v in c.residual[t].values())
    if cfg.expect_breakdown:
        ok = clean and len(broke) > 0
    else:
        ok = clean and exact and not broke
    records.write_json(
        out / "transport.json",
        {
            "expect_breakdown": cfg.expect_breakdown,
            "ok": ok,
            "checks": [dict(realization=r, **c.to_dict()) for r, c in checks],
        },
    )
    records.write_csv(out / "overlap.csv", ("realization", "t", "component", "x_lo", "x_hi"), _overlap_rows(checks))
    r0, c0 = checks[0]
    records.write_csv(out / "overlap_polygon.csv", ("polygon", "vertex", "t", "x"), overlap_polygons(c0.times, c0.overlap))
    return {
        "ok": ok,
        "realizations": len(checks),
        "clean_before_collision": clean,
        "breakdown_realizations": len(broke),
        "expect_breakdown": cfg.expect_breakdown,
    }


def _cmd_verify_h2(cfg: RunConfig, out: Path) -> dict:
    sols = list(_solutions(cfg, "verify-h2", _horizon(cfg)))
    T = _plot_time(cfg, sols[0])
    a, b = cfg.window()
    bumps = seeded_bumps(cfg.seed, cfg.bumps, (a - 1.0, b + 1.0), (0.0, T))
    rep = ledger_verify(sols, bumps)
    sets = compare_interaction_sets(cfg.flux)
    ok = rep.ok() and sets.ok
    records.write_json(
        out / "ledger.json",
        {
            **rep.to_dict(cfg.flux),
            "bumps": [[p.xc, p.tc, p.wx, p.wt] for p in bumps],
            "role_violations": sum(1 for v in rep.violations if v[1] == "role"),
        },
    )
    records.write_json(
        out / "interaction_sets.json",
        {
            "checked": sets.checked,
            "genuine": [[n, list(s), w] for n, s, w in sets.genuine],
            "vacuous": [[n, list(s), w] for n, s, w in sets.vacuous],
            "indicator_mismatch": [list(s) for s in sets.indicator_mismatch],
            "summary": sets.summary(),
            "ok": sets.ok,
        },
    )
    return {
        "ok": ok,
        "realizations": rep.realizations,
        "events": rep.events,
        "violations": len(rep.violations),
        "balanced": rep.balanced,
        "max_residual": rep.max_residual,
        "sets": sets.summary(),
    }


def emit_report(sol: FrontSolution, out: Path, T: float, times: Sequence[float], x_grid: Sequence[float]) -> list[Path]:
    """Polylines, event points, the exact CDF surface and the overlap region as CSV."""
    s = sol.flux.states
    poly = []
    for f in sol.fronts:
        t1 = f.t_death if f.t_death is not None else max(T, f.t_birth)
        poly.append((f.id, s[f.u], s[f.v], f.t_birth, f.x_birth, t1, f.position(t1), f.speed))
    ev = [
        (e.t, e.x, s[e.left_species[0]], s[e.middle], s[e.right_species[1]], -1 if e.annihilation else e.created)
        for e in sol.events
    ]
    cdf = []
    for t in times:
        if t > sol.horizon:
            continue
        states = sol.query_many(np.asarray(x_grid, float), t)
        for x, k in zip(x_grid, states.tolist()):
            for j in range(1, sol.flux.M):
                cdf.append((t, x, s[j], int(k >= j)))
    chk = verify_transport(sol, [t for t in times if t <= sol.horizon])
    return [
        records.write_csv(
            out / "polylines.csv", ("front_id", "u", "v", "t_start", "x_start", "t_end", "x_end", "speed"), poly
        ),
        records.write_csv(out / "events.csv", ("t", "x", "left", "middle", "right", "created_id"), ev),
        records.write_csv(out / "cdf.csv", ("t", "x", "threshold", "F"), cdf),
        records.write_csv(out / "overlap.csv", ("realization", "t", "component", "x_lo", "x_hi"), _overlap_rows([(0, chk)])),
        records.write_csv(out / "overlap_polygon.csv", ("polygon", "vertex", "t", "x"), overlap_polygons(chk.times, chk.overlap)),
    ]


def _cmd_report(cfg: RunConfig, out: Path) -> dict:
    sol = solve(cfg.flux, sample(cfg.model, 0), _horizon(cfg))
    T = _plot_time(cfg, sol)
    paths = emit_report(sol, out, T, _times(cfg), _x_grid(cfg))
    if not cfg.deterministic:
        # ensemble tail probabilities P(u >= threshold)
        spec = _ensemble_spec(cfg, "report")
        res = run_ensemble(spec, workers=cfg.workers)
        c = res.point.counts1
        tail = np.cumsum(c[..., ::-1], axis=-1)[..., ::-1]
        rows = [
            (t, x, cfg.flux.states[k], int(tail[ti, xi, k]), res.point.N)
            for ti, t in enumerate(spec.times)
            for xi, x in enumerate(spec.x_grid)
            for k in range(1, cfg.flux.M)
        ]
        paths.append(records.write_csv(out / "cdf_ensemble.csv", ("t", "x", "threshold", "count", "N"), rows))
    return {"ok": True, "files": [p.name for p in paths], "t_end": T}


_HANDLERS = {
    "solve": _cmd_solve,
    "oracle": _cmd_oracle,
    "crosscheck": _cmd_crosscheck,
    "ensemble": _cmd_ensemble,
    "verify-h1": _cmd_verify_h1,
    "verify-h2": _cmd_verify_h2,
    "report": _cmd_report,
}


def run(command: str, cfg: RunConfig, out: str | Path) -> tuple[int, dict]:
    """Run one command; returns ``(exit status, summary)``. Status 0 iff all checks pass."""
    if command not in _HANDLERS:
        raise SchemaError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    out = Path(out)
    summary = _HANDLERS[command](cfg, out)
    summary = {"command": command, **summary}
    records.write_json(out / "summary.json", summary)
    return (0 if summary["ok"] else 1), summary


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyflux", description="Front tracking for polygonal-flux conservation laws.")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=int, help="override profile.seed")
    p.add_argument("--n", type=int, help="realizations or sample points")
    p.add_argument("--horizon", type=float, help="final time")
    p.add_argument("--workers", type=int, help="worker processes for ensembles")
    p.add_argument("--expect-breakdown", action="store_true", help="verify-h1: post-collision breakdown is a pass")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = with_overrides(cfg, args.seed, args.n, args.horizon, args.expect_breakdown)
        if args.workers is not None:
            if args.workers < 1:
                raise ValidationError("--workers must be at least 1")
            cfg = replace(cfg, workers=args.workers)
        status, summary = run(args.command, cfg, args.out)
    except PolyfluxError as exc:
        sys.stderr.write(records.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    lines = [f"{k}: {v}" for k, v in summary.items()]
    print("\n".join(lines))
    print("PASS" if status == 0 else "FAIL")
    return status


if __name__ == "__main__":
    sys.exit(main())
