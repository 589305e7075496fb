import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyflux import build_flux, make_profile, solve
from polyflux.errors import EmptyWindow, InadmissibleSpecies, RoleViolation
from polyflux.fronttrack import CollisionEvent
from polyflux.hierarchy import (
    Bump,
    brute_force_sets,
    classify_event,
    compare_interaction_sets,
    interaction_sets,
    ledger_verify,
    seeded_bumps,
    transport_integral,
    verify_transport,
)

from instances import random_flux, random_instance


def _sets(M, u, v):
    s = interaction_sets(M, u, v)
    return set(s.w1), set(s.w2), set(s.w3)


def test_three_state_sets():
    # indices are 0-based: species (3,1) is (2,0)
    assert _sets(3, 2, 0) == ({1}, {1}, {1})
    assert _sets(3, 0, 1) == (set(), set(), {2})
    assert _sets(3, 1, 2) == (set(), {0}, set())


def test_three_state_brute_force(ex1_flux):
    for (u, v), want in {(2, 0): ({1}, {1}, {1}), (0, 1): (set(), set(), {2}), (1, 2): (set(), {0}, set())}.items():
        b = brute_force_sets(ex1_flux, u, v)
        assert (set(b.w1), set(b.w2), set(b.w3)) == want


def test_inadmissible_species():
    with pytest.raises(InadmissibleSpecies):
        interaction_sets(3, 0, 2)
    with pytest.raises(InadmissibleSpecies):
        interaction_sets(3, 1, 1)
    with pytest.raises(InadmissibleSpecies):
        interaction_sets(3, 3, 0)


def test_sets_exclude_species_and_clamp():
    for M in range(2, 9):
        for u in range(M):
            for v in range(min(u + 2, M)):
                if u == v:
                    continue
                for s in _sets(M, u, v):
                    assert u not in s and v not in s
                    assert all(0 <= w < M for w in s)


@pytest.mark.parametrize("M", range(2, 9))
def test_sets_match_enumeration(M):
    flux = random_flux(np.random.default_rng(M), M)
    cmp = compare_interaction_sets(flux)
    assert cmp.checked == M * (M - 1) // 2 + (M - 1)
    assert cmp.genuine == []
    # formula-only W1 members are w < v-1, whose partner (w, v) skips a state
    for name, (u, v), w in cmp.vacuous:
        assert name == "w1" and w < v - 1
    # by hand: a down-jump (u, v) is created from any middle v-1 <= w <= u+1
    for u in range(M):
        for v in range(min(u + 2, M)):
            if u == v:
                continue
            want = set() if v == u + 1 else {w for w in range(max(v - 1, 0), min(u + 2, M)) if w not in (u, v)}
            assert set(brute_force_sets(flux, u, v).w1) == want
            # the n-point indicator 1{v=u+1} claims the opposite whenever a middle exists
            mismatch = (v == u + 1) or bool(want)
            assert ((u, v) in cmp.indicator_mismatch) == mismatch


def test_example_event_classification(ex1_flux, ex1_profile):
    e = solve(ex1_flux, ex1_profile).events[0]
    cl = classify_event(ex1_flux, e)
    assert cl.growth == ((2, 0), 1)
    assert cl.right_decay == ((2, 1), 0)
    assert cl.left_decay == ((1, 0), 2)
    assert cl.coefficient == 4.0


def _event(left, right, created):
    return CollisionEvent(1.0, 0.0, 0, 1, 2, left, right, created)


def test_four_state_event():
    flux = build_flux([1, 2, 3, 4], [0, 1, 3, 6])
    # (4,2) + (2,1) -> (4,1) in 0-based indices
    cl = classify_event(flux, _event((3, 1), (1, 0), (3, 0)))
    assert cl.growth == ((3, 0), 1)
    assert 1 in interaction_sets(4, 3, 0).w1
    assert cl.coefficient == pytest.approx(flux.speed(3, 1) - flux.speed(1, 0))


def test_role_violations(ex1_flux):
    with pytest.raises(RoleViolation):
        classify_event(ex1_flux, _event((0, 1), (1, 2), (0, 2)))
    with pytest.raises(RoleViolation):
        classify_event(ex1_flux, _event((2, 1), (0, 1), (2, 1)))
    with pytest.raises(RoleViolation):
        classify_event(ex1_flux, _event((2, 1), (1, 0), (2, 1)))
    with pytest.raises(RoleViolation):
        classify_event(ex1_flux, CollisionEvent(1.0, 0.0, 0, 1, -1, (1, 0), (0, 1), None, True))


def test_bump_support_and_derivatives():
    phi = Bump(1.0, 0.5, 0.4, 0.2)
    assert phi(1.4, 0.5) == 0.0 and phi(1.0, 0.71) == 0.0
    assert phi(1.0, 0.5) == pytest.approx(math.exp(-2))
    h = 1e-6
    for x, t in [(1.1, 0.45), (0.8, 0.6)]:
        assert phi.dx(x, t) == pytest.approx((phi(x + h, t) - phi(x - h, t)) / (2 * h), rel=1e-6)
        assert phi.dt(x, t) == pytest.approx((phi(x, t + h) - phi(x, t - h)) / (2 * h), rel=1e-6)


def test_transport_integral_telescopes():
    # the integrand is the derivative of phi along the line
    rng = np.random.default_rng(2)
    for phi in seeded_bumps(4, 10, (0.0, 4.0), (0.0, 1.0)):
        t0, t1 = rng.uniform(0, 0.5, 20), rng.uniform(0.5, 1.2, 20)
        x0, c = rng.uniform(-1, 5, 20), rng.uniform(-3, 3, 20)
        got = transport_integral(phi, t0, t1, x0, c)
        want = phi(x0 + c * (t1 - t0), t1) - phi(x0, t0)
        assert np.allclose(got, want, atol=1e-12)


def test_seeded_bumps_need_ranges():
    with pytest.raises(EmptyWindow):
        seeded_bumps(0, 3, (1.0, 1.0), (0.0, 1.0))


def test_seeded_bumps_reproducible():
    a = seeded_bumps(7, 10, (0.0, 1.0), (0.0, 2.0))
    assert a == seeded_bumps(7, 10, (0.0, 1.0), (0.0, 2.0))
    assert len(a) == 10 and all(0 <= b.xc <= 1 and 0 <= b.tc <= 2 for b in a)


def test_ledger_example(ex1_flux, ex1_profile):
    sol = solve(ex1_flux, ex1_profile, T=1.0)
    around = Bump(2.25, 0.25, 0.5, 0.2)
    before = Bump(1.6, 0.1, 0.5, 0.08)
    rep = ledger_verify(sol, [around, before])
    assert rep.ok() and rep.balanced
    assert rep.max_residual < 1e-12
    assert rep.births == {(2, 1): 1, (1, 0): 1}
    assert rep.creations == {(2, 0): 1}
    assert rep.survivors == {(2, 0): 1}
    assert len(rep.classifications) == 1
    d = rep.to_dict(ex1_flux)
    assert d["ok"] and {tuple(s["species"]) for s in d["species"]} == {(3.0, 2.0), (2.0, 1.0), (3.0, 1.0)}


def test_ledger_before_collision(ex1_flux, ex1_profile):
    # free streaming only: the trajectory side must vanish on its own
    sol = solve(ex1_flux, ex1_profile, T=0.2)
    rep = ledger_verify(sol, [Bump(1.6, 0.1, 0.5, 0.08)])
    assert rep.events == 0 and rep.max_residual < 1e-12


def test_ledger_infinite_horizon(ex1_flux, ex1_profile):
    rep = ledger_verify(solve(ex1_flux, ex1_profile), seeded_bumps(1, 10, (1.0, 4.0), (0.0, 1.0)))
    assert rep.ok()


def test_ledger_flags_annihilation():
    flux = build_flux([0, 1, 2, 3], [0, 0, 1, 3])
    sol = solve(flux, make_profile([-1.0, -0.5, 0.0], [1, 2, 0, 1], flux), T=2.0)
    rep = ledger_verify(sol, seeded_bumps(0, 3, (-1.0, 1.0), (0.0, 2.0)))
    assert rep.balanced
    assert [v[1] for v in rep.violations] == ["role"]
    assert not rep.ok()


def test_transport_example(ex1_flux, ex1_profile):
    sol = solve(ex1_flux, ex1_profile)
    chk = verify_transport(sol, [0.0, 0.1, 0.2, 0.5])
    assert chk.first_collision == 0.25
    for t in (0.0, 0.1, 0.2):
        assert all(r == 0.0 for r in chk.residual[t].values())
        assert chk.overlap[t] == []
    assert chk.overlap[0.5] == [(2.5, 3.5)]
    assert chk.clean_before_collision() and chk.breakdown_detected
    assert chk.residual[0.5][1] > 0


def test_transport_single_shock(ex1_flux):
    sol = solve(ex1_flux, make_profile([0.0], [2, 1], ex1_flux))
    chk = verify_transport(sol, np.linspace(0, 5, 11))
    assert all(r == 0.0 for t in chk.times for r in chk.residual[t].values())
    assert not chk.breakdown_detected


def test_transport_nonneighbour_jump(ex1_flux):
    # a (3,1) front moves at 3, not at the neighbour speeds 1 and 5
    sol = solve(ex1_flux, make_profile([0.0], [2, 0], ex1_flux))
    chk = verify_transport(sol, [0.0, 0.5])
    assert chk.first_collision == 0.0
    assert chk.residual[0.5][1] == pytest.approx(1.0) and chk.residual[0.5][2] == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ledger_random(seed):
    rng = np.random.default_rng(seed)
    flux, prof = random_instance(rng)
    sol = solve(flux, prof, T=2.0)
    w = prof.window() or (0.0, 0.0)
    rep = ledger_verify(sol, seeded_bumps(seed, 5, (w[0] - 1, w[1] + 1), (0.0, 2.0)))
    if not any(e.annihilation for e in sol.events):
        assert rep.ok(), rep.to_dict()
    assert rep.balanced


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_transport_random_neighbour_data(seed):
    rng = np.random.default_rng(seed)
    flux, prof = random_instance(rng, neighbour_only=True)
    sol = solve(flux, prof)
    t1 = sol.first_event_time
    ts = [0.0] + ([t1 * f for f in (0.25, 0.5, 0.99)] if math.isfinite(t1) else [0.5, 2.0])
    assert verify_transport(sol, ts).clean_before_collision()
