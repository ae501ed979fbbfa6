import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aircons.errors import CollisionError, DomainError
from aircons.platoon import (
    ControllerParams,
    PlatoonTrace,
    VehicleState,
    pairwise_control,
    averaged_control,
    leader_accel,
    metrics,
    neighbor_average,
    no_turbulence,
    predecessor_neighbors,
    radar_term,
    relative_state,
    step_dynamics,
    window_neighbors,
)

N = 10
D = 5.0


def params(**kw):
    kw.setdefault("neighbor_sets", window_neighbors(N))
    return ControllerParams(**kw)


def formation(n=N, d=D):
    return d * np.arange(n + 1, dtype=float)


# controller

def test_unit_displacement():
    p = params(stiffness=1.0, neighbor_sets={3: (2,)})
    alphas = formation()
    alphas[3] += 1.0
    assert pairwise_control(3, alphas, 0.0, 0.0, p) == pytest.approx(1.0)


def test_averaged_zero_at_equilibrium():
    p = params()
    alphas = formation()
    for n in range(1, N + 1):
        gamma = D * np.mean(p.neighbors(n))
        assert averaged_control(n, alphas[n], 0.0, gamma, 0.0, p) == pytest.approx(0.0, abs=1e-12)


def test_averaged_linear_in_gamma():
    p = params(stiffness=2.5)
    base = averaged_control(4, 21.0, 0.3, 19.0, 0.1, p)
    assert averaged_control(4, 21.0, 0.3, 20.0, 0.1, p) == pytest.approx(base - 2.5)


def test_neighbor_average():
    p = params(neighbor_sets={2: (1, 3)})
    assert neighbor_average(2, formation(), p) == pytest.approx(10.0)


@st.composite
def controller_inputs(draw):
    n_total = draw(st.integers(2, 12))
    n = draw(st.integers(1, n_total))
    others = [m for m in range(1, n_total + 1) if m != n]
    ms = draw(st.lists(st.sampled_from(others), min_size=1, max_size=len(others), unique=True))
    alphas = draw(st.lists(st.floats(0, 100), min_size=n_total + 1, max_size=n_total + 1))
    p = ControllerParams(
        stiffness=draw(st.floats(0.01, 50)), damping=draw(st.floats(0.01, 100)),
        radar_stiffness=draw(st.floats(0, 5)), radar_damping=draw(st.floats(0, 5)),
        target_gap=draw(st.floats(0.5, 20)), neighbor_sets={n: tuple(ms)},
    )
    return n, np.array(alphas), draw(st.floats(-30, 30)), draw(st.floats(-10, 10)), p


@given(controller_inputs())
def test_pairwise_and_averaged_forms_agree(inputs):
    n, alphas, beta, xi, p = inputs
    a = pairwise_control(n, alphas, beta, xi, p)
    b = averaged_control(n, alphas[n], beta, neighbor_average(n, alphas, p), xi, p)
    scale = p.stiffness * (alphas.max() + N * p.target_gap) + p.damping * abs(beta) + abs(xi)
    assert abs(a - b) <= 1e-12 * max(scale, 1.0)


def test_empty_neighbor_set_rejected():
    p = params(neighbor_sets={1: ()})
    with pytest.raises(DomainError):
        pairwise_control(1, formation(), 0.0, 0.0, p)
    with pytest.raises(DomainError):
        averaged_control(1, 5.0, 0.0, 0.0, 0.0, p)


def test_params_validation():
    with pytest.raises(DomainError):
        ControllerParams(stiffness=0.0)
    with pytest.raises(DomainError):
        ControllerParams(radar_damping=-1.0)
    with pytest.raises(DomainError):
        ControllerParams(neighbor_sets={2: (2,)})
    with pytest.raises(DomainError):
        ControllerParams(accel_cap=0.0)


# topology

def test_window_is_symmetric_and_clipped():
    w = window_neighbors(N, 2)
    assert w[1] == (2, 3)
    assert w[5] == (3, 4, 6, 7)
    assert w[N] == (N - 2, N - 1)
    for n, ms in w.items():
        assert n not in ms and len(ms) <= 4
        assert all(n in w[m] for m in ms)


def test_predecessor_sets():
    assert predecessor_neighbors(3) == {1: (0,), 2: (1,), 3: (2,)}


# radar and leader

def test_radar_term():
    p = params(radar_stiffness=0.5, radar_damping=1.0)
    assert radar_term(D + 2, 0.0, p) == pytest.approx(1.0)
    assert radar_term(D, 0.3, p) == pytest.approx(0.3)
    off = params(radar_stiffness=0.0, radar_damping=0.0)
    assert radar_term(17.0, -3.0, off) == 0.0
    with pytest.raises(CollisionError):
        radar_term(0.0, 0.0, p)


def test_leader_profile():
    assert leader_accel(0.0) == 1.0
    assert leader_accel(4.999) == 1.0
    assert leader_accel(5.0) == pytest.approx(10 * math.sin(2.5))
    assert leader_accel(20.0) == pytest.approx(10 * math.sin(10.0))
    assert no_turbulence(3.0) == 0.0
    with pytest.raises(DomainError):
        leader_accel(-1.0)


def test_relative_state():
    a, b = relative_state(VehicleState(-10.0, 3.0), VehicleState(2.0, 5.0))
    assert (a, b) == (12.0, -2.0)


# dynamics

def test_step_dynamics_semi_implicit():
    p, v = step_dynamics([0.0, -5.0], [1.0, 1.0], [2.0, 0.0], 0.1)
    assert np.allclose(v, [1.2, 1.0])
    assert np.allclose(p, [0.12, -4.9])


def test_step_dynamics_collision_carries_index_and_time():
    with pytest.raises(CollisionError) as exc:
        step_dynamics([0.0, -0.05], [0.0, 1.0], [0.0, 0.0], 0.1, t=2.5)
    assert exc.value.index == 1 and exc.value.time == 2.5


def _integrate(dt, T=2.0, a=3.0):
    p, v = np.array([0.0]), np.array([1.0])
    for _ in range(int(round(T / dt))):
        p, v = step_dynamics(p, v, [a], dt)
    return p[0]


def test_step_halving_first_order():
    exact = 1.0 * 2.0 + 0.5 * 3.0 * 2.0 ** 2
    errs = [_integrate(dt) - exact for dt in (1e-2, 5e-3, 2.5e-3)]
    # semi-implicit Euler overshoots a constant acceleration by exactly a*T*dt/2
    for e, dt in zip(errs, (1e-2, 5e-3, 2.5e-3)):
        assert e == pytest.approx(3.0 * 2.0 * dt / 2, rel=1e-6)
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=1e-6)


# metrics

def test_metrics_riemann_sum_of_ramp():
    dt, T = 1e-3, 20_000
    t = np.arange(T) * dt
    errors = np.outer(t, np.ones(3)) * 0.1
    m = metrics(PlatoonTrace.from_errors(t, errors), transient=10.0)
    expected = 3 * 0.1 * dt * dt * T * (T - 1) / 2
    assert m.accumulated_error == pytest.approx(expected, rel=1e-9)
    assert m.string_stable


def test_metrics_detects_amplification():
    t = np.arange(15_000) * 1e-3
    base = np.sin(t)
    ok = np.column_stack([base, 1.04 * base, 1.08 * base])
    bad = np.column_stack([base, 1.06 * base, 1.06 * base])
    assert metrics(PlatoonTrace.from_errors(t, ok)).string_stable
    assert not metrics(PlatoonTrace.from_errors(t, bad)).string_stable


def test_metrics_ignores_transient():
    t = np.arange(15_000) * 1e-3
    e = np.column_stack([np.ones_like(t), np.where(t < 10, 100.0, 0.5)])
    m = metrics(PlatoonTrace.from_errors(t, e), transient=10.0)
    assert m.string_stable and np.allclose(m.peak_error, [1.0, 0.5])


def test_metrics_validation():
    t = np.arange(5) * 1.0
    with pytest.raises(DomainError):
        metrics(PlatoonTrace.from_errors(t, np.zeros((5, 2))), transient=10.0)
    with pytest.raises(DomainError):
        metrics(PlatoonTrace.from_errors(t[:1], np.zeros((1, 2))))


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6))
def test_from_errors_round_trip(errs):
    t = np.arange(4) * 0.5
    e = np.tile(errs, (4, 1))
    tr = PlatoonTrace.from_errors(t, e)
    assert np.allclose(tr.spacing_error[:, 1:], e)
    assert tr.n_followers == len(errs) and tr.dt == 0.5
