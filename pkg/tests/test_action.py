"""Path actions: exact values, the static/dynamic split, critical paths, channels."""

import warnings

import numpy as np
import pytest

from reachlab import action, landscape
from reachlab.action import (
    OptConfig,
    channel_marginal_check,
    minimum_action_path,
    om_action,
    transition_ratio,
)
from reachlab.diffusion import DiffusionParams, Path
from reachlab.errors import ContractError, SimulationError
from reachlab.rng import stream


# -- om_action ------------------------------------------------------------------


def test_action_contracts():
    q = landscape.Quadratic([1.0])
    p = Path(np.linspace(0, 1, 5), np.zeros((5, 1)))
    for D in (0.0, -1.0, np.nan):
        with pytest.raises(ContractError):
            om_action(q, p, D)
    with pytest.raises(ContractError):
        om_action(q, Path(np.array([0.0, 1.0]), np.zeros((2, 1))), 0.1)
    q2 = landscape.Quadratic([1.0, 1.0])
    with pytest.raises(ContractError):
        om_action(q2, p, 0.1)


def test_action_of_straight_line_on_flat_potential():
    # |dw/dt|^2/(4D) with unit speed and D = 1/4 integrates to exactly 1
    flat = landscape.Quadratic([0.0])
    t = np.linspace(0.0, 1.0, 11)
    br = om_action(flat, Path(t, t[:, None]), 0.25)
    assert br.total == 1.0
    assert br.static_term == 0.0
    assert br.dynamic_term == 1.0
    assert br.defect == 0.0
    assert br.per_segment.sum() == pytest.approx(br.total, rel=1e-15)


def test_action_of_resting_at_a_minimum():
    # zero velocity and zero drift leave only the -lap/2 divergence term:
    # constant integrands make the midpoint rule exact, so no defect
    q = landscape.Quadratic([2.0])
    t = np.linspace(0.0, 1.0, 11)
    br = om_action(q, Path(t, np.zeros((11, 1))), 0.1)
    assert br.total == pytest.approx(-1.0, rel=1e-14)
    assert br.static_term == 0.0
    assert abs(br.defect) < 1e-14


def test_reversal_shifts_action_by_the_potential_drop():
    # forward minus backward cost telescopes to (U(end) - U(start)) / D;
    # the dynamic part is exactly reversal invariant on the same knots
    dw = landscape.DoubleWell1D()
    D = 0.2
    t = np.arange(0, 2001) * 1e-3
    s = t[:, None] / t[-1]
    W = (1 - s) * np.array([-1.2]) + s * np.array([0.7]) + 0.3 * np.sin(np.pi * s)
    p = Path(t, W)
    f = om_action(dw, p, D)
    r = om_action(dw, p.reversed(), D)
    dU = dw.value(W[-1]) - dw.value(W[0])
    assert f.dynamic_term == r.dynamic_term
    assert f.static_term == -r.static_term
    assert (f.total - r.total) == pytest.approx(dU / D, abs=1e-5)


def test_defect_shrinks_quadratically_with_dt():
    pots = [
        landscape.Quadratic(np.array([1.0, 2.0])),
        landscape.DoubleWell1D(),
        landscape.Channel2D(landscape.DoubleWell1D(), landscape.Polynomial1D([3.0, 0.0, 0.5])),
    ]
    rng = stream(42)
    D, T = 0.25, 2.0
    for pot in pots:
        d = pot.dim
        a, b = rng.normal(0, 0.8, d), rng.normal(0, 0.8, d)
        coef = rng.normal(0, 0.3, (3, d))

        def knots(dt):
            t = np.arange(int(T / dt) + 1) * dt
            s = (t / T)[:, None]
            W = (1 - s) * a + s * b
            for m in range(3):
                W = W + coef[m] * np.sin(np.pi * (m + 1) * s)
            return Path(t, W)

        d1 = abs(om_action(pot, knots(1e-2), D).defect)
        d2 = abs(om_action(pot, knots(1e-3), D).defect)
        assert d2 <= 0.5 * d1 or d2 < 1e-12


# -- minimum-action paths ---------------------------------------------------------


def test_critical_path_on_flat_potential_is_straight():
    flat = landscape.Quadratic(np.zeros(2))
    wf = np.array([1.0, -0.5])
    cp = minimum_action_path(flat, np.zeros(2), wf, 1.0, 61, 0.1)
    straight = np.linspace(0.0, 1.0, 61)[:, None] * wf
    assert cp.converged
    assert np.abs(cp.path.points - straight).max() < 1e-6


def test_critical_path_tracks_gradient_flow_at_small_noise():
    # with wf placed on the flow through w0, the zero-cost path is the
    # relaxation itself; the optimizer must find it to discretization error
    k = np.array([1.0, 2.0])
    pot = landscape.Quadratic(k)
    w0 = np.array([1.2, -0.8])
    T = 1.5
    wf = w0 * np.exp(-k * T)
    cp = minimum_action_path(pot, w0, wf, T, 121, 1e-3)
    flow = w0 * np.exp(-k * cp.path.times[:, None])
    assert cp.converged
    assert np.abs(cp.path.points - flow).max() < 0.02
    assert cp.el_residual < 1e-3 * cp.el_scale


def test_critical_path_crosses_the_barrier():
    dw = landscape.DoubleWell1D()
    cp = minimum_action_path(dw, np.array([-1.0]), np.array([1.0]), 6.0, 101, 0.1)
    assert cp.converged
    # the path must pass through the saddle region between the wells
    x = cp.path.points[:, 0]
    assert x.min() >= -1.5 and x.max() <= 1.5
    assert np.any(np.diff(np.sign(x)) != 0)
    assert cp.el_residual < 0.02 * cp.el_scale


def test_critical_path_endpoints_are_pinned():
    pot = landscape.Quadratic([1.0, 3.0])
    w0, wf = np.array([1.0, 1.0]), np.array([0.2, 0.1])
    cp = minimum_action_path(pot, w0, wf, 2.0, 41, 0.05)
    assert np.array_equal(cp.path.points[0], w0)
    assert np.array_equal(cp.path.points[-1], wf)
    for alt in cp.alternates:
        assert np.array_equal(alt.path.points[0], w0)


def test_critical_path_contracts():
    pot = landscape.Quadratic([1.0])
    for kw in ((0.0, 11, 0.1), (1.0, 2, 0.1), (1.0, 11, 0.0)):
        with pytest.raises(ContractError):
            minimum_action_path(pot, np.zeros(1), np.ones(1), *kw)


def test_opt_config_budget_is_respected():
    pot = landscape.Quadratic([1.0, 2.0])
    w0 = np.array([1.2, -0.8])
    wf = w0 * np.exp(-np.array([1.0, 2.0]) * 1.5)
    cp = minimum_action_path(pot, w0, wf, 1.5, 61, 1e-3, opt=OptConfig(maxiter=1))
    assert not cp.converged


# -- endpoint occupation ------------------------------------------------------------


def test_transition_ratio_prefers_the_basin():
    q = landscape.Quadratic([1.0, 1.0])
    par = DiffusionParams(D=0.05, dt=0.01, max_steps=5000, seed=3)
    rat = transition_ratio(
        q, np.array([1.5, 0.0]), [np.zeros(2), np.array([3.0, 3.0])], 0.6, 20.0, par, 64)
    assert rat[0] == 1.0
    assert rat[1] == 0.0


def test_transition_ratio_contracts():
    q = landscape.Quadratic([1.0, 1.0])
    par = DiffusionParams(D=0.05, dt=0.01, max_steps=100, seed=3)
    with pytest.raises(ContractError):
        transition_ratio(q, np.zeros(2), [], 0.5, 1.0, par, 8)
    with pytest.raises(ContractError):
        transition_ratio(q, np.zeros(2), [np.zeros(2)], -0.5, 1.0, par, 8)
    with pytest.raises(ContractError):
        transition_ratio(q, np.zeros(2), [np.zeros(2)], 0.5, 100.0, par, 8)


def test_transition_ratio_zero_reference_is_an_error():
    # noiseless walkers relax to the origin, never to the far reference
    q = landscape.Quadratic([1.0, 1.0])
    par = DiffusionParams(D=0.0, dt=0.01, max_steps=200, seed=0)
    with pytest.raises(SimulationError, match="reference"):
        transition_ratio(q, np.zeros(2), [np.array([5.0, 5.0])], 0.1, 2.0, par, 4)


# -- channel marginals ---------------------------------------------------------------


def test_channel_marginal_matches_prediction():
    a = landscape.Polynomial1D([0.0, 0.0, 0.5])  # a(u) = u^2/2
    ch = landscape.Channel2D(a, landscape.Polynomial1D([3.0]))
    par = DiffusionParams(D=0.3, dt=1e-2, max_steps=8000, seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r = channel_marginal_check(ch, 0.0, 0.3, par, 16, 25)
    assert r.equilibrated
    assert r.n_samples == 12800
    assert r.tv_corrected < 0.1
    # constant stiffness: the corrected and uncorrected predictions coincide
    assert r.tv_corrected == pytest.approx(r.tv_uncorrected, abs=1e-12)
    assert r.hist.sum() == pytest.approx(1.0, rel=1e-12)
    assert r.corrected.sum() == pytest.approx(1.0, rel=1e-12)
    assert r.bin_edges.size == r.hist.size + 1


def test_channel_marginal_penalizes_narrow_sections():
    # varying stiffness splits the two predictions; the corrected one wins
    a = landscape.Polynomial1D([0.0, 0.0, 0.5])
    ch = landscape.Channel2D(a, landscape.Polynomial1D([2.5, 0.0, 4.0]))
    par = DiffusionParams(D=0.3, dt=1e-2, max_steps=20000, seed=0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r = channel_marginal_check(ch, 0.0, 0.3, par, 16, 25)
    assert r.tv_corrected < r.tv_uncorrected


def test_channel_marginal_warns_when_adiabatic_picture_is_marginal():
    # double-well channel curvature tops out near 47 on the box; b = 3
    ch = landscape.Channel2D(landscape.DoubleWell1D(), landscape.Polynomial1D([3.0]))
    par = DiffusionParams(D=0.2, dt=5e-3, max_steps=4000, seed=1)
    with pytest.warns(RuntimeWarning, match="adiabatic"):
        channel_marginal_check(ch, -1.0, 0.2, par, 8, 10)


def test_channel_marginal_contracts():
    q = landscape.Quadratic([1.0, 1.0])
    ch = landscape.Channel2D(landscape.Polynomial1D([0.0, 0.0, 0.5]), landscape.Polynomial1D([3.0]))
    par = DiffusionParams(D=0.3, dt=1e-2, max_steps=1000, seed=0)
    with pytest.raises(ContractError):
        channel_marginal_check(q, 0.0, 0.3, par, 8, 25)
    with pytest.raises(ContractError):
        channel_marginal_check(ch, 0.0, 0.3, par, 8, 3)
    with pytest.raises(SimulationError, match="samples"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            channel_marginal_check(
                ch, 0.0, 0.3, DiffusionParams(D=0.3, dt=1e-2, max_steps=20, seed=0), 2, 4)
