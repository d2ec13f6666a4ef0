import math

import numpy as np
import pytest

from stableforms import flow as flow_mod
from stableforms.exterior import Form, FormError, act, e, wedge
from stableforms.flow import (
    FlowConfig,
    FlowConfigError,
    FlowError,
    FlowMode,
    FlowState,
    NonUnimodularError,
    Termination,
    hamiltonian,
    hamiltonian_field,
    hamiltonian_rate,
    integrate,
    rhs_half_flat,
    rhs_nearly_parallel,
    step_halving_check,
    symplectic_pairing,
)
from stableforms.hitchin import StabilityError, eps2, eps3, hat, omega0, phi0, sigma0
from stableforms.lie import abelian, parse_salamon
from stableforms.solutions import cone_family, sine_cone_family
from stableforms.su3 import pi_map

from conftest import random_form
from test_lie import su2su2_automorphism

HALF_PI = math.pi / 2


@pytest.fixture(scope="module")
def fams(nk):
    L, base = nk
    return L, base, sine_cone_family(L, base), cone_family(L, base)


def rel_dev(a: Form, b: Form) -> float:
    return (a - b).norm() / b.norm()


# config


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(lam=4.0, step=0.0, t_end=1.0),
        dict(lam=4.0, step=-1.0, t_end=1.0),
        dict(lam=4.0, step=math.nan, t_end=1.0),
        dict(lam=0.0, step=1e-3, t_end=1.0),
        dict(lam=4.0, step=1e-3, t_end=math.inf),
        dict(lam=4.0, step=1e-3, t_end=1.0, monitor_every=0),
        dict(lam=math.nan, step=1e-3, t_end=1.0),
    ],
)
def test_config_errors(kwargs):
    with pytest.raises(FlowConfigError):
        FlowConfig(**kwargs)


def test_config_mode_from_string():
    c = FlowConfig(lam=0.0, step=1e-3, t_end=1.0, mode="half-flat")
    assert c.mode is FlowMode.HALF_FLAT
    with pytest.raises(ValueError):
        FlowConfig(lam=1.0, step=1e-3, t_end=1.0, mode="sideways")


# right-hand sides


def test_rhs_nearly_parallel_matches_sine_cone(fams):
    L, base, sc, _ = fams
    for t in (HALF_PI, 0.7, 2.3):
        lhs = rhs_nearly_parallel(L, sc.phi(t), 4.0)
        assert (lhs - sc.phidot(t)).norm() <= 1e-8 * max(1.0, sc.phidot(t).norm())


def test_rhs_nearly_parallel_structure(fams):
    L, base, _, _ = fams
    phi = base.phihat
    for lam in (2.0, 4.0, 8.0):
        omega = pi_map(L, phi, lam)
        assert (rhs_nearly_parallel(L, phi, lam) - L.d(omega)).allclose(lam * hat(phi), atol=1e-14)
    with pytest.raises(StabilityError):
        rhs_nearly_parallel(abelian(), phi0(), 4.0)


def test_rhs_half_flat_matches_cone(fams):
    L, base, _, cone = fams
    w2 = wedge(base.omega, base.omega)
    for t in (0.8, 1.0, 1.7):
        sigma = 0.5 * wedge(cone.omega(t), cone.omega(t))
        pd, sd = rhs_half_flat(L, cone.phi(t), sigma, check=True)
        assert pd.allclose(3 * t**2 * base.phi, atol=1e-12)
        assert sd.allclose(2 * t**3 * w2, atol=1e-12)


def test_rhs_half_flat_frozen_on_abelian():
    pd, sd = rhs_half_flat(abelian(), phi0(), sigma0(), check=True)
    assert pd.norm() == 0 and sd.norm() == 0


def test_half_flat_precondition(fams):
    L, base, _, _ = fams
    sigma = 0.5 * wedge(base.omega, base.omega)
    with pytest.raises(ValueError, match="d phi = 0"):
        rhs_half_flat(L, base.phihat, sigma, check=True)
    with pytest.raises(ValueError):
        integrate(L, FlowState(0.0, base.phihat, sigma), FlowConfig(lam=0.0, step=1e-2, t_end=0.1, mode="half-flat"))
    with pytest.raises(FlowConfigError):
        integrate(L, FlowState(0.0, base.phi), FlowConfig(lam=0.0, step=1e-2, t_end=0.1, mode="half-flat"))


# integration


def test_integrate_against_sine_cone_both_directions(fams):
    L, base, sc, _ = fams
    for t_end in (HALF_PI + 0.2, HALF_PI - 0.2):
        cfg = FlowConfig(lam=4.0, step=1e-3, t_end=t_end, monitor_every=20)
        tr = integrate(L, FlowState(HALF_PI, base.phihat), cfg)
        assert tr.termination is Termination.COMPLETED
        assert tr.states[-1].t == pytest.approx(t_end, abs=1e-15)
        assert len(tr.states) == len(tr.diagnostics) == 11
        for st in tr.states:
            assert rel_dev(st.phi, sc.phi(st.t)) <= 1e-6
        for d in tr.diagnostics:
            assert d.closure <= 1e-8
            assert math.isfinite(d.H) and abs(d.dH_dt) <= 1e-10


def test_integrate_half_flat_cone(fams):
    L, base, _, cone = fams
    cfg = FlowConfig(lam=0.0, step=1e-3, t_end=1.5, mode=FlowMode.HALF_FLAT, monitor_every=100)
    s0 = FlowState(1.0, base.phi, 0.5 * wedge(base.omega, base.omega))
    tr = integrate(L, s0, cfg)
    for st, d in zip(tr.states, tr.diagnostics):
        assert rel_dev(st.phi, cone.phi(st.t)) <= 1e-6
        assert rel_dev(st.sigma, 0.5 * wedge(cone.omega(st.t), cone.omega(st.t))) <= 1e-6
        assert d.closure <= 1e-8 and d.c1 <= 1e-9
        assert math.isnan(d.H)


def test_constraints_preserved_over_unit_time(fams):
    L, base, _, _ = fams
    cfg = FlowConfig(lam=4.0, step=1e-3, t_end=HALF_PI + 1.0, monitor_every=100)
    tr = integrate(L, FlowState(HALF_PI, base.phihat), cfg)
    init = tr.diagnostics[0]
    assert max(init.c1, init.c2, init.c3) <= 1e-10
    drift = tr.max_drift()
    for k in ("c1", "c2", "c3"):
        assert drift[k] <= 10 * getattr(init, k) + 1e-9 * 1.0
        assert drift[k] <= 1e-8


def test_stability_loss_returns_partial(fams):
    L, base, _, _ = fams
    cfg = FlowConfig(lam=4.0, step=1e-2, t_end=math.pi + 0.5, monitor_every=5)
    tr = integrate(L, FlowState(HALF_PI, base.phihat), cfg)
    assert tr.termination is Termination.STABILITY_LOST
    assert "t =" in tr.message
    assert HALF_PI < tr.states[-1].t < math.pi
    assert len(tr.states) == len(tr.diagnostics)


def test_invalid_initial_state(fams):
    L, _, _, _ = fams
    with pytest.raises(StabilityError):
        integrate(L, FlowState(0.0, e(6, 1, 2, 3)), FlowConfig(lam=4.0, step=1e-2, t_end=0.1))


def test_non_finite_raises_with_trajectory(fams, monkeypatch):
    L, base, _, _ = fams
    calls = {"n": 0}
    real = flow_mod.rhs_nearly_parallel

    def poisoned(*args, **kwargs):
        calls["n"] += 1
        out = real(*args, **kwargs)
        return out if calls["n"] < 9 else Form(6, 3, np.full(20, np.inf))

    monkeypatch.setattr(flow_mod, "rhs_nearly_parallel", poisoned)
    with pytest.raises(FlowError) as info:
        integrate(L, FlowState(HALF_PI, base.phihat), FlowConfig(lam=4.0, step=1e-2, t_end=HALF_PI + 0.1))
    assert info.value.trajectory is not None
    assert "last good t" in str(info.value)


def test_step_halving(fams):
    L, base, _, _ = fams
    err = step_halving_check(L, FlowState(HALF_PI, base.phihat), FlowConfig(lam=4.0, step=2e-2, t_end=HALF_PI + 0.2))
    assert 0 < err < 1e-7


# Hamiltonian


def test_symplectic_pairing(rng):
    a, b = random_form(rng, 6, 3), random_form(rng, 6, 3)
    assert symplectic_pairing(a, a) == pytest.approx(0.0, abs=1e-12)
    assert symplectic_pairing(a, b) == pytest.approx(-symplectic_pairing(b, a))
    assert abs(symplectic_pairing(e(6, 1, 2, 3), e(6, 4, 5, 6))) == 1.0
    assert symplectic_pairing(e(6, 1, 2, 3), e(6, 4, 5, 6)) == 1.0
    P = np.array([[symplectic_pairing(Form(6, 3, r), Form(6, 3, c)) for c in np.eye(20)] for r in np.eye(20)])
    assert np.linalg.matrix_rank(P) == 20
    with pytest.raises(FormError):
        symplectic_pairing(omega0(), phi0())


def test_hamiltonian_refuses_non_unimodular():
    L = parse_salamon("(12,0,0,0,0,0)")
    with pytest.raises(NonUnimodularError):
        hamiltonian(L, phi0(), 4.0)
    with pytest.raises(NonUnimodularError):
        hamiltonian_field(L, phi0(), 4.0)


def test_hamiltonian_field_matches_rhs(fams, rng):
    L, base, sc, _ = fams
    states = [sc.phi(HALF_PI)] + [base.phihat + 0.02 * base.phihat.norm() * random_form(rng, 6, 3) for _ in range(3)]
    for phi in states:
        X = hamiltonian_field(L, phi, 4.0)
        r = rhs_nearly_parallel(L, phi, 4.0)
        assert (X - r).norm() <= 1e-5 * r.norm()


def test_hamiltonian_invariance(fams, rng):
    L, base, _, _ = fams
    phi = base.phihat
    H = hamiltonian(L, phi, 4.0)
    assert math.isfinite(H)
    for _ in range(3):
        F = su2su2_automorphism(rng)
        assert hamiltonian(L, act(F, phi), 4.0) == pytest.approx(H, rel=1e-8)


def test_hamiltonian_lambda_scaling(fams):
    # H(phi, lam) = 2 lam (eps(phi) - eps(pi(phi))); pi depends on lam through sigma = -(1/lam) d phi,
    # and hat is homogeneous of degree 1/2 on 4-forms, so eps(pi_{2 lam}) = 2^{-3/2} eps(pi_lam)
    L, base, _, _ = fams
    phi = base.phihat
    lam = 4.0
    e_pi = eps2(pi_map(L, phi, lam))
    assert eps2(pi_map(L, phi, 2 * lam)) == pytest.approx(2 ** -1.5 * e_pi, rel=1e-12)
    expected = 2 * (2 * lam) * (eps3(phi) - 2 ** -1.5 * e_pi)
    assert hamiltonian(L, phi, 2 * lam) == pytest.approx(expected, rel=1e-12)


def test_hamiltonian_rate_matches_fd(fams):
    L, base, sc, _ = fams
    t, h = 1.2, 1e-5
    phi = sc.phi(t)
    rate = hamiltonian_rate(L, phi, pi_map(L, phi, 4.0), 4.0, sc.phidot(t))
    fd = (hamiltonian(L, sc.phi(t + h), 4.0) - hamiltonian(L, sc.phi(t - h), 4.0)) / (2 * h)
    assert rate == pytest.approx(fd, abs=1e-10)
