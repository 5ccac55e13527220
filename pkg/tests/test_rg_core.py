import numpy as np
import pytest

from gaudin import rg_core
from gaudin.algebra import LevelSet, RATIONAL, TRIGONOMETRIC
from gaudin.errors import (
    CollisionError,
    ContractionLimitError,
    DomainError,
    ValidationError,
)
from gaudin.rg_core import (
    DICKE_X,
    RG_ETA,
    DickeSpec,
    ModelSpec,
    RapiditySet,
    contraction_scales,
    deformed_dicke_residual,
    deformed_rg_residual,
    dicke_rg_residual,
    extended_dicke_residual,
    rg_residual,
    tda_residual,
)

JC = DickeSpec((1.0,), (0.5,), 0.5, 1.0, 1)


def simple_spec(g=0.2, kind=TRIGONOMETRIC):
    return ModelSpec(LevelSet.from_spins((1.0,), (0.5,)), kind, 1, g)


def fd_jacobian(fn, w, h=1e-7):
    w = np.asarray(w, dtype=complex)
    n = len(w)
    jac = np.zeros((n, n), dtype=complex)
    for j in range(n):
        dp = np.zeros(n, dtype=complex)
        dp[j] = h
        jac[:, j] = (fn(w + dp).residuals - fn(w - dp).residuals) / (2.0 * h)
    return jac


def test_rg_residual_free_limit_is_one():
    spec = simple_spec(g=0.0)
    rep = rg_residual(spec, RapiditySet((2.7,), RG_ETA))
    assert rep.residuals[0] == pytest.approx(1.0)


def test_rg_residual_closed_form_root():
    # 1 + 0.2*(1/2)*(1+eta)/(1-eta) = 0 at eta = 11/9
    spec = simple_spec(g=0.2)
    rep = rg_residual(spec, RapiditySet((11.0 / 9.0,), RG_ETA))
    assert rep.max_abs < 1e-14


def test_rg_residual_permutation_equivariance():
    ls = LevelSet.from_spins((1.0, 2.0, 3.0), (0.5, 0.5, 0.5))
    spec = ModelSpec(ls, TRIGONOMETRIC, 2, -0.1)
    w = np.array([0.3 + 0.2j, 1.4 - 0.5j])
    a = rg_residual(spec, RapiditySet(tuple(w), RG_ETA))
    b = rg_residual(spec, RapiditySet(tuple(w[::-1]), RG_ETA))
    assert a.max_abs == pytest.approx(b.max_abs, rel=1e-14)
    assert np.allclose(a.residuals, b.residuals[::-1])


def test_rg_residual_conjugation_symmetry():
    ls = LevelSet.from_spins((1.0, 2.0), (0.5, 1.0))
    spec = ModelSpec(ls, TRIGONOMETRIC, 2, 0.3)
    w = np.array([0.4 + 0.7j, 1.6 - 0.2j])
    a = rg_residual(spec, RapiditySet(tuple(w), RG_ETA))
    b = rg_residual(spec, RapiditySet(tuple(np.conj(w)), RG_ETA))
    assert np.allclose(np.conj(a.residuals), b.residuals, atol=1e-14)


def test_rg_residual_collision_reports_pair():
    ls = LevelSet.from_spins((1.0, 2.0), (0.5, 0.5))
    spec = ModelSpec(ls, TRIGONOMETRIC, 1, 0.1)
    with pytest.raises(CollisionError) as exc:
        rg_residual(spec, RapiditySet((1.0,), RG_ETA))
    assert exc.value.pair is not None


def test_frame_mismatch_rejected():
    spec = simple_spec()
    with pytest.raises(ValidationError):
        rg_residual(spec, RapiditySet((0.4,), DICKE_X))


def test_deformed_endpoints_bit_identical():
    ls = LevelSet.from_spins((1.0, 2.0, 3.0), (0.5, 1.0, 0.5))
    spec = ModelSpec(ls, TRIGONOMETRIC, 2, -0.17)
    w = RapiditySet((0.4 + 0.3j, 1.7 - 0.6j), RG_ETA)
    at1 = deformed_rg_residual(spec, 1.0, w)
    direct = rg_residual(spec, w)
    assert np.max(np.abs(at1.residuals - direct.residuals)) == 0.0
    at0 = deformed_rg_residual(spec, 0.0, w)
    tda = tda_residual(spec, w)
    assert np.max(np.abs(at0.residuals - tda.residuals)) == 0.0
    assert at0.decoupled and tda.decoupled


def test_deformed_xi_out_of_range():
    spec = simple_spec()
    with pytest.raises(DomainError):
        deformed_rg_residual(spec, 1.2, RapiditySet((0.4,), RG_ETA))


def test_tda_closed_form_root():
    # (1 - eta) + 0.1*2*(1 + eta) = 0 at eta = 1.5
    spec = ModelSpec(LevelSet.from_spins((1.0,), (0.5,)), TRIGONOMETRIC, 1, 0.1)
    rep = tda_residual(spec, RapiditySet((1.5,), RG_ETA))
    assert rep.max_abs < 1e-14
    rep0 = deformed_rg_residual(spec, 0.0, RapiditySet((1.5,), RG_ETA))
    assert rep0.max_abs < 1e-14


def test_decoupled_jacobian_is_diagonal():
    ls = LevelSet.from_spins((1.0, 2.0), (0.5, 0.5))
    spec = ModelSpec(ls, TRIGONOMETRIC, 2, 0.05)
    rep = deformed_rg_residual(spec, 0.0, RapiditySet((0.3 + 0.1j, 2.6), RG_ETA))
    off = rep.jacobian - np.diag(np.diag(rep.jacobian))
    assert np.max(np.abs(off)) == 0.0


def test_dicke_residual_jc_roots():
    for x in (0.5, 1.5):
        rep = dicke_rg_residual(JC, RapiditySet((x,), DICKE_X))
        assert rep.max_abs < 1e-14


def test_dicke_residual_tavis_cummings_roots():
    tc = DickeSpec((1.0,), (1.0,), 0.5, 1.0, 1)
    for x in (1.0 - 1.0 / np.sqrt(2.0), 1.0 + 1.0 / np.sqrt(2.0)):
        rep = dicke_rg_residual(tc, RapiditySet((x,), DICKE_X))
        assert rep.max_abs < 1e-13


def test_dicke_residual_free_photon_root():
    free = DickeSpec((1.0,), (0.5,), 0.0, 0.7, 1)
    rep = dicke_rg_residual(free, RapiditySet((0.7,), DICKE_X))
    assert rep.max_abs < 1e-15


def test_dicke_spec_validation():
    with pytest.raises(ValidationError):
        DickeSpec((1.0, 1.0), (0.5, 0.5), 0.1, 1.0, 1)
    with pytest.raises(ValidationError):
        DickeSpec((1.0,), (0.5,), 0.1, -1.0, 1)
    with pytest.raises(ValidationError):
        DickeSpec((1.0,), (0.6,), 0.1, 1.0, 1)


def test_contraction_scales_relations():
    lam, g, s0 = contraction_scales(JC, 0.25, 2.0)
    assert lam == pytest.approx(np.sqrt(2.0 * 0.25 / (2.0 * 0.25)))
    assert g == pytest.approx(2.0 * lam * 0.25)
    assert s0 == pytest.approx(2.0)
    # xi * s0(xi) is constant in xi
    for xi in (1.0, 0.5, 0.01):
        assert xi * contraction_scales(JC, xi, 2.0)[2] == pytest.approx(0.5)


def test_deformed_dicke_gap_shrinks_linearly_in_xi():
    # measured convergence of the deformed family onto the exact Dicke
    # equations: the gap at the JC root equals xi/hbar_omega to high accuracy,
    # one power of xi per decade (the family's deviations are even in the
    # natural sqrt(xi) expansion parameter, so the leading term is O(xi))
    r = RapiditySet((0.5,), DICKE_X)
    exact = dicke_rg_residual(JC, r).residuals[0]
    assert abs(exact) < 1e-15
    gaps = []
    for xi in (1e-4, 1e-6, 1e-8):
        rep = deformed_dicke_residual(JC, xi, r)
        gaps.append(abs(JC.hbar_omega * rep.residuals[0]))
    assert gaps[0] == pytest.approx(1e-4, rel=1e-3)
    assert gaps[0] / gaps[1] == pytest.approx(1e2, rel=1e-2)
    assert gaps[1] / gaps[2] == pytest.approx(1e2, rel=1e-2)
    # agreement within 1e-2 already at xi = 1e-6
    assert gaps[1] < 1e-2


def test_omega0_doubling_equals_xi_halving():
    r = RapiditySet((0.37 + 0.1j,), DICKE_X)
    a = deformed_dicke_residual(JC, 0.2, r, omega0=4.0)
    b = deformed_dicke_residual(JC, 0.1, r, omega0=2.0)
    assert np.max(np.abs(a.residuals - b.residuals)) == 0.0


def test_deformed_dicke_xi_zero_delegates():
    with pytest.raises(ContractionLimitError):
        deformed_dicke_residual(JC, 0.0, RapiditySet((0.5,), DICKE_X))


def test_deformed_dicke_matches_explicit_two_copy_model():
    # xi = 1 single-copy family vs an explicit 2-copy trigonometric model with
    # a very large eta_0 standing in for the eta_0 -> infinity row
    xi = 1.0
    lam, g, s0 = contraction_scales(JC, xi, 2.0)
    eta0 = 1e8
    x = 0.82 + 0.11j
    ls = LevelSet((-lam * 1.0, eta0), (0.5, s0), (2, int(round(2 * s0 + 1))))
    spec2 = ModelSpec(ls, TRIGONOMETRIC, 1, g)
    approx = rg_residual(spec2, RapiditySet((-lam * x,), RG_ETA))
    exact = deformed_dicke_residual(JC, xi, RapiditySet((x,), DICKE_X))
    assert abs(approx.residuals[0] - exact.residuals[0]) < 1e-6


def test_extended_dicke_endpoints():
    r = RapiditySet((0.43 + 0.2j, 1.9 - 0.3j), DICKE_X)
    spec = DickeSpec((0.8, 1.3), (0.5, 0.5), 0.2, 1.0, 2)
    at1 = extended_dicke_residual(spec, 1.0, r)
    direct = deformed_dicke_residual(spec, 1.0, r)
    assert np.max(np.abs(at1.residuals - direct.residuals)) == 0.0
    at0 = extended_dicke_residual(spec, 0.0, r)
    assert at0.decoupled
    assert np.max(np.abs(at0.jacobian - np.diag(np.diag(at0.jacobian)))) == 0.0


@pytest.mark.parametrize("family", ["rg", "deformed_rg", "tda", "dicke",
                                    "deformed_dicke", "extended_dicke"])
def test_analytic_jacobians_match_finite_differences(family):
    rng = np.random.default_rng(5)
    ls = LevelSet.from_spins((0.9, 2.1, 3.3), (0.5, 1.0, 0.5))
    mspec = ModelSpec(ls, TRIGONOMETRIC, 2, -0.12)
    dspec = DickeSpec((0.8, 1.3), (0.5, 0.5), 0.2, 1.0, 2)
    for _ in range(20):
        w = rng.uniform(-1.5, 4.5, 2) + 1j * rng.uniform(0.3, 1.2, 2)
        if family == "rg":
            fn = lambda v: rg_residual(mspec, RapiditySet(tuple(v), RG_ETA))
        elif family == "deformed_rg":
            fn = lambda v: deformed_rg_residual(mspec, 0.6, RapiditySet(tuple(v), RG_ETA))
        elif family == "tda":
            fn = lambda v: tda_residual(mspec, RapiditySet(tuple(v), RG_ETA))
        elif family == "dicke":
            fn = lambda v: dicke_rg_residual(dspec, RapiditySet(tuple(v), DICKE_X))
        elif family == "deformed_dicke":
            fn = lambda v: deformed_dicke_residual(dspec, 0.3, RapiditySet(tuple(v), DICKE_X))
        else:
            fn = lambda v: extended_dicke_residual(dspec, 0.4, RapiditySet(tuple(v), DICKE_X))
        rep = fn(w)
        fd = fd_jacobian(fn, w)
        scale = max(1.0, np.max(np.abs(rep.jacobian)))
        assert np.max(np.abs(rep.jacobian - fd)) / scale < 1e-6


def test_vacuum_energy():
    spec = DickeSpec((0.8, 1.3), (0.5, 1.0), 0.2, 1.0, 2)
    assert spec.vacuum_energy() == pytest.approx(-(0.8 * 0.5 + 1.3 * 1.0))
