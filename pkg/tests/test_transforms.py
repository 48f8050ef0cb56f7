import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadcoh.errors import ContractError, UnsupportedStateError
from quadcoh.measures import SQRT_2PI, coherence_l1, coherence_l1_numeric, relative_entropy_coherence
from quadcoh.numerics import abs_grid
from quadcoh.states import (
    Displaced,
    FockDensityMatrix,
    FockVector,
    GaussianPureState,
    ProductState,
    Rescaled,
    Rotated,
    ThermalState,
    mean_photon_number,
    vacuum,
)
from quadcoh.transforms import (
    RemapMatrix,
    TwoModePure,
    beam_split,
    coherence_two_mode_pure,
    displace,
    rotate,
    rotation_coherence_curve,
    squeeze,
    squeeze_entropy_shift,
    two_mode_norm,
    two_mode_squeeze,
)

FOCK1 = 8 / SQRT_2PI


def superposition():
    return FockVector(np.array([1.0, 1.0]) / math.sqrt(2))


# -- squeezing ---------------------------------------------------------------


@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 3.0])
@pytest.mark.parametrize(
    "state",
    [vacuum(), FockVector.number(1), FockVector.number(2), superposition()],
    ids=["vacuum", "fock1", "fock2", "superposition"],
)
def test_squeeze_scaling_numeric(state, lam):
    base = coherence_l1_numeric(state).value
    assert coherence_l1_numeric(squeeze(state, lam)).value == pytest.approx(lam * base, rel=1e-5)


def test_squeeze_scaling_thermal_kernel():
    base = coherence_l1_numeric(ThermalState(1.0)).value
    got = coherence_l1_numeric(squeeze(ThermalState(1.0), 2.0)).value
    assert got == pytest.approx(2 * base, rel=1e-5)


def test_squeeze_composition():
    s = FockVector.number(1)
    x = np.linspace(-3, 3, 13)
    a = squeeze(squeeze(s, 1.3), 2.1)
    b = squeeze(s, 1.3 * 2.1)
    np.testing.assert_allclose(a.kernel(x, x + 0.5), b.kernel(x, x + 0.5), atol=1e-12)
    assert squeeze(squeeze(s, 2.0), 0.5) is s


def test_squeeze_gaussian_closed_form():
    g = squeeze(GaussianPureState(1.0, 2.0, delta_x=0.5), 3.0)
    assert (g.x_mean, g.y_mean, g.delta_x) == pytest.approx((3.0, 2.0 / 3.0, 1.5))
    assert coherence_l1(g).value == pytest.approx(3 * SQRT_2PI)


@pytest.mark.parametrize("lam", [0.0, -1.0, math.inf])
def test_squeeze_rejects_bad_factor(lam):
    with pytest.raises(ValueError):
        squeeze(vacuum(), lam)


@pytest.mark.parametrize("lam", [0.5, 2.0, math.e])
@pytest.mark.parametrize("state", [vacuum(), ThermalState(1.0), FockVector.number(1)], ids=["vac", "th1", "f1"])
def test_entropy_shift_is_log_lambda(state, lam):
    assert squeeze_entropy_shift(state, lam, method="numeric") == pytest.approx(math.log(lam), abs=1e-8)


# -- displacement ------------------------------------------------------------


@pytest.mark.parametrize("shift", [(2.0, 0.0), (0.0, 2.0), (1.0, -3.0)])
@pytest.mark.parametrize(
    "state",
    [FockVector.number(2), superposition(), FockDensityMatrix.diagonal([0.5, 0.5]), GaussianPureState(delta_x=0.9)],
    ids=["fock2", "superposition", "mixture", "gaussian"],
)
def test_displacement_invariance(state, shift):
    base = coherence_l1_numeric(state).value
    assert coherence_l1_numeric(displace(state, *shift)).value == pytest.approx(base, rel=1e-6)


def test_displace_merges_and_entropy_invariant():
    th = ThermalState(0.5)
    d = displace(displace(th, 1.0, 0.5), -0.5, 0.5)
    assert isinstance(d, Displaced) and (d.x0, d.y0) == (0.5, 1.0)
    assert relative_entropy_coherence(d, method="numeric") == pytest.approx(
        relative_entropy_coherence(th), abs=1e-8
    )


def test_displacement_kernel_phase():
    s = FockVector.number(1)
    d = Displaced(s, 0.7, -0.3)
    x, xp = np.array([0.1, 1.2]), np.array([-0.4, 0.9])
    expected = np.exp(2j * -0.3 * (x - xp)) * s.kernel(x - 0.7, xp - 0.7)
    np.testing.assert_allclose(d.kernel(x, xp), expected, atol=1e-15)


# -- free evolution ----------------------------------------------------------


def test_rotation_curve_endpoints():
    g = GaussianPureState(0.0, 0.0, delta_x=1.0)
    (t0, c0), (t1, c1) = rotation_coherence_curve(g, [0.0, math.pi / 2])
    assert c0 == 2 * SQRT_2PI * g.delta_x
    assert c1 == pytest.approx(2 * SQRT_2PI * g.delta_y, rel=1e-15)


def test_rotation_curve_requires_uncorrelated():
    with pytest.raises(ContractError):
        rotation_coherence_curve(GaussianPureState(delta_x=0.7, xy_correlation=0.1), [0.0])


@settings(max_examples=20, deadline=None)
@given(tau=st.floats(-4, 4), dx=st.floats(0.2, 2.0))
def test_rotation_curve_matches_numeric(tau, dx):
    g = GaussianPureState(0.5, -0.3, delta_x=dx)
    (_, expected), = rotation_coherence_curve(g, [tau])
    assert coherence_l1(rotate(g, tau)).value == pytest.approx(expected, rel=1e-12)
    assert coherence_l1_numeric(rotate(g, tau)).value == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize(
    "state",
    [
        GaussianPureState(0.4, 0.2, delta_x=0.8),
        ThermalState(1.3),
        FockVector.number(3),
        superposition(),
        FockDensityMatrix.diagonal([0.2, 0.3, 0.5]),
        Displaced(FockVector.number(1), 1.0, 0.5),
        Rescaled(FockVector.number(1), 1.4),
    ],
)
@pytest.mark.parametrize("tau", [0.3, 2.0])
def test_rotation_preserves_energy(state, tau):
    assert mean_photon_number(rotate(state, tau)) == pytest.approx(mean_photon_number(state), abs=1e-10)


def test_rotated_wrapper_matches_phase_rotation():
    s = FockVector(np.array([0.6, 0.0, 0.8j]))
    x = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(Rotated(s, 0.9, 16).kernel(x, x[::-1]), rotate(s, 0.9).kernel(x, x[::-1]), atol=1e-12)


def test_rotated_squeezed_number_state_energy():
    s = rotate(Rescaled(FockVector.number(1), 1.5), 0.6)
    assert isinstance(s, Rotated)
    x = np.linspace(-6, 6, 4001)
    assert np.sum(np.abs(s.wavefunction(x)) ** 2) * (x[1] - x[0]) == pytest.approx(1.0, abs=1e-8)


def test_fock_mixture_rotation_invariant():
    rho = FockDensityMatrix.diagonal([0.5, 0.3, 0.2])
    base = coherence_l1_numeric(rho).value
    for tau in (0.4, 1.3, 3.0):
        assert coherence_l1_numeric(rotate(rho, tau)).value == pytest.approx(base, rel=1e-9)


# -- two-mode maps -----------------------------------------------------------


def test_remap_determinant_checked():
    with pytest.raises(ContractError):
        RemapMatrix(np.array([[2.0, 0.0], [0.0, 1.0]]))
    m = RemapMatrix.two_mode_squeezer(0.7)
    np.testing.assert_allclose(m.matrix @ m.inverse, np.eye(2), atol=1e-14)


def test_beam_splitter_identity_at_zero():
    f1, v = FockVector.number(1), vacuum()
    b = beam_split(f1, v, 0.0)
    x = np.linspace(-2, 2, 5)
    np.testing.assert_allclose(b.amplitude(x, x[::-1]), f1.wavefunction(x) * v.wavefunction(x[::-1]))


@pytest.mark.parametrize("theta", [0.3, 0.7, math.pi / 4])
def test_vacuum_pair_invariant(theta):
    r = coherence_two_mode_pure(beam_split(vacuum(), vacuum(), theta))
    assert r.value == pytest.approx(2 * math.pi, rel=1e-10)


def test_beam_splitter_fock_one():
    r = coherence_two_mode_pure(beam_split(FockVector.number(1), vacuum(), math.pi / 4))
    assert r.value == pytest.approx(8.0, abs=1e-8)
    assert r.error_estimate < 1e-6


def test_beam_splitter_crossing_nodal_lines():
    s1, s2 = FockVector.number(1), FockVector.number(2)
    before = coherence_l1(ProductState((s1, s2))).value
    assert coherence_two_mode_pure(beam_split(s1, s2, 0.7)).value == pytest.approx(before, rel=1e-6)


def test_product_two_mode_values():
    assert coherence_two_mode_pure((FockVector.number(1), FockVector.number(1))).value == pytest.approx(
        FOCK1**2, rel=1e-10
    )
    state = TwoModePure.from_fock(np.array([[0, 1], [1, 0]]) / math.sqrt(2))
    assert coherence_two_mode_pure(state).value == pytest.approx(8.0, abs=1e-8)


def test_two_mode_squeeze_values():
    v = vacuum()
    assert coherence_two_mode_pure(two_mode_squeeze((v, v), 0.5)).value == pytest.approx(2 * math.pi, rel=1e-8)
    s = two_mode_squeeze(ProductState((FockVector.number(1), v)), 0.3)
    assert coherence_two_mode_pure(s).value == pytest.approx(8.0, abs=1e-6)


@pytest.mark.parametrize(
    "state",
    [
        beam_split(FockVector.number(1), GaussianPureState(0.5, 0.0, delta_x=0.7), 0.6),
        two_mode_squeeze((FockVector.number(1), vacuum()), 0.4),
    ],
    ids=["beam_split", "two_mode_squeeze"],
)
def test_two_mode_norm_preserved(state):
    assert two_mode_norm(state) == pytest.approx(1.0, abs=5e-5)


def test_two_mode_explicit_grid():
    g = abs_grid(-8, 8, 512)
    r = coherence_two_mode_pure((vacuum(), vacuum()), g, g)
    assert r.value == pytest.approx(2 * math.pi, rel=1e-10)


def test_two_mode_rejects_mixed_input():
    with pytest.raises(UnsupportedStateError):
        beam_split(ThermalState(1.0), vacuum(), 0.3)
    with pytest.raises(UnsupportedStateError):
        two_mode_squeeze((vacuum(), FockDensityMatrix.diagonal([0.5, 0.5])), 0.3)
    with pytest.raises(UnsupportedStateError):
        displace(ProductState((vacuum(), vacuum())), 1.0, 0.0)
