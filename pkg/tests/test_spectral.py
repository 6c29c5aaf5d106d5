import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _helpers import random_field, relative, single_mode
from cubicwave.spectral import (
    DyadicShell,
    GaussianBump,
    Grid3,
    MultiplierProfile,
    PlaneWavePacket,
    RandomSobolev,
    SpectralField,
    apply_radial_multiplier,
    forward_transform,
    fractional_derivative,
    inverse_transform,
    lp_decompose,
    lp_project,
    lp_shells,
    phi,
    psi,
    recipe_from_dict,
    smoothing_I,
    synthesize_initial_data,
)
from cubicwave.functionals import sobolev_norm
from cubicwave.dynamics import WaveState

GRID = Grid3(16, 2 * math.pi)


# --- grid ------------------------------------------------------------------


@pytest.mark.parametrize("n", [4, 12, 24, 0, 8.0])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError, match="power of two"):
        Grid3(n, 1.0)


@pytest.mark.parametrize("L", [0.0, -1.0, math.inf])
def test_grid_rejects_bad_box(L):
    with pytest.raises(ValueError, match="box_length"):
        Grid3(8, L)


@given(j=st.integers(3, 6), L=st.floats(0.1, 100.0))
def test_grid_nyquist_positive(j, L):
    g = Grid3(2**j, L)
    assert g.xi_max == pytest.approx((2 * math.pi / L) * g.n / 2)
    assert g.xi_max > 0


def test_lattice_enumeration_is_total():
    g = Grid3(8, 1.0)
    seen = list(g.iter_lattice())
    assert len(seen) == len(set(seen)) == g.n**3
    assert seen == list(g.iter_lattice())
    idx = {g.signed_k(i) for i in np.ndindex(g.shape)}
    assert idx == set(seen)


def test_dealias_mask_keeps_strictly_below_quarter():
    g = Grid3(16, 1.0)
    kept = np.abs(g.k[g.dealias_mask.any(axis=(1, 2))])
    assert kept.max() == 3


# --- transforms ------------------------------------------------------------


def test_constant_field_has_only_mean():
    f = forward_transform(np.ones(GRID.shape), GRID)
    c = f.coefficients.copy()
    assert c[0, 0, 0] == pytest.approx(1.0)
    c[0, 0, 0] = 0
    assert np.abs(c).max() < 1e-15


def test_cosine_has_two_conjugate_coefficients():
    x, _, _ = GRID.coordinates()
    samples = np.broadcast_to(np.cos(2 * math.pi / GRID.box_length * x), GRID.shape)
    c = forward_transform(samples, GRID).coefficients
    assert c[1, 0, 0] == pytest.approx(0.5)
    assert c[-1, 0, 0] == pytest.approx(0.5)
    mask = np.abs(c) > 1e-14
    assert mask.sum() == 2


def test_zero_coefficients_give_zero_field():
    assert np.all(inverse_transform(SpectralField.zeros(GRID)) == 0)


def test_single_pair_reconstructs_cosine():
    samples = inverse_transform(single_mode(GRID, (1, 0, 0), 0.5))
    x, _, _ = GRID.coordinates()
    expected = np.broadcast_to(np.cos(2 * math.pi / GRID.box_length * x), GRID.shape)
    assert np.abs(samples - expected).max() < 1e-14


def test_round_trip_on_random_fields(rng):
    for _ in range(100):
        samples = rng.standard_normal(GRID.shape)
        back = inverse_transform(forward_transform(samples, GRID))
        assert relative(back, samples) <= 1e-12


def test_plancherel_on_random_fields(rng):
    # continuum L^2 from physical samples equals the coefficient sum times the volume
    for _ in range(100):
        samples = rng.standard_normal(GRID.shape)
        physical = math.sqrt(GRID.cell_volume * float(np.sum(samples**2)))
        assert forward_transform(samples, GRID).norm() == pytest.approx(physical, rel=1e-12)


def test_forward_rejects_wrong_size_and_nonfinite():
    with pytest.raises(ValueError, match="expected"):
        forward_transform(np.zeros(10), GRID)
    bad = np.zeros(GRID.shape)
    bad[1, 2, 3] = np.nan
    with pytest.raises(ValueError, match=r"\(1, 2, 3\)"):
        forward_transform(bad, GRID)


def test_inverse_rejects_non_hermitian():
    c = np.zeros(GRID.shape, dtype=complex)
    c[1, 0, 0] = 1.0
    with pytest.raises(ValueError, match="not Hermitian"):
        inverse_transform(SpectralField(GRID, c))


def test_forward_output_is_hermitian(rng):
    f = random_field(GRID, rng)
    assert f.hermitian_defect()[0] < 1e-15


# --- multipliers ------------------------------------------------------------


def test_unit_symbol_is_identity(rng):
    f = random_field(GRID, rng)
    g = apply_radial_multiplier(f, lambda r: np.ones_like(r))
    assert np.array_equal(g.coefficients, f.coefficients)


def test_abs_xi_symbol_on_single_mode():
    L = 3.0
    g = Grid3(8, L)
    f = single_mode(g, (1, 0, 0))
    out = apply_radial_multiplier(f, lambda r: r)
    assert out.coefficients[1, 0, 0] == pytest.approx(0.5 * 2 * math.pi / L)


def test_multiplier_rejects_nonfinite_values():
    with pytest.raises(ValueError, match="not finite"):
        apply_radial_multiplier(SpectralField.zeros(GRID), lambda r: 1.0 / r)


def test_m_symbol_above_nyquist_is_identity(rng):
    f = random_field(GRID, rng)
    prof = MultiplierProfile(0.75, 2.0 ** math.ceil(math.log2(GRID.xi_corner)))
    assert np.array_equal(apply_radial_multiplier(f, prof.m).coefficients, f.coefficients)
    assert np.array_equal(smoothing_I(f, prof).coefficients, f.coefficients)


def test_derivative_order_zero_is_identity(rng):
    f = random_field(GRID, rng)
    assert np.array_equal(fractional_derivative(f, 0).coefficients, f.coefficients)


def test_derivative_order_two_on_single_mode():
    L = 5.0
    g = Grid3(8, L)
    out = fractional_derivative(single_mode(g, (1, 0, 0)), 2)
    assert out.coefficients[1, 0, 0] == pytest.approx(0.5 * (2 * math.pi / L) ** 2)


def test_derivative_and_inverse_compose_to_identity(rng):
    f = random_field(GRID, rng, mean_zero=True)
    back = fractional_derivative(fractional_derivative(f, 1), -1)
    assert relative(back.coefficients, f.coefficients) <= 1e-12


def test_negative_derivative_rejects_mean():
    f = forward_transform(np.ones(GRID.shape), GRID)
    with pytest.raises(ValueError, match="nonzero mean"):
        fractional_derivative(f, -1)
    assert fractional_derivative(f, -1, zero_mode=0.0).coefficients[0, 0, 0] == 0


@given(sigma=st.floats(-2, 2), tau=st.floats(-2, 2), seed=st.integers(0, 1000))
def test_derivative_orders_add(sigma, tau, seed):
    f = random_field(Grid3(8, 2.0), np.random.default_rng(seed), mean_zero=True)
    lhs = fractional_derivative(fractional_derivative(f, sigma), tau)
    rhs = fractional_derivative(f, sigma + tau)
    assert relative(lhs.coefficients, rhs.coefficients) <= 1e-12


# --- smoothing profile ------------------------------------------------------


def test_band_limited_field_unchanged_by_I(rng):
    prof = MultiplierProfile(0.75, 8)
    f = random_field(GRID, rng)
    band = SpectralField(GRID, np.where(GRID.xi_norm <= 8, f.coefficients, 0))
    assert np.array_equal(smoothing_I(band, prof).coefficients, band.coefficients)


def test_single_mode_at_four_N():
    # |xi| = 4 with N = 1: expected factor (N/|xi|)^(1-s) = (1/4)^(1/4)
    g = Grid3(16, 2 * math.pi)
    prof = MultiplierProfile(0.75, 1)
    out = smoothing_I(single_mode(g, (4, 0, 0)), prof)
    assert out.coefficients[4, 0, 0] == pytest.approx(0.5 * 0.25**0.25, rel=1e-14)


@given(s=st.floats(0.51, 0.99), j=st.integers(0, 8))
def test_profile_shape(s, j):
    N = 2.0**j
    prof = MultiplierProfile(s, N)
    r = np.linspace(0, 6 * N, 4001)
    m = prof.m(r)
    assert np.all(m[r <= N] == 1.0)
    hi = r >= 2 * N
    assert np.allclose(m[hi], (N / r[hi]) ** (1 - s), rtol=1e-13)
    assert np.all(np.diff(m) <= 1e-15)
    assert np.all((m > 0) & (m <= 1))
    # continuity across the transition edges
    for edge in (N, 2 * N):
        assert prof.scalar(edge * (1 + 1e-9)) == pytest.approx(prof.scalar(edge * (1 - 1e-9)), abs=1e-7)


@pytest.mark.parametrize("s, N", [(0.5, 1), (1.0, 1), (0.75, 3), (0.75, 0.5)])
def test_profile_rejects_bad_parameters(s, N):
    with pytest.raises(ValueError):
        MultiplierProfile(s, N)


@given(seed=st.integers(0, 1000), j=st.integers(-1, 5))
def test_I_contracts_and_commutes_with_projection(seed, j):
    f = random_field(GRID, np.random.default_rng(seed))
    prof = MultiplierProfile(0.75, 2)
    If = smoothing_I(f, prof)
    assert np.all(np.abs(If.coefficients) <= np.abs(f.coefficients))
    shell = DyadicShell(2.0**j)
    a = smoothing_I(lp_project(f, shell), prof).coefficients
    b = lp_project(If, shell).coefficients
    assert np.abs(a - b).max() <= 1e-12 * max(np.abs(f.coefficients).max(), 1)


# --- Littlewood-Paley --------------------------------------------------------


def test_phi_psi_partition():
    r = np.geomspace(1e-3, 1e3, 5001)
    assert np.all((phi(r) >= 0) & (phi(r) <= 1))
    js = np.arange(-12, 13)
    total = sum(psi(r / 2.0**j) for j in js)
    assert np.abs(total - 1).max() < 1e-14


def test_below_projection_identity_on_low_mode():
    f = single_mode(GRID, (2, 0, 0))
    out = lp_project(f, DyadicShell(4), "below")
    assert np.array_equal(out.coefficients, f.coefficients)


def test_projection_empty_far_above_lattice(rng):
    f = random_field(GRID, rng)
    M = 2.0 ** math.ceil(math.log2(4 * GRID.xi_corner))
    assert not np.any(lp_project(f, DyadicShell(M)).coefficients)


def test_reconstruction_on_random_fields(rng):
    for _ in range(100):
        f = random_field(GRID, rng)
        total = sum(p.coefficients for _, p in lp_decompose(f))
        assert relative(total, f.coefficients) <= 1e-10


def test_shells_cover_the_lattice():
    g = Grid3(32, 7.0)
    shells = lp_shells(g)
    assert shells[0].M <= g.dk
    assert shells[-1].M >= g.xi_corner


def test_above_and_below_sum_to_field(rng):
    f = random_field(GRID, rng)
    s = DyadicShell(2)
    total = lp_project(f, s, "below").coefficients + lp_project(f, s, "above").coefficients
    assert np.allclose(total, f.coefficients, atol=1e-15)
    with pytest.raises(ValueError, match="projection mode"):
        lp_project(f, s, "sideways")


# --- initial data -------------------------------------------------------------


def test_zero_amplitude_bump_is_zero():
    u0, u1 = synthesize_initial_data(GRID, GaussianBump(0.0, 1.0))
    assert not np.any(u0.coefficients) and not np.any(u1.coefficients)


@pytest.mark.parametrize(
    "recipe",
    [GaussianBump(1.0, 0.7), PlaneWavePacket(0.5, 1.0, (2.0, 0.0, 0.0)), RandomSobolev(0.75, 0.05, 0.3)],
)
def test_same_seed_is_bit_identical(recipe):
    a = synthesize_initial_data(GRID, recipe, seed=7)
    b = synthesize_initial_data(GRID, recipe, seed=7)
    for x, y in zip(a, b):
        assert np.array_equal(x.coefficients, y.coefficients)
        assert x.hermitian_defect()[0] < 1e-15
        assert not np.any(x.coefficients[~GRID.dealias_mask])


def test_random_sobolev_seeds_differ():
    a, _ = synthesize_initial_data(GRID, RandomSobolev(0.75, 0.05, 0.3), seed=1)
    b, _ = synthesize_initial_data(GRID, RandomSobolev(0.75, 0.05, 0.3), seed=2)
    assert not np.array_equal(a.coefficients, b.coefficients)


def _refinement_ratio(order: float) -> float:
    recipe = RandomSobolev(0.75, 0.05, 1.0)
    norms = []
    for n in (32, 64):
        state = WaveState.from_recipe(Grid3(n, 2 * math.pi), recipe, seed=0)
        norms.append(sobolev_norm(state, order).u)
    return norms[1] / norms[0]


@pytest.mark.xfail(
    strict=True,
    reason="with roughness 0.05 the H^0.75 tail decays like K^-0.1, so doubling the band edge still adds ~20%",
)
def test_random_sobolev_refinement_below_its_order():
    assert _refinement_ratio(0.75) < 1.1


def test_random_sobolev_refinement_above_its_order():
    assert _refinement_ratio(0.9) > 1.2


def test_random_sobolev_refinement_grows_above_its_order():
    # the norm just above the regularity keeps growing under refinement
    assert _refinement_ratio(0.9) > _refinement_ratio(0.75) > 1.0


def test_recipe_from_dict_errors():
    with pytest.raises(ValueError, match="unknown recipe"):
        recipe_from_dict({"name": "nope"})
    with pytest.raises(ValueError, match="bad parameters"):
        recipe_from_dict({"name": "gaussian-bump", "colour": 1})
    r = recipe_from_dict({"name": "gaussian-bump", "amplitude": 2.0, "width": 0.5})
    assert r == GaussianBump(2.0, 0.5)
