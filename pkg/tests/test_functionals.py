import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _helpers import random_field, single_mode
from cubicwave.dynamics import SubInterval, Trajectory, WaveState, default_dt, evolve
from cubicwave.functionals import (
    DEFAULT_PAIRS,
    AdmissiblePair,
    Rejection,
    admissible_check,
    energy,
    energy_parts,
    energy_trajectory,
    mixed_spacetime_norm,
    mollified_energy,
    nonlinear_gain_norm,
    sobolev_norm,
    z_norm,
)
from cubicwave.spectral import GaussianBump, Grid3, MultiplierProfile, RandomSobolev, SpectralField

GRID = Grid3(16, 2 * math.pi)


# --- energies -------------------------------------------------------------------


def test_zero_state_energies_vanish():
    z = WaveState.zeros(GRID)
    assert energy(z) == 0.0
    assert mollified_energy(z, MultiplierProfile(0.75, 2)) == 0.0


def test_plane_wave_velocity_energy():
    A = 0.3 + 0.4j
    ut = single_mode(GRID, (1, 2, 0), A)
    s = WaveState(0.0, SpectralField.zeros(GRID), ut)
    lattice_l2 = GRID.volume * 2 * abs(A) ** 2
    assert energy(s) == pytest.approx(0.5 * lattice_l2, rel=1e-14)


def test_quartic_term_of_constant_field():
    c = 0.5
    u = SpectralField(GRID, np.where(np.arange(GRID.n**3).reshape(GRID.shape) == 0, c, 0))
    parts = energy_parts(WaveState(0.0, u, SpectralField.zeros(GRID)))
    assert parts.quartic == pytest.approx(0.25 * c**4 * GRID.volume, rel=1e-13)
    assert parts.kinetic == parts.gradient == 0


def test_mollified_energy_equals_energy_below_cutoff(rng):
    s = WaveState.from_recipe(GRID, RandomSobolev(0.75, 0.05, 0.5), seed=1)
    prof = MultiplierProfile(0.75, 2.0 ** math.ceil(math.log2(GRID.xi_corner)))
    assert mollified_energy(s, prof) == pytest.approx(energy(s), rel=1e-12)


def test_mollified_energy_on_rough_state_is_finite():
    s = WaveState.from_recipe(Grid3(32, 2 * math.pi), RandomSobolev(0.75, 0.05, 2.0), seed=1)
    for N in (1, 2, 4):
        e_I = mollified_energy(s, MultiplierProfile(0.75, N))
        assert math.isfinite(e_I) and math.isfinite(energy(s))
        assert e_I < energy(s)


def test_energy_conserved_along_nonlinear_run():
    g = Grid3(32, 8.0)
    s = WaveState.from_recipe(g, GaussianBump(0.1, 1.0))
    traj = evolve(s, 5.0, stride=16)
    e = np.array([energy(x) for x in traj.states])
    assert np.abs(e / e[0] - 1).max() <= 1e-6


def test_energy_trajectory_rows():
    g = Grid3(16, 8.0)
    traj = evolve(WaveState.from_recipe(g, GaussianBump(0.5, 1.0)), 0.5, stride=4)
    prof = MultiplierProfile(0.75, 2)
    et = energy_trajectory(traj.states, prof)
    rows = list(et.rows())
    assert len(rows) == len(traj)
    assert rows[0][0] == 0.0 and rows[0][1] == pytest.approx(energy(traj[0]))
    assert et.HEADER == ("time", "E_u", "E_Iu", "Hs_norm", "Hs1_norm")


# --- Sobolev norms --------------------------------------------------------------


def test_order_zero_is_l2(rng):
    f = random_field(GRID, rng)
    s = WaveState(0.0, f, SpectralField.zeros(GRID))
    assert sobolev_norm(s, 0.0).u == pytest.approx(f.norm(), rel=1e-14)


def test_single_mode_sobolev_weight():
    f = single_mode(GRID, (3, 0, 0), 0.25)
    s = WaveState(0.0, f, SpectralField.zeros(GRID))
    xi = 3 * GRID.dk
    assert sobolev_norm(s, 0.6).u == pytest.approx((1 + xi) ** 0.6 * f.norm(), rel=1e-14)


def test_homogeneous_energy_norm_matches_quadratic_energy(rng):
    u = random_field(GRID, rng, mean_zero=True)
    ut = random_field(GRID, rng, mean_zero=True)
    s = WaveState(0.0, u, ut)
    n = sobolev_norm(s, 1.0, homogeneous=True)
    quad = energy(s, coupling=0.0)
    assert n.u**2 + n.ut**2 == pytest.approx(2 * quad, rel=1e-10)


def test_homogeneous_negative_order_rejects_mean():
    ut = SpectralField(GRID, np.where(np.arange(GRID.n**3).reshape(GRID.shape) == 0, 1.0, 0))
    s = WaveState(0.0, SpectralField.zeros(GRID), ut)
    with pytest.raises(ValueError, match="mean-zero"):
        sobolev_norm(s, 0.5, homogeneous=True)
    assert sobolev_norm(s, 0.5, homogeneous=True, zero_mode=0.0).ut == 0.0


# --- space-time norms -----------------------------------------------------------


def _constant_trajectory(state, count=5):
    return Trajectory([WaveState(0.1 * i, state.u, state.ut) for i in range(count)], 0.1, 1)


def test_zero_trajectory_norms_vanish():
    traj = _constant_trajectory(WaveState.zeros(GRID))
    assert mixed_spacetime_norm(traj, traj.span, 6, 6) == 0.0
    assert z_norm(traj, traj.span, MultiplierProfile(0.75, 2)).value == 0.0


def test_constant_in_time_sup_norm_is_snapshot_norm(rng):
    f = random_field(GRID, rng)
    traj = _constant_trajectory(WaveState(0.0, f, SpectralField.zeros(GRID)))
    phys = f.to_physical()
    expected = (GRID.cell_volume * np.sum(np.abs(phys) ** 4)) ** 0.25
    assert mixed_spacetime_norm(traj, traj.span, math.inf, 4) == pytest.approx(expected, rel=1e-13)


def test_free_wave_L6_matches_closed_form():
    # u = cos(w t) cos(k.x): ‖u(t)‖_6^6 = |cos wt|^6 L^3 (5/16); over whole periods the time integral is T (5/16)
    L = 2 * math.pi
    g = Grid3(16, L)
    u0 = single_mode(g, (1, 0, 0), 0.5)
    traj = evolve(WaveState(0.0, u0, SpectralField.zeros(g)), 2 * math.pi, g.dx / 64, stride=1, coupling=0.0)
    T = traj.times[-1]
    expected = (T * (5 / 16) * L**3 * (5 / 16)) ** (1 / 6)
    measured = mixed_spacetime_norm(traj, traj.span, 6, 6)
    assert measured == pytest.approx(expected, rel=1e-3)


@given(scale=st.floats(0.01, 100.0), q=st.sampled_from([4.0, 6.0, math.inf]), r=st.sampled_from([2.0, 3.0, 6.0]))
def test_spacetime_norm_is_homogeneous(scale, q, r):
    f = random_field(GRID, np.random.default_rng(0))
    a = _constant_trajectory(WaveState(0.0, f, f))
    b = _constant_trajectory(WaveState(0.0, f * scale, f * scale))
    assert mixed_spacetime_norm(b, b.span, q, r) == pytest.approx(scale * mixed_spacetime_norm(a, a.span, q, r), rel=1e-12)


def test_spacetime_norm_rejects_bad_exponents():
    traj = _constant_trajectory(WaveState.zeros(GRID))
    with pytest.raises(ValueError, match="r = inf"):
        mixed_spacetime_norm(traj, traj.span, 4, math.inf)
    with pytest.raises(ValueError, match="component"):
        mixed_spacetime_norm(traj, traj.span, 4, 4, component="v")


# --- admissibility -----------------------------------------------------------------


def test_energy_pair_has_m_zero():
    assert admissible_check(math.inf, 2) == 0.0


def test_six_six_pair():
    assert Fraction(admissible_check(6, 6)).limit_denominator(100) == Fraction(5, 6)


def test_four_four_pair():
    assert admissible_check(4, 4) == 0.5
    assert Fraction(1, 4) + Fraction(1, 4) <= Fraction(1, 2)


@pytest.mark.parametrize("q, r", [(Fraction(12, 5), 6), (2, 2), (4, math.inf), (3, 3)])
def test_non_admissible_pairs_are_rejected(q, r):
    out = admissible_check(q, r)
    assert isinstance(out, Rejection) and not out
    with pytest.raises(ValueError, match="not admissible"):
        AdmissiblePair(q, r)


@given(q=st.floats(2.01, 100), r=st.floats(2.0, 100))
def test_admissible_relations(q, r):
    m = admissible_check(q, r)
    if isinstance(m, Rejection):
        return
    assert 1 / q + 1 / r <= 0.5 + 1e-12
    assert 1 / q + 3 / r == pytest.approx(1.5 - m, abs=1e-12)


def test_default_pairs_are_admissible():
    assert AdmissiblePair(math.inf, 2) in DEFAULT_PAIRS
    for p in DEFAULT_PAIRS:
        assert not isinstance(admissible_check(p.q, p.r), Rejection)


# --- Z norm and nonlinear gain ---------------------------------------------------------


@pytest.fixture(scope="module")
def unit_run():
    g = Grid3(16, 8.0)
    s = WaveState.from_recipe(g, GaussianBump(0.8, 1.0))
    prof = MultiplierProfile(0.75, 1)
    traj = evolve(s, 8.0, default_dt(g) / 2, stride=2)
    return traj, prof


def test_energy_pair_term_is_sup_of_energy_norms(unit_run):
    traj, prof = unit_run
    J = SubInterval(0.0, 1.0)
    zn = z_norm(traj, J, prof, pairs=(AdmissiblePair(math.inf, 2),))
    w = prof.weights(traj.grid)
    vol = traj.grid.volume
    snaps = [traj[i] for i in traj.window(J)]
    grad = [math.sqrt(vol * np.sum(np.abs(traj.grid.xi_norm * w * s.u.coefficients) ** 2)) for s in snaps]
    vel = [math.sqrt(vol * np.sum(np.abs(w * s.ut.coefficients) ** 2)) for s in snaps]
    # each factor takes its own supremum in time
    assert zn.value == pytest.approx(max(grad) + max(vel), rel=1e-10)


def test_z_norm_is_order_one_on_unit_run(unit_run):
    traj, prof = unit_run
    J = SubInterval(0.0, 1.0)
    zn = z_norm(traj, J, prof)
    s0 = traj[0]
    w = prof.weights(traj.grid)
    vol = traj.grid.volume
    start = math.sqrt(vol * np.sum(np.abs(traj.grid.xi_norm * w * s0.u.coefficients) ** 2)) + math.sqrt(
        vol * np.sum(np.abs(w * s0.ut.coefficients) ** 2)
    )
    assert zn.value <= 10 * start


def test_z_norm_monotone_in_pair_set(unit_run):
    traj, prof = unit_run
    J = SubInterval(0.0, 1.0)
    values = [z_norm(traj, J, prof, DEFAULT_PAIRS[: k + 1]).value for k in range(len(DEFAULT_PAIRS))]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_gain_norm_vanishes_for_short_interval_and_linear_run(unit_run):
    traj, prof = unit_run
    ends = [traj.times[k] for k in (16, 8, 4, 2, 1)]
    values = [nonlinear_gain_norm(traj, SubInterval(0.0, b), prof).value for b in ends]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] <= 0.1 * values[0]
    lin = evolve(traj[0], 1.0, coupling=0.0)
    assert nonlinear_gain_norm(lin, lin.span, prof).value == 0.0


def test_gain_norm_growth_with_interval_length(unit_run):
    traj, prof = unit_run
    lengths = [1.0, 2.0, 4.0, 8.0]
    values = [nonlinear_gain_norm(traj, SubInterval(0.0, T), prof).value for T in lengths]
    for a, b in zip(values, values[1:]):
        assert b <= a * 2 ** (2 / 3) * 1.3
    slope = np.polyfit(np.log(lengths), np.log(values), 1)[0]
    assert slope <= 0.85
