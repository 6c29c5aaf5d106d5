import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from _helpers import single_mode
from cubicwave.dynamics import SubInterval, WaveState, default_dt, evolve
from cubicwave.functionals import mollified_energy
from cubicwave.spectral import GaussianBump, Grid3, MultiplierProfile, RandomSobolev, SpectralField
from cubicwave.symbol import (
    FrequencyTriple,
    ShellQuadruple,
    case1b_decades,
    case_bound,
    classify_case,
    commutator_check,
    commutator_density,
    energy_increment_commutator,
    increment_shell_breakdown,
    increment_terms,
    mu,
    mu_vectors,
    time_integral,
    verify_symbol_bounds,
)

PROF = MultiplierProfile(0.75, 16)
N = PROF.N


# --- the symbol ---------------------------------------------------------------------


def test_mu_vanishes_below_a_third_of_N():
    rng = np.random.default_rng(0)
    count = 100_000
    v = rng.standard_normal((3, count, 3))
    v /= np.linalg.norm(v, axis=2, keepdims=True)
    v *= (N / 3) * rng.random((3, count, 1))
    assert np.all(mu_vectors(PROF, v[0], v[1], v[2]) == 0.0)


def test_mu_cancels_when_only_one_frequency_is_live():
    t = FrequencyTriple((4 * N, 0, 0), (0, 0, 0), (0, 0, 0))
    assert mu(t, PROF) == 0.0


def test_mu_with_two_equal_high_frequencies():
    # m(2N) = 2^-(1-s) and m(4N) = 4^-(1-s), so m(4N) / m(2N)^2 = 1 exactly
    t = FrequencyTriple((2 * N, 0, 0), (2 * N, 0, 0), (0, 0, 0))
    expected = 1 - 4 ** (-0.25) / (2 ** (-0.25)) ** 2
    assert mu(t, PROF) == pytest.approx(expected, abs=1e-15)


def test_triple_validation_and_output_frequency():
    t = FrequencyTriple((1, 2, 3), (0, 1, 0), (0, 0, -1))
    assert t.xi1 == (-1.0, -3.0, -2.0)
    with pytest.raises(ValueError, match="3-vector"):
        FrequencyTriple((1, 2), (0, 0, 0), (0, 0, 0))


@given(
    perm=st.permutations([0, 1, 2]),
    seed=st.integers(0, 10_000),
)
def test_mu_symmetric_in_its_arguments(perm, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3, 1, 3)) * 4 * N
    a = mu_vectors(PROF, x[0], x[1], x[2])
    b = mu_vectors(PROF, x[perm[0]], x[perm[1]], x[perm[2]])
    assert a == pytest.approx(b, rel=1e-12)


# --- classification and bounds --------------------------------------------------------


def test_all_low_shells_vanish():
    q = ShellQuadruple(N / 4, N / 4, N / 8, 1)
    assert classify_case(q, PROF) == "vanishing"


def test_case_1a_example():
    q = ShellQuadruple(8 * N, 8 * N, 2 * N, N)
    assert classify_case(q, PROF) == "case1a"


def test_case_3_example():
    q = ShellQuadruple(2, 8 * N, 8 * N, 2)
    assert classify_case(q, PROF) == "case3"


def test_case_1b_and_2():
    assert classify_case(ShellQuadruple(8 * N, 8 * N, 1, 1), PROF) == "case1b"
    assert classify_case(ShellQuadruple(16 * N, 8 * N, 8 * N, 1), PROF) == "case2"


def test_classification_requires_ordered_shells():
    with pytest.raises(ValueError, match="N2 >= N3 >= N4"):
        classify_case(ShellQuadruple(1, 2, 4, 1), PROF)
    with pytest.raises(ValueError, match="dyadic"):
        ShellQuadruple(3, 1, 1, 1)


def test_case_1a_bound_is_one_below_N():
    assert case_bound(ShellQuadruple(8 * N, 8 * N, N, N / 2), "case1a", PROF) == 1.0


def test_case_1b_bound_is_shell_ratio():
    q = ShellQuadruple(1024 * N, 1024 * N, N, 1)
    assert case_bound(q, "case1b", PROF) == 2.0**-10


def test_case_3_bound():
    q = ShellQuadruple(N / 2, 8 * N, 8 * N, 1)
    m = PROF.scalar(8 * N)
    assert case_bound(q, "case3", PROF) == pytest.approx(1 / m**2, rel=1e-14)


def test_vanishing_case_has_no_bound():
    with pytest.raises(ValueError, match="vanishing"):
        case_bound(ShellQuadruple(1, 1, 1, 1), "vanishing", PROF)
    with pytest.raises(ValueError, match="unknown case"):
        case_bound(ShellQuadruple(1, 1, 1, 1), "case9", PROF)


# --- sampling reports -----------------------------------------------------------------


@pytest.fixture(scope="module")
def small_report():
    return verify_symbol_bounds(PROF, samples=5000, seed=11)


def test_vanishing_region_gives_exact_zeros(small_report):
    assert small_report.vanishing_samples == 5000
    assert small_report.vanishing_max_mu == 0.0
    assert small_report.passed


def test_report_is_deterministic(small_report):
    again = verify_symbol_bounds(PROF, samples=5000, seed=11)
    assert again.rows() == small_report.rows() or np.array_equal(
        np.array(again.rows(), dtype=object), np.array(small_report.rows(), dtype=object)
    )
    assert again.fitted_constants == small_report.fitted_constants


def test_report_rows_match_header(small_report):
    for row in small_report.rows():
        assert len(row) == len(small_report.HEADER)
    assert set(small_report.fitted_constants) == {"case1a", "case1b", "case2", "case3"}
    assert all(math.isfinite(v) for v in small_report.fitted_constants.values())


def test_case_1b_ratio_stays_bounded_as_N3_shrinks():
    decades = case1b_decades(PROF, samples=5000, seed=2)
    values = np.array([decades[d] for d in sorted(decades)])
    assert np.all(np.isfinite(values))
    assert values[-1] <= 2 * values[len(values) // 2]
    assert values.max() <= 10 * values[0]


def test_sampler_requires_enough_samples():
    with pytest.raises(ValueError, match="at least"):
        verify_symbol_bounds(PROF, samples=10)


# --- commutator form of the increment ---------------------------------------------------


def test_density_vanishes_for_low_band_data():
    g = Grid3(16, 2 * math.pi)
    u = single_mode(g, (1, 1, 0), 0.3)
    s = WaveState(0.0, u, single_mode(g, (1, 0, 0), 0.2))
    prof = MultiplierProfile(0.75, 16)
    assert commutator_density(s, prof) == 0.0


def test_increment_terms_match_mollified_energy():
    g = Grid3(16, 3.0)
    s = WaveState.from_recipe(g, RandomSobolev(0.75, 0.05, 0.5), seed=3)
    prof = MultiplierProfile(0.75, 4)
    e, _ = increment_terms(s, prof)
    assert e == pytest.approx(mollified_energy(s, prof), rel=1e-13)
    # out-of-band content takes the direct route and still agrees
    wide = WaveState(0.0, s.u + single_mode(g, (6, 0, 0), 0.01), s.ut)
    e, _ = increment_terms(wide, prof)
    assert e == pytest.approx(mollified_energy(wide, prof), rel=1e-13)


def test_linear_run_has_flat_mollified_energy():
    g = Grid3(16, 3.0)
    s = WaveState.from_recipe(g, RandomSobolev(0.75, 0.05, 0.5), seed=3)
    traj = evolve(s, 1.0, coupling=0.0)
    chk = commutator_check(traj, traj.span, MultiplierProfile(0.75, 2))
    assert chk.commutator == 0.0
    assert abs(chk.commutator - chk.delta_E) <= 1e-8


@pytest.fixture(scope="module")
def rough_traj():
    g = Grid3(32, math.pi)
    s = WaveState.from_recipe(g, RandomSobolev(0.75, 0.05, 0.05), seed=1)
    return evolve(s, 3.0, default_dt(g) / 4, stride=4)


def test_commutator_matches_energy_difference(rough_traj):
    for Nc in (2, 4, 8):
        chk = commutator_check(rough_traj, rough_traj.span, MultiplierProfile(0.75, Nc))
        assert chk.mismatch <= 1e-3


def test_time_integral_is_exact_for_cubics():
    t = np.linspace(0.0, 2.0, 8)
    assert time_integral(t**3, t) == pytest.approx(4.0, rel=1e-13)
    assert time_integral(np.array([1.0]), np.array([0.0])) == 0.0


def test_breakdown_rows_sum_to_total(rough_traj):
    prof = MultiplierProfile(0.75, 4)
    J = SubInterval(0.0, 0.5)
    rows, total = increment_shell_breakdown(rough_traj, J, prof)
    assert abs(sum(r.contribution for r in rows) - total) <= 1e-3 * abs(total)
    assert total == pytest.approx(energy_increment_commutator(rough_traj, J, prof), rel=1e-10)
    assert rows[-1].cumulative_fraction == pytest.approx(1.0, rel=1e-3)
    contributions = [abs(r.contribution) for r in rows]
    assert contributions == sorted(contributions, reverse=True)


def test_breakdown_low_quadruples_contribute_nothing(rough_traj):
    prof = MultiplierProfile(0.75, 4)
    rows, total = increment_shell_breakdown(rough_traj, SubInterval(0.0, 0.5), prof)
    low = [r for r in rows if max(r.shells.as_tuple()) <= prof.N / 4]
    assert all(abs(r.contribution) <= 1e-10 for r in low)


def test_breakdown_single_mode_touches_its_shell_only():
    g = Grid3(16, 2 * math.pi)
    u = single_mode(g, (3, 0, 0), 0.4)
    s = WaveState(0.0, u, SpectralField.zeros(g))
    traj = evolve(s, 0.5, stride=4)
    prof = MultiplierProfile(0.75, 2)
    rows, _ = increment_shell_breakdown(traj, traj.span, prof)
    shells_of_mode = {M for M in (2.0, 4.0)}  # |xi| = 3 sits in the psi supports of M = 2 and M = 4
    for r in rows:
        if abs(r.contribution) > 1e-14:
            assert set(r.shells.as_tuple()[1:]) <= shells_of_mode


def test_breakdown_rejects_too_many_quadruples(rough_traj):
    with pytest.raises(ValueError, match="exceed"):
        increment_shell_breakdown(rough_traj, rough_traj.span, MultiplierProfile(0.75, 4), max_quadruples=3)
