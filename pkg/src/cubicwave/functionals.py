"""Energies, Sobolev norms, space-time Lebesgue norms and Strichartz bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import ClassVar, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .dynamics import SubInterval, Trajectory, WaveState, duhamel_sweep
from .spectral import MultiplierProfile, SpectralField, derivative_weights, inverse_transform

__all__ = [
    "EnergyParts",
    "energy_parts",
    "energy",
    "mollified_energy",
    "momentum",
    "SobolevNorm",
    "sobolev_norm",
    "mixed_spacetime_norm",
    "AdmissiblePair",
    "Rejection",
    "admissible_check",
    "DEFAULT_PAIRS",
    "ZNorm",
    "z_norm",
    "GainNorm",
    "nonlinear_gain_norm",
    "EnergyTrajectory",
    "energy_trajectory",
]


class EnergyParts(NamedTuple):
    kinetic: float
    gradient: float
    quartic: float

    @property
    def total(self) -> float:
        return self.kinetic + self.gradient + self.quartic


def _l2sq(c: np.ndarray, volume: float) -> float:
    return volume * float(np.vdot(c, c).real)


def energy_parts(state: WaveState, prof: Optional[MultiplierProfile] = None, coupling: float = 1.0) -> EnergyParts:
    """½∫(∂_t v)², ½∫|Dv|², (coupling/4)∫v⁴ for v = u, or v = Iu when ``prof`` is given.

    Quadratic terms are exact lattice sums; the quartic term is a Riemann sum.
    """
    g = state.grid
    u, ut = state.u.coefficients, state.ut.coefficients
    if prof is not None:
        w = prof.weights(g)
        u, ut = w * u, w * ut
    kinetic = 0.5 * _l2sq(ut, g.volume)
    gradient = 0.5 * _l2sq(g.xi_norm * u, g.volume)
    quartic = 0.0
    if coupling != 0.0:
        phys = inverse_transform(SpectralField(g, u), check=False)
        quartic = 0.25 * coupling * g.cell_volume * float(np.sum(phys**4))
    return EnergyParts(kinetic, gradient, quartic)


def energy(state: WaveState, coupling: float = 1.0) -> float:
    """E(u) = ½∫(∂_t u)² + ½∫|Du|² + ¼∫u⁴ (quartic term scaled by ``coupling``)."""
    return energy_parts(state, None, coupling).total


def mollified_energy(state: WaveState, prof: MultiplierProfile, coupling: float = 1.0) -> float:
    """E(Iu): the energy evaluated on the smoothed pair (Iu, ∂_t Iu)."""
    return energy_parts(state, prof, coupling).total


def momentum(state: WaveState) -> np.ndarray:
    """∫ ∂_t u ∇u dx, one component per axis."""
    g = state.grid
    ut = state.ut.coefficients
    return np.array(
        [g.volume * float(np.vdot(ut, 1j * x * state.u.coefficients).real) for x in g.xi]
    )


class SobolevNorm(NamedTuple):
    """‖u‖_{H^s}, ‖∂_t u‖_{H^{s-1}} and their sum."""

    u: float
    ut: float

    @property
    def total(self) -> float:
        return self.u + self.ut


def _weighted_norm(f: SpectralField, weights: np.ndarray) -> float:
    return math.sqrt(_l2sq(weights * f.coefficients, f.grid.volume))


def sobolev_norm(
    state: WaveState, s: float, homogeneous: bool = False, zero_mode: Optional[float] = None
) -> SobolevNorm:
    """‖(u, ∂_t u)‖ in H^s x H^{s-1} (or the homogeneous spaces).

    Inhomogeneous weights are (1 + |ξ|)^s.  Homogeneous negative powers need a
    mean-zero field unless ``zero_mode`` supplies the weight at ξ = 0.
    """
    g = state.grid
    if homogeneous:
        parts = []
        for f, sigma in ((state.u, s), (state.ut, s - 1)):
            if sigma < 0 and zero_mode is None and abs(f.coefficients[0, 0, 0]) > 0:
                raise ValueError(f"homogeneous norm of order {sigma} needs a mean-zero field")
            rule = 0.0 if zero_mode is None else zero_mode
            parts.append(_weighted_norm(f, derivative_weights(g, sigma, rule)))
        return SobolevNorm(*parts)
    base = 1.0 + g.xi_norm
    return SobolevNorm(_weighted_norm(state.u, base**s), _weighted_norm(state.ut, base ** (s - 1)))


# ---------------------------------------------------------------------------
# space-time norms
# ---------------------------------------------------------------------------


def _lr_norm(phys: np.ndarray, r: float, cell_volume: float) -> float:
    if r == 2:
        return math.sqrt(cell_volume * float(np.sum(phys * phys)))
    return (cell_volume * float(np.sum(np.abs(phys) ** r))) ** (1.0 / r)


def _time_norm(times: np.ndarray, values: np.ndarray, q: float) -> float:
    if math.isinf(q):
        return float(np.max(values))
    return float(np.trapezoid(values**q, times)) ** (1.0 / q)


def _check_exponents(q: float, r: float) -> None:
    if math.isinf(r):
        raise ValueError("r = inf is not supported; admissible space exponents lie in [2, inf)")
    if not r >= 1 or not q >= 1:
        raise ValueError(f"exponents must be >= 1, got q={q}, r={r}")


def _field_weights(grid, sigma: float, prof: Optional[MultiplierProfile], zero_mode: Optional[float]):
    w = derivative_weights(grid, sigma, zero_mode) if sigma != 0 else np.ones(grid.shape)
    return w * prof.weights(grid) if prof is not None else w


def mixed_spacetime_norm(
    traj: Trajectory,
    J: SubInterval,
    q: float,
    r: float,
    sigma: float = 0.0,
    prof: Optional[MultiplierProfile] = None,
    component: str = "u",
    zero_mode: Optional[float] = 0.0,
) -> float:
    """‖D^σ (I) v‖_{L^q_t(J) L^r_x} for v = u or ∂_t u over the snapshots of J.

    Spatial integrals are Riemann sums, time integrals the trapezoid rule on
    the snapshot lattice, q = inf a maximum over snapshots.  Negative σ drops
    the mean (``zero_mode``).
    """
    _check_exponents(q, r)
    if component not in ("u", "ut"):
        raise ValueError(f"component must be 'u' or 'ut', got {component!r}")
    idx = traj.window(J)
    g = traj.grid
    w = _field_weights(g, sigma, prof, zero_mode)
    values = np.empty(len(idx))
    for j, i in enumerate(idx):
        f = getattr(traj[i], component)
        values[j] = _lr_norm(inverse_transform(SpectralField(g, w * f.coefficients), check=False), r, g.cell_volume)
    return _time_norm(traj.times[idx.start : idx.stop], values, q)


# ---------------------------------------------------------------------------
# admissible pairs and the Z diagnostic
# ---------------------------------------------------------------------------


class Rejection(NamedTuple):
    reason: str

    def __bool__(self) -> bool:
        return False


def _exact(x) -> Fraction | float:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float) and x.is_integer():
        return Fraction(int(x))
    return x


def admissible_check(q, r) -> float | Rejection:
    """m = 3/2 - 1/q - 3/r when (q, r) is wave-admissible with 0 <= m <= 1.

    Integer and Fraction inputs are evaluated exactly.
    """
    if math.isinf(r) or r < 2:
        return Rejection(f"space exponent r={r} must lie in [2, inf)")
    if not (q > 2):
        return Rejection(f"time exponent q={q} must lie in (2, inf]")
    inv_q = 0 if math.isinf(q) else 1 / _exact(q)
    inv_r = 1 / _exact(r)
    if inv_q + inv_r > Fraction(1, 2):
        return Rejection(f"1/q + 1/r = {float(inv_q + inv_r):.6g} exceeds 1/2")
    m = Fraction(3, 2) - inv_q - 3 * inv_r
    if not 0 <= m <= 1:
        return Rejection(f"derivative index m = 3/2 - 1/q - 3/r = {float(m):.6g} lies outside [0, 1]")
    return float(m)


@dataclass(frozen=True)
class AdmissiblePair:
    q: float
    r: float
    m: Optional[float] = None

    def __post_init__(self) -> None:
        m = admissible_check(self.q, self.r)
        if isinstance(m, Rejection):
            raise ValueError(f"({self.q}, {self.r}) is not admissible: {m.reason}")
        if self.m is not None and not math.isclose(self.m, m, abs_tol=1e-12):
            raise ValueError(f"({self.q}, {self.r}) has m = {m}, not {self.m}")
        object.__setattr__(self, "m", m)


DEFAULT_PAIRS: tuple[AdmissiblePair, ...] = (
    AdmissiblePair(math.inf, 2),
    AdmissiblePair(8, Fraction(8, 3)),
    AdmissiblePair(6, 6),
    AdmissiblePair(4, 4),
    AdmissiblePair(6, 3),
    AdmissiblePair(Fraction(16, 7), 16),
)


class ZNorm(NamedTuple):
    value: float
    pair: Optional[AdmissiblePair]
    terms: dict


def z_norm(
    traj: Trajectory,
    J: SubInterval,
    prof: MultiplierProfile,
    pairs: Sequence[AdmissiblePair] = DEFAULT_PAIRS,
) -> ZNorm:
    """max over ``pairs`` of ‖D^{1-m} Iu‖_{L^q L^r} + ‖D^{-m} ∂_t Iu‖_{L^q L^r}."""
    if not pairs:
        raise ValueError("z_norm needs at least one admissible pair")
    terms = {}
    for p in pairs:
        q, r = float(p.q), float(p.r)
        terms[p] = mixed_spacetime_norm(traj, J, q, r, 1 - p.m, prof, "u") + mixed_spacetime_norm(
            traj, J, q, r, -p.m, prof, "ut"
        )
    best = max(terms, key=terms.get)
    return ZNorm(terms[best], best, terms)


class GainNorm(NamedTuple):
    value: float
    predicted: float
    reduced_order: bool


def nonlinear_gain_norm(traj: Trajectory, J: SubInterval, prof: MultiplierProfile) -> GainNorm:
    """‖∂_t I u^{nl,J}‖_{L^6 L^3} + ‖D I u^{nl,J}‖_{L^6 L^3}, paired with max(1, |J|)^{2/3}."""
    g = traj.grid
    w = prof.weights(g)
    wd = w * g.xi_norm
    times, a, b = [], [], []
    reduced = False
    for part in duhamel_sweep(traj, J):
        st = part.state
        times.append(st.t)
        a.append(_lr_norm(inverse_transform(SpectralField(g, w * st.ut.coefficients), check=False), 3, g.cell_volume))
        b.append(_lr_norm(inverse_transform(SpectralField(g, wd * st.u.coefficients), check=False), 3, g.cell_volume))
        reduced = part.reduced_order
    t = np.array(times)
    value = _time_norm(t, np.array(a), 6) + _time_norm(t, np.array(b), 6)
    length = t[-1] - t[0]
    return GainNorm(value, max(1.0, length) ** (2 / 3), reduced)


# ---------------------------------------------------------------------------
# per-snapshot energy table
# ---------------------------------------------------------------------------


@dataclass
class EnergyTrajectory:
    times: np.ndarray
    E_u: np.ndarray
    E_Iu: np.ndarray
    Hs_norm: np.ndarray
    Hs1_norm: np.ndarray

    HEADER: ClassVar[tuple] = ("time", "E_u", "E_Iu", "Hs_norm", "Hs1_norm")

    def rows(self) -> Iterable[tuple]:
        return zip(*(a.tolist() for a in (self.times, self.E_u, self.E_Iu, self.Hs_norm, self.Hs1_norm)))


def energy_trajectory(
    states: Iterable[WaveState], prof: MultiplierProfile, coupling: float = 1.0
) -> EnergyTrajectory:
    """E(u), E(Iu), ‖(u, ∂_t u)‖_{H^s x H^{s-1}} and the H^1 x L^2 norm per snapshot."""
    cols = [[], [], [], [], []]
    for st in states:
        for col, v in zip(
            cols,
            (
                st.t,
                energy(st, coupling),
                mollified_energy(st, prof, coupling),
                sobolev_norm(st, prof.s).total,
                sobolev_norm(st, 1.0).total,
            ),
        ):
            col.append(v)
    return EnergyTrajectory(*(np.array(c, dtype=float) for c in cols))
