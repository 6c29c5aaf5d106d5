"""The quadrilinear symbol of the mollified-energy increment.

With ξ₁ = -(ξ₂ + ξ₃ + ξ₄),

    mu(ξ₂, ξ₃, ξ₄) = 1 - m(ξ₂ + ξ₃ + ξ₄) / (m(ξ₂) m(ξ₃) m(ξ₄)).

The time derivative of E(Iu) is ∫ ∂_t Iu · ((Iu)³ - I(u³)) dx, which by
Plancherel is the quadrilinear form with symbol mu; the physical-space form
is what ``energy_increment_commutator`` evaluates.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .dynamics import SubInterval, Trajectory, WaveState, nonlinear_term, simpson_weights
from .functionals import energy_parts, mollified_energy
from .spectral import MultiplierProfile, SpectralField, inverse_transform, lp_decompose

__all__ = [
    "FrequencyTriple",
    "ShellQuadruple",
    "CASES",
    "mu",
    "mu_vectors",
    "classify_case",
    "classify_shells",
    "case_bound",
    "case_bounds",
    "shell_of",
    "SymbolConstants",
    "CaseStats",
    "SymbolReport",
    "verify_symbol_bounds",
    "case1b_decades",
    "increment_terms",
    "commutator_density",
    "energy_increment_commutator",
    "time_integral",
    "CommutatorCheck",
    "commutator_check",
    "BreakdownRow",
    "increment_shell_breakdown",
]

CASES = ("case1a", "case1b", "case2", "case3")


@dataclass(frozen=True)
class FrequencyTriple:
    xi2: tuple
    xi3: tuple
    xi4: tuple

    def __post_init__(self) -> None:
        for name in ("xi2", "xi3", "xi4"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or not np.isfinite(v).all():
                raise ValueError(f"{name} must be a finite 3-vector, got {getattr(self, name)!r}")
            object.__setattr__(self, name, tuple(float(x) for x in v))

    @property
    def xi1(self) -> tuple:
        return tuple(-(a + b + c) for a, b, c in zip(self.xi2, self.xi3, self.xi4))


@dataclass(frozen=True)
class ShellQuadruple:
    """Dyadic scales of the four factors; 0 marks the constant mode."""

    N1: float
    N2: float
    N3: float
    N4: float

    def __post_init__(self) -> None:
        for name in ("N1", "N2", "N3", "N4"):
            v = getattr(self, name)
            if not (v == 0 or (v > 0 and math.log2(v).is_integer())):
                raise ValueError(f"{name} must be dyadic (or 0), got {v!r}")

    def as_tuple(self) -> tuple:
        return (self.N1, self.N2, self.N3, self.N4)


@dataclass(frozen=True)
class SymbolConstants:
    """Comparability ratio for N₁* ~ N₂* and the low-frequency fraction c: shells with N₁* <= cN vanish."""

    comparability: float = 4.0
    low: float = 0.25


def mu_vectors(prof: MultiplierProfile, xi2: np.ndarray, xi3: np.ndarray, xi4: np.ndarray) -> np.ndarray:
    """mu for arrays of 3-vectors (last axis of length 3)."""
    n2, n3, n4 = (np.linalg.norm(x, axis=-1) for x in (xi2, xi3, xi4))
    n1 = np.linalg.norm(xi2 + xi3 + xi4, axis=-1)
    m = prof.m
    return 1.0 - m(n1) / (m(n2) * m(n3) * m(n4))


def mu(triple: FrequencyTriple, prof: MultiplierProfile) -> float:
    v = [np.array(x)[None, :] for x in (triple.xi2, triple.xi3, triple.xi4)]
    return float(mu_vectors(prof, *v)[0])


def shell_of(r: np.ndarray) -> np.ndarray:
    """Dyadic M with M <= r < 2M (0 for r = 0)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    out[pos] = 2.0 ** np.floor(np.log2(r[pos]))
    return out


def classify_shells(
    N1: np.ndarray,
    N2: np.ndarray,
    N3: np.ndarray,
    N4: np.ndarray,
    prof: MultiplierProfile,
    constants: SymbolConstants = SymbolConstants(),
) -> np.ndarray:
    """Vectorised ``classify_case``: array of labels, N2 >= N3 >= N4 assumed."""
    stack = np.sort(np.stack([N1, N2, N3, N4]), axis=0)[::-1]
    top, second = stack[0], stack[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        incomparable = top > constants.comparability * second
    vanishing = (top <= constants.low * prof.N) | incomparable
    high3 = N3 >= constants.low * prof.N
    labels = np.where(
        N1 > N2,
        "case2",
        np.where(N1 >= N3, np.where(high3, "case1a", "case1b"), "case3"),
    )
    return np.where(vanishing, "vanishing", labels)


def classify_case(
    shells: ShellQuadruple, prof: MultiplierProfile, constants: SymbolConstants = SymbolConstants()
) -> str:
    """vanishing, case1a, case1b, case2 or case3 for ordered shells N2 >= N3 >= N4.

    Ties N1 = N2 count as case 1; N3 >= c N selects sub-case a.
    """
    if not shells.N2 >= shells.N3 >= shells.N4:
        raise ValueError(f"shells must satisfy N2 >= N3 >= N4, got {shells.as_tuple()}")
    arrs = [np.array([v], dtype=float) for v in shells.as_tuple()]
    return str(classify_shells(*arrs, prof, constants)[0])


def case_bounds(
    labels: np.ndarray, N2: np.ndarray, N3: np.ndarray, N4: np.ndarray, N1: np.ndarray, prof: MultiplierProfile,
    constants: SymbolConstants = SymbolConstants(),
) -> np.ndarray:
    """Vectorised ``case_bound``; NaN where the label is vanishing."""
    m = prof.m
    b1a = 1.0 / (m(N3) * m(N4))
    with np.errstate(divide="ignore", invalid="ignore"):
        b1b = N3 / N2
    b3 = m(N1) / (m(N2) * m(N3) * m(N4))
    high3 = N3 >= constants.low * prof.N
    b2 = np.where(high3, b1a, b1b)
    out = np.full(np.shape(labels), np.nan)
    for label, b in (("case1a", b1a), ("case1b", b1b), ("case2", b2), ("case3", b3)):
        sel = labels == label
        out[sel] = np.broadcast_to(b, out.shape)[sel]
    return out


def case_bound(
    shells: ShellQuadruple, label: str, prof: MultiplierProfile, constants: SymbolConstants = SymbolConstants()
) -> float:
    """Pointwise bound B for the case: 1/(m(N3)m(N4)), N3/N2 or m(N1)/(m(N2)m(N3)m(N4)).

    Case 2 borrows the case-1 bound of its N3 regime.
    """
    if label == "vanishing":
        raise ValueError("the vanishing case has no bound; evaluate mu directly")
    if label not in CASES:
        raise ValueError(f"unknown case label {label!r}; expected one of {CASES}")
    arrs = [np.array([v], dtype=float) for v in (shells.N2, shells.N3, shells.N4, shells.N1)]
    return float(case_bounds(np.array([label]), *arrs, prof, constants)[0])


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _directions(rng: np.random.Generator, count: int) -> np.ndarray:
    v = rng.standard_normal((count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _in_shell(rng: np.random.Generator, exponents: np.ndarray) -> np.ndarray:
    M = 2.0 ** exponents
    r = M * (1.0 + rng.random(len(M)))
    return r[:, None] * _directions(rng, len(M))


def _draw(rng: np.random.Generator, case: str, count: int, jN: int) -> tuple:
    """Candidate (ξ₂, ξ₃, ξ₄) aimed at one case; exact labels come from classification."""
    ints = rng.integers
    if case == "case1a":
        j2 = ints(jN - 2, jN + 9, count)
        j3 = j2 - ints(0, np.maximum(j2 - (jN - 2), 0) + 1)
        j4 = j3 - ints(0, 9, count)
        return _in_shell(rng, j2), _in_shell(rng, j3), _in_shell(rng, j4)
    if case == "case1b":
        j2 = ints(jN - 2, jN + 9, count)
        j3 = ints(jN - 12, jN - 2, count)
        j4 = j3 - ints(0, 7, count)
        return _in_shell(rng, j2), _in_shell(rng, j3), _in_shell(rng, j4)
    if case == "case2":
        j2 = ints(jN - 2, jN + 9, count)
        j3 = j2 - ints(0, 2, count)
        j4 = j3 - ints(0, 3, count)
        x2 = _in_shell(rng, j2)
        # bias ξ₃ toward ξ₂ so the output frequency can climb a shell
        d = x2 / np.linalg.norm(x2, axis=1, keepdims=True) + 0.5 * _directions(rng, count)
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        x3 = (2.0**j3 * (1.0 + rng.random(count)))[:, None] * d
        return x2, x3, _in_shell(rng, j4)
    if case == "case3":
        j2 = ints(jN - 1, jN + 9, count)
        j1 = j2 - ints(1, 9, count)
        j4 = j2 - ints(1, 9, count)
        x2, x1, x4 = _in_shell(rng, j2), _in_shell(rng, j1), _in_shell(rng, j4)
        x3 = -(x1 + x2 + x4)
        return x2, x3, x4
    if case == "vanishing":
        j = ints(jN - 10, jN - 2, (3, count))
        return _in_shell(rng, j[0]), _in_shell(rng, j[1]), _in_shell(rng, j[2])
    raise ValueError(f"unknown case {case!r}")


def _sorted_triples(x2, x3, x4):
    """Reorder each triple so |ξ₂| >= |ξ₃| >= |ξ₄|."""
    stack = np.stack([x2, x3, x4], axis=1)
    order = np.argsort(-np.linalg.norm(stack, axis=2), axis=1, kind="stable")
    stack = np.take_along_axis(stack, order[:, :, None], axis=1)
    return stack[:, 0], stack[:, 1], stack[:, 2]


@dataclass
class CaseStats:
    case: str
    samples: int = 0
    max_ratio: float = 0.0
    shells: tuple = (math.nan,) * 4
    argmax: tuple = (math.nan,) * 9

    def row(self) -> list:
        return [self.case, *self.shells, self.max_ratio, *self.argmax, self.samples]


@dataclass
class SymbolReport:
    s: float
    N: float
    seed: int
    samples: int
    ceiling: float
    constants: SymbolConstants
    cases: dict = field(default_factory=dict)
    vanishing_max_mu: float = 0.0
    vanishing_samples: int = 0

    HEADER = (
        "case", "N1", "N2", "N3", "N4", "max_ratio",
        "xi2_1", "xi2_2", "xi2_3", "xi3_1", "xi3_2", "xi3_3", "xi4_1", "xi4_2", "xi4_3",
        "samples",
    )

    @property
    def fitted_constants(self) -> dict:
        return {c: st.max_ratio for c, st in self.cases.items()}

    @property
    def passed(self) -> bool:
        finite = all(math.isfinite(st.max_ratio) for st in self.cases.values())
        return finite and max(self.fitted_constants.values(), default=0.0) <= self.ceiling and self.vanishing_max_mu == 0.0

    def rows(self) -> list:
        rows = [self.cases[c].row() for c in sorted(self.cases)]
        rows.append(["vanishing", *(math.nan,) * 4, self.vanishing_max_mu, *(math.nan,) * 9, self.vanishing_samples])
        return rows


def verify_symbol_bounds(
    prof: MultiplierProfile,
    samples: int = 100_000,
    seed: int = 0,
    ceiling: float = 100.0,
    constants: SymbolConstants = SymbolConstants(),
    batch: int = 50_000,
) -> SymbolReport:
    """Sample ``samples`` classified triples per case and record max |mu| / B.

    Triples are drawn uniformly in radius within dyadic shells with uniform
    directions, reordered by size and classified; draws landing in another
    case are discarded.  The vanishing region is sampled too and must give
    mu = 0 exactly.
    """
    if samples < 1000:
        raise ValueError(f"need at least 1000 samples per case, got {samples}")
    rng = np.random.default_rng(seed)
    jN = int(round(math.log2(prof.N)))
    report = SymbolReport(prof.s, prof.N, seed, samples, ceiling, constants)
    for case in (*CASES, "vanishing"):
        stats = CaseStats(case)
        attempts = 0
        while stats.samples < samples:
            attempts += 1
            if attempts > 1000:
                raise RuntimeError(f"sampler could not reach {samples} {case} samples")
            x2, x3, x4 = _sorted_triples(*_draw(rng, case, batch, jN))
            n2, n3, n4 = (np.linalg.norm(x, axis=1) for x in (x2, x3, x4))
            n1 = np.linalg.norm(x2 + x3 + x4, axis=1)
            N1, N2, N3, N4 = (shell_of(v) for v in (n1, n2, n3, n4))
            labels = classify_shells(N1, N2, N3, N4, prof, constants)
            keep = np.flatnonzero(labels == case)[: samples - stats.samples]
            if keep.size == 0:
                continue
            values = mu_vectors(prof, x2[keep], x3[keep], x4[keep])
            stats.samples += keep.size
            if case == "vanishing":
                report.vanishing_max_mu = max(report.vanishing_max_mu, float(np.max(np.abs(values))))
                report.vanishing_samples += keep.size
                continue
            B = case_bounds(labels[keep], N2[keep], N3[keep], N4[keep], N1[keep], prof, constants)
            ratio = np.abs(values) / B
            k = int(np.argmax(ratio))
            if ratio[k] > stats.max_ratio:
                i = keep[k]
                stats.max_ratio = float(ratio[k])
                stats.shells = (float(N1[i]), float(N2[i]), float(N3[i]), float(N4[i]))
                stats.argmax = tuple(float(v) for v in np.concatenate([x2[i], x3[i], x4[i]]))
        if case != "vanishing":
            report.cases[case] = stats
    return report


def case1b_decades(
    prof: MultiplierProfile, decades: Sequence[int] = range(1, 11), samples: int = 20_000, seed: int = 0
) -> dict:
    """max |mu| / (N3/N2) with N2 = 8N and N3 = N2 2^-d, N4 <= N3, per decade d."""
    rng = np.random.default_rng(seed)
    j2 = int(round(math.log2(prof.N))) + 3
    out = {}
    for d in decades:
        x2 = _in_shell(rng, np.full(samples, j2))
        x3 = _in_shell(rng, np.full(samples, j2 - d))
        x4 = _in_shell(rng, j2 - d - rng.integers(0, 4, samples))
        values = mu_vectors(prof, x2, x3, x4)
        out[d] = float(np.max(np.abs(values)) / 2.0**-d)
    return out


# ---------------------------------------------------------------------------
# the increment as a commutator integral
# ---------------------------------------------------------------------------


def increment_terms(
    state: WaveState, prof: MultiplierProfile, coupling: float = 1.0, cube: Optional[np.ndarray] = None
) -> tuple[float, float]:
    """(E(Iu), d/dt E(Iu)) at one instant, sharing one cube of Iu between them.

    The rate is coupling * ∫ ∂_t Iu · ((Iu)³ - I P(u³)) dx; ``cube`` may pass in
    the coefficients of P(u³) when several profiles are evaluated on one state.
    """
    g = state.grid
    w = prof.weights(g)
    Iu = w * state.u.coefficients
    Iut = w * state.ut.coefficients
    quadratic = 0.5 * g.volume * (float(np.vdot(Iut, Iut).real) + float(np.vdot(g.xi_norm * Iu, g.xi_norm * Iu).real))
    if coupling == 0.0:
        return quadratic, 0.0
    cube_I = nonlinear_term(SpectralField(g, Iu), 1.0).coefficients
    if cube is None:
        cube = nonlinear_term(state.u, 1.0).coefficients
    if np.any(Iu[~g.dealias_mask]):
        quartic = energy_parts(state, prof, coupling).quartic
    else:
        # for band-limited Iu, <Iu, P((Iu)³)> is exactly the Riemann sum of (Iu)⁴
        quartic = 0.25 * coupling * g.volume * float(np.vdot(Iu, cube_I).real)
    rate = coupling * g.volume * float(np.vdot(Iut, cube_I - w * cube).real)
    return quadratic + quartic, rate


def commutator_density(state: WaveState, prof: MultiplierProfile, coupling: float = 1.0) -> float:
    """d/dt E(Iu) = coupling * ∫ ∂_t Iu · ((Iu)³ - I P(u³)) dx at one instant."""
    return increment_terms(state, prof, coupling)[1]


def energy_increment_commutator(traj: Trajectory, J: SubInterval, prof: MultiplierProfile) -> float:
    """∫_J ∫ ∂_t Iu ((Iu)³ - I(u³)) dx dt by Simpson's rule over the snapshots of J."""
    idx = traj.window(J)
    vals = [commutator_density(traj[i], prof, traj.coupling) for i in idx]
    return time_integral(np.array(vals), traj.times[idx.start : idx.stop])


def time_integral(values: np.ndarray, times: np.ndarray) -> float:
    """Composite Simpson rule on uniformly spaced snapshot samples."""
    return float(_time_weights(times) @ np.asarray(values))


def _time_weights(times: np.ndarray) -> np.ndarray:
    count = len(times)
    if count < 2:
        return np.zeros(count)
    return simpson_weights(count, (times[-1] - times[0]) / (count - 1))


class CommutatorCheck(NamedTuple):
    commutator: float
    delta_E: float
    mismatch: float


def commutator_check(traj: Trajectory, J: SubInterval, prof: MultiplierProfile) -> CommutatorCheck:
    """Compare the commutator integral with E(Iu(b)) - E(Iu(a))."""
    idx = traj.window(J)
    comm = energy_increment_commutator(traj, J, prof)
    dE = mollified_energy(traj[idx[-1]], prof, traj.coupling) - mollified_energy(traj[idx[0]], prof, traj.coupling)
    return CommutatorCheck(comm, dE, abs(comm - dE) / max(abs(dE), 1e-12))


@dataclass(frozen=True)
class BreakdownRow:
    shells: ShellQuadruple
    case: str
    contribution: float
    cumulative_fraction: float


def increment_shell_breakdown(
    traj: Trajectory,
    J: SubInterval,
    prof: MultiplierProfile,
    max_quadruples: int = 10_000,
    constants: SymbolConstants = SymbolConstants(),
) -> tuple[list[BreakdownRow], float]:
    """Split the commutator integral over Littlewood-Paley pieces.

    Every factor of ∂_t Iu · ((Iu)³ - I(u³)) is decomposed into shells (plus a
    constant-mode bucket); rows are labelled by (N1; N2 >= N3 >= N4) with the
    symmetric multiplicity folded in.  Only shells carrying data in J are
    enumerated, separately for the u factors and the ∂_t u factor.  Returns (rows sorted by |contribution|, total).
    """
    idx = traj.window(J)
    g = traj.grid
    w = prof.weights(g)
    coupling = traj.coupling
    active_u: set = set()
    active_ut: set = set()
    for i in idx:
        for field, active in ((traj[i].u, active_u), (traj[i].ut, active_ut)):
            for M, piece in lp_decompose(field):
                if np.any(piece.coefficients != 0):
                    active.add(M)
    shells = sorted(active_u)
    out_shells = sorted(active_ut)
    triples = list(itertools.combinations_with_replacement(range(len(shells)), 3))
    count = len(triples) * len(out_shells)
    if count > max_quadruples:
        raise ValueError(
            f"{count} shell quadruples exceed the limit of {max_quadruples}; use a coarser grid or a larger dyadic base"
        )
    times = traj.times[idx.start : idx.stop]
    weights = _time_weights(times)
    totals: Counter = Counter()
    total = 0.0
    for wt, i in zip(weights, idx):
        if wt == 0.0:
            continue
        st = traj[i]
        u_pieces = dict(lp_decompose(st.u))
        ut_pieces = dict(lp_decompose(st.ut))
        Iut = {M: w * ut_pieces[M].coefficients for M in out_shells}
        phys_u = {M: inverse_transform(u_pieces[M], check=False) for M in shells}
        phys_Iu = {M: inverse_transform(SpectralField(g, w * u_pieces[M].coefficients), check=False) for M in shells}
        for a, b, c in triples:
            Ma, Mb, Mc = shells[c], shells[b], shells[a]  # descending: N2 >= N3 >= N4
            mult = len(set(itertools.permutations((a, b, c))))
            prod_I = phys_Iu[Ma] * phys_Iu[Mb] * phys_Iu[Mc]
            prod = phys_u[Ma] * phys_u[Mb] * phys_u[Mc]
            diff = _project(g, prod_I) - w * _project(g, prod)
            for M1 in out_shells:
                val = coupling * mult * g.volume * float(np.vdot(Iut[M1], diff).real)
                totals[(M1, Ma, Mb, Mc)] += wt * val
        total += wt * commutator_density(st, prof, coupling)
    rows = []
    keys = sorted(totals, key=lambda k: -abs(totals[k]))
    running = 0.0
    for key in keys:
        value = totals[key]
        if value == 0.0:
            continue
        running += value
        sq = ShellQuadruple(*key)
        rows.append(BreakdownRow(sq, classify_case(sq, prof, constants), value, running / total if total else math.nan))
    return rows, total


def _project(grid, phys: np.ndarray) -> np.ndarray:
    from .spectral import forward_transform

    c = forward_transform(phys, grid).coefficients.copy()
    c[~grid.dealias_mask] = 0.0
    return c
