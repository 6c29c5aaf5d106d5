"""Fourier infrastructure on the periodic box [0, L)^3.

Coefficient convention
----------------------
A real field f sampled on the n^3 grid is stored as Fourier-series
coefficients over the full lattice k in {-n/2, ..., n/2-1}^3 (numpy FFT
order along each axis)::

    c_k = n^-3 * sum_j f(x_j) exp(-i xi_k . x_j),     xi_k = (2 pi / L) k
    f(x_j) = sum_k c_k exp(i xi_k . x_j)

so a single pair c_{+-k} = 1/2 is cos(xi_k . x).  Plancherel reads::

    sum_j |f(x_j)|^2 = n^3 * sum_k |c_k|^2
    int |f|^2 dx     = L^3 * sum_k |c_k|^2       (exact for grid polynomials)

Transforms go through real FFTs and the full lattice is rebuilt from the
half spectrum, so every field produced here is exactly Hermitian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid3",
    "SpectralField",
    "MultiplierProfile",
    "DyadicShell",
    "forward_transform",
    "inverse_transform",
    "apply_radial_multiplier",
    "fractional_derivative",
    "smoothing_I",
    "lp_project",
    "lp_shells",
    "lp_decompose",
    "phi",
    "psi",
    "GaussianBump",
    "PlaneWavePacket",
    "RandomSobolev",
    "SnapshotData",
    "RECIPES",
    "recipe_from_dict",
    "synthesize_initial_data",
]

SYMMETRY_TOL = 1e-9


def _is_power_of_two(x: float) -> bool:
    if x <= 0 or not math.isfinite(x):
        return False
    e = math.log2(x)
    return abs(e - round(e)) < 1e-12


@dataclass(frozen=True)
class Grid3:
    """Uniform periodic grid with ``n`` points per axis on a box of side ``box_length``."""

    n: int
    box_length: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or not _is_power_of_two(self.n):
            raise ValueError(f"grid size n must be a power of two >= 8, got {self.n!r}")
        if not (self.box_length > 0 and math.isfinite(self.box_length)):
            raise ValueError(f"box_length must be positive and finite, got {self.box_length!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def dk(self) -> float:
        """Lattice spacing 2 pi / L in frequency space."""
        return 2.0 * math.pi / self.box_length

    @property
    def xi_max(self) -> float:
        """Axis Nyquist magnitude (2 pi / L) * n/2."""
        return self.dk * self.n / 2

    @property
    def xi_corner(self) -> float:
        """Largest |xi| on the lattice (the corner k = (-n/2, -n/2, -n/2))."""
        return math.sqrt(3.0) * self.xi_max

    @property
    def dealias_cutoff(self) -> int:
        """Largest retained |k|_inf under exact cubic dealiasing (strictly below n/4)."""
        return self.n // 4 - 1

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers along one axis in FFT order."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        k.flags.writeable = False
        return k

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable frequency components (xi_1, xi_2, xi_3)."""
        w = self.dk * self.k.astype(float)
        return (w[:, None, None], w[None, :, None], w[None, None, :])

    @cached_property
    def xi_norm(self) -> np.ndarray:
        x1, x2, x3 = self.xi
        r = np.sqrt(x1**2 + x2**2 + x3**2)
        r.flags.writeable = False
        return r

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.abs(self.k) <= self.dealias_cutoff
        mask = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
        mask.flags.writeable = False
        return mask

    @cached_property
    def neg_index(self) -> np.ndarray:
        """Index map i -> index of -k_i (mod n)."""
        return (-np.arange(self.n)) % self.n

    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = self.dx * np.arange(self.n)
        return (x[:, None, None], x[None, :, None], x[None, None, :])

    def iter_lattice(self):
        """Every lattice point k, ascending in each axis, row-major."""
        ks = range(-self.n // 2, self.n // 2)
        for a in ks:
            for b in ks:
                for c in ks:
                    yield (a, b, c)

    def signed_k(self, index) -> tuple[int, int, int]:
        """Signed wavenumber triple of an array index."""
        return tuple(int(self.k[i]) for i in index)

    def scaled(self, lam: float) -> "Grid3":
        """Same resolution, box side multiplied by ``lam``."""
        return Grid3(self.n, self.box_length * lam)


def _negate(c: np.ndarray, grid: Grid3) -> np.ndarray:
    """Return c(-k) on the full lattice."""
    neg = grid.neg_index
    return c[np.ix_(neg, neg, neg)]


def _full_from_half(half: np.ndarray, grid: Grid3) -> np.ndarray:
    n = grid.n
    h = n // 2 + 1
    full = np.empty(grid.shape, dtype=complex)
    full[..., :h] = half
    neg = grid.neg_index
    tail = n - np.arange(h, n)
    full[..., h:] = np.conj(half[np.ix_(neg, neg, tail)])
    return full


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real scalar field held as Fourier coefficients on ``grid``."""

    grid: Grid3
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient array has shape {c.shape}, expected {self.grid.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, grid: Grid3) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def from_physical(cls, samples, grid: Grid3) -> "SpectralField":
        return forward_transform(samples, grid)

    def to_physical(self, check: bool = True) -> np.ndarray:
        return inverse_transform(self, check=check)

    def _like(self, c: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, c)

    def _other(self, other: "SpectralField") -> np.ndarray:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return other.coefficients

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self._like(self.coefficients + self._other(other))

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self._like(self.coefficients - self._other(other))

    def __neg__(self) -> "SpectralField":
        return self._like(-self.coefficients)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self._like(self.coefficients * float(scalar))

    __rmul__ = __mul__

    @property
    def mean(self) -> float:
        return float(self.coefficients[0, 0, 0].real)

    def norm(self) -> float:
        """Continuum L^2 norm on the box."""
        return math.sqrt(self.grid.volume * float(np.vdot(self.coefficients, self.coefficients).real))

    def coefficient_norm(self) -> float:
        """Plain l^2 norm of the coefficient array."""
        return float(np.linalg.norm(self.coefficients.ravel()))

    def hermitian_defect(self) -> tuple[float, tuple[int, int, int]]:
        """Relative size of the worst violation of c(-k) = conj(c(k)) and where it sits."""
        c = self.coefficients
        d = np.abs(c - np.conj(_negate(c, self.grid)))
        worst = np.unravel_index(int(np.argmax(d)), d.shape)
        scale = self.coefficient_norm()
        rel = float(d[worst]) / scale if scale > 0 else float(d[worst])
        return rel, self.grid.signed_k(worst)

    def symmetrized(self) -> "SpectralField":
        c = self.coefficients
        return self._like(0.5 * (c + np.conj(_negate(c, self.grid))))

    def dealiased(self) -> "SpectralField":
        return self._like(np.where(self.grid.dealias_mask, self.coefficients, 0.0))

    def band_limit(self) -> float:
        """Largest |xi| carrying a nonzero coefficient (0 for constants)."""
        nz = self.coefficients != 0
        if not nz.any():
            return 0.0
        return float(self.grid.xi_norm[nz].max())


def forward_transform(samples, grid: Grid3) -> SpectralField:
    """Physical samples (n^3 values, any shape of that size) to coefficients."""
    a = np.asarray(samples, dtype=float)
    if a.size != grid.n**3:
        raise ValueError(f"expected {grid.n ** 3} samples, got {a.size}")
    a = a.reshape(grid.shape)
    bad = ~np.isfinite(a)
    if bad.any():
        first = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"non-finite sample {a[first]!r} at index {first}")
    half = sfft.rfftn(a) / grid.n**3
    return SpectralField(grid, _full_from_half(half, grid))


def inverse_transform(fld: SpectralField, check: bool = True) -> np.ndarray:
    """Coefficients to real physical samples of shape (n, n, n).

    With ``check`` the Hermitian symmetry is verified to SYMMETRY_TOL first.
    """
    grid = fld.grid
    if check:
        rel, worst = fld.hermitian_defect()
        if rel > SYMMETRY_TOL:
            raise ValueError(f"coefficients are not Hermitian: relative defect {rel:.3e} at k={worst}")
    half = fld.coefficients[..., : grid.n // 2 + 1]
    return sfft.irfftn(half, s=grid.shape) * grid.n**3


Symbol = Union[Callable[[np.ndarray], np.ndarray], np.ndarray]


def _symbol_values(grid: Grid3, symbol: Symbol, zero_value: float | None) -> np.ndarray:
    if callable(symbol):
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.asarray(symbol(grid.xi_norm), dtype=float)
    else:
        w = np.asarray(symbol, dtype=float)
    w = np.broadcast_to(w, grid.shape)
    if zero_value is not None:
        w = w.copy()
        w[0, 0, 0] = zero_value
    bad = ~np.isfinite(w)
    if bad.any():
        first = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"multiplier is not finite ({w[first]}) at k={grid.signed_k(first)}")
    return w


def apply_radial_multiplier(fld: SpectralField, symbol: Symbol, zero_value: float | None = None) -> SpectralField:
    """Multiply each coefficient by symbol(|xi_k|).

    ``symbol`` is a vectorised function of |xi| or a precomputed lattice
    array.  ``zero_value`` overrides the value at xi = 0.
    """
    w = _symbol_values(fld.grid, symbol, zero_value)
    return SpectralField(fld.grid, fld.coefficients * w)


@lru_cache(maxsize=32)
def _power_weights(n: int, L: float, sigma: float) -> np.ndarray:
    r = Grid3(n, L).xi_norm
    with np.errstate(divide="ignore"):
        w = r**sigma
    w[0, 0, 0] = 0.0 if sigma > 0 else (1.0 if sigma == 0 else np.inf)
    w.flags.writeable = False
    return w


def derivative_weights(grid: Grid3, sigma: float, zero_mode: float | None = None) -> np.ndarray:
    """|xi|^sigma on the lattice; for sigma < 0 the xi = 0 entry is ``zero_mode`` (inf if None)."""
    w = _power_weights(grid.n, grid.box_length, float(sigma))
    if sigma < 0 and zero_mode is not None:
        w = w.copy()
        w[0, 0, 0] = zero_mode
    return w


def fractional_derivative(fld: SpectralField, sigma: float, zero_mode: float | None = None) -> SpectralField:
    """D^sigma, the Fourier multiplier |xi|^sigma.

    For sigma < 0 the mean of ``fld`` must vanish unless ``zero_mode`` supplies
    the multiplier value at xi = 0 (0.0 drops the mean).
    """
    if sigma < 0 and zero_mode is None:
        if fld.coefficients[0, 0, 0] != 0:
            raise ValueError(
                f"D^{sigma} of a field with nonzero mean {fld.mean!r}; pass zero_mode to define the k=0 rule"
            )
        zero_mode = 0.0
    w = derivative_weights(fld.grid, sigma, zero_mode)
    return SpectralField(fld.grid, fld.coefficients * w)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    # C^2 quintic step, 0 -> 1 on [0, 1]
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def phi(r) -> np.ndarray:
    """Littlewood-Paley bump: 1 on r <= 1, 0 on r >= 2, C^2 and monotone in log r between."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    out[r <= 1.0] = 1.0
    mid = (r > 1.0) & (r < 2.0)
    out[mid] = 1.0 - _smoothstep(np.log2(r[mid]))
    return out


def psi(r) -> np.ndarray:
    """Annulus profile phi(r) - phi(2r), supported in 1/2 < r < 2."""
    r = np.asarray(r, dtype=float)
    return phi(r) - phi(2.0 * r)


@dataclass(frozen=True)
class MultiplierProfile:
    """Symbol m(xi) = eta(xi / N) of the smoothing operator I.

    eta is 1 on |xi| <= 1 and |xi|^-(1-s) on |xi| >= 2.  In between, log m is a
    quintic in log|xi| matching value, slope and curvature at both ends, which
    keeps m C^2 and strictly decreasing across the transition.
    """

    s: float
    N: float
    transition: str = "quintic-log"

    def __post_init__(self) -> None:
        if not (0.5 < self.s < 1.0):
            raise ValueError(f"s must lie in the open interval (1/2, 1), got {self.s!r}")
        if not (self.N >= 1 and _is_power_of_two(self.N)):
            raise ValueError(f"cutoff N must be a dyadic number >= 1, got {self.N!r}")
        if self.transition != "quintic-log":
            raise ValueError(f"unknown eta transition {self.transition!r}; only 'quintic-log' is available")
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "N", float(self.N))

    def m(self, xi) -> np.ndarray:
        """m as a function of |xi| (vectorised)."""
        r = np.abs(np.asarray(xi, dtype=float)) / self.N
        out = np.ones_like(r)
        a = 1.0 - self.s
        hi = r >= 2.0
        out[hi] = r[hi] ** (-a)
        mid = (r > 1.0) & (r < 2.0)
        t = np.log2(r[mid])
        h = t**3 * (6.0 - 8.0 * t + 3.0 * t**2)
        out[mid] = np.exp(-a * math.log(2.0) * h)
        return out

    __call__ = m

    def scalar(self, xi: float) -> float:
        return float(self.m(np.array([xi]))[0])

    def weights(self, grid: Grid3) -> np.ndarray:
        """m on the lattice of ``grid`` (cached)."""
        return _profile_weights(self.s, self.N, grid.n, grid.box_length)


@lru_cache(maxsize=32)
def _profile_weights(s: float, N: float, n: int, L: float) -> np.ndarray:
    w = MultiplierProfile(s, N).m(Grid3(n, L).xi_norm)
    w.flags.writeable = False
    return w


def smoothing_I(fld: SpectralField, prof: MultiplierProfile) -> SpectralField:
    """The operator I: multiply coefficients by m(xi)."""
    return SpectralField(fld.grid, fld.coefficients * prof.weights(fld.grid))


@dataclass(frozen=True)
class DyadicShell:
    """Frequency scale M in 2^Z of a Littlewood-Paley piece."""

    M: float

    def __post_init__(self) -> None:
        if not _is_power_of_two(self.M):
            raise ValueError(f"shell scale must be an integer power of two, got {self.M!r}")
        object.__setattr__(self, "M", float(self.M))

    @property
    def exponent(self) -> int:
        return int(round(math.log2(self.M)))


def lp_project(fld: SpectralField, shell: DyadicShell, mode: str = "at") -> SpectralField:
    """P_M (``at``), P_{<=M} (``below``) or P_{>M} (``above``).

    ``above`` is computed as f - P_{<=M} f so the two halves sum to f.
    """
    r = fld.grid.xi_norm / shell.M
    if mode == "at":
        return SpectralField(fld.grid, fld.coefficients * psi(r))
    below = fld.coefficients * phi(r)
    if mode == "below":
        return SpectralField(fld.grid, below)
    if mode == "above":
        return SpectralField(fld.grid, fld.coefficients - below)
    raise ValueError(f"unknown projection mode {mode!r}; expected 'at', 'below' or 'above'")


def lp_shells(grid: Grid3) -> list[DyadicShell]:
    """Dyadic shells whose annuli cover every nonzero lattice frequency.

    The lowest is the largest 2^j <= 2 pi / L, the highest the smallest 2^j
    >= the corner frequency; on the lattice their psi's sum to one.
    """
    jlo = math.floor(math.log2(grid.dk) + 1e-12)
    jhi = math.ceil(math.log2(grid.xi_corner) - 1e-12)
    return [DyadicShell(2.0**j) for j in range(jlo, jhi + 1)]


def lp_decompose(fld: SpectralField) -> list[tuple[float, SpectralField]]:
    """Pieces (M, P_M f) over ``lp_shells`` preceded by (0.0, mean of f).

    psi vanishes at xi = 0, so the constant mode is carried by its own bucket;
    the pieces sum to f.
    """
    c0 = np.zeros(fld.grid.shape, dtype=complex)
    c0[0, 0, 0] = fld.coefficients[0, 0, 0]
    pieces = [(0.0, SpectralField(fld.grid, c0))]
    for shell in lp_shells(fld.grid):
        pieces.append((shell.M, lp_project(fld, shell, "at")))
    return pieces


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def _displacement(grid: Grid3, center) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # minimum-image offset from the box centre shifted by ``center``
    L = grid.box_length
    out = []
    for x, c in zip(grid.coordinates(), center):
        out.append(np.mod(x - L / 2 - c + L / 2, L) - L / 2)
    return tuple(out)


@dataclass(frozen=True)
class GaussianBump:
    """u0 = A exp(-|x - c|^2 / w^2), u1 = B exp(-|x - c|^2 / w^2); c relative to the box centre."""

    amplitude: float
    width: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    velocity_amplitude: float = 0.0
    name = "gaussian-bump"
    analytic = True

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ValueError(f"gaussian-bump width must be positive, got {self.width!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def support_radius(self) -> float:
        return self.width

    def scaled(self, lam: float) -> "GaussianBump":
        return GaussianBump(
            self.amplitude / lam,
            self.width * lam,
            tuple(lam * c for c in self.center),
            self.velocity_amplitude / lam**2,
        )

    def physical(self, grid: Grid3, rng) -> tuple[np.ndarray, np.ndarray]:
        d1, d2, d3 = _displacement(grid, self.center)
        g = np.exp(-(d1**2 + d2**2 + d3**2) / self.width**2)
        return self.amplitude * g, self.velocity_amplitude * g

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "amplitude": self.amplitude,
            "width": self.width,
            "center": list(self.center),
            "velocity_amplitude": self.velocity_amplitude,
        }


@dataclass(frozen=True)
class PlaneWavePacket:
    """Gaussian envelope times cos(k0 . (x - c)), launched along k0.

    u1 = A |k0| env sin(k0 . (x - c)) makes the packet travel in the +k0 direction.
    """

    amplitude: float
    width: float
    wavevector: tuple[float, float, float] = (1.0, 0.0, 0.0)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    name = "plane-wave-packet"
    analytic = True

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ValueError(f"plane-wave-packet width must be positive, got {self.width!r}")
        object.__setattr__(self, "wavevector", tuple(float(c) for c in self.wavevector))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def support_radius(self) -> float:
        return self.width

    def scaled(self, lam: float) -> "PlaneWavePacket":
        return PlaneWavePacket(
            self.amplitude / lam,
            self.width * lam,
            tuple(k / lam for k in self.wavevector),
            tuple(lam * c for c in self.center),
        )

    def physical(self, grid: Grid3, rng) -> tuple[np.ndarray, np.ndarray]:
        d = _displacement(grid, self.center)
        env = np.exp(-(d[0] ** 2 + d[1] ** 2 + d[2] ** 2) / self.width**2)
        phase = sum(k * x for k, x in zip(self.wavevector, d))
        speed = math.sqrt(sum(k * k for k in self.wavevector))
        return self.amplitude * env * np.cos(phase), self.amplitude * speed * env * np.sin(phase)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "amplitude": self.amplitude,
            "width": self.width,
            "wavevector": list(self.wavevector),
            "center": list(self.center),
        }


@dataclass(frozen=True)
class RandomSobolev:
    """Random-phase data of prescribed Sobolev regularity.

    |c(xi)| = amplitude (1 + scale |xi|)^-(s + 3/2 + roughness) for u0 and
    velocity * amplitude / scale * (1 + scale |xi|)^-(s + 1/2 + roughness) for
    u1, independent uniform phases, mean zero.  ``scale`` is the frequency
    dilation used by the scaling symmetry; the box carries the rest.
    """

    s: float
    roughness: float
    amplitude: float
    scale: float = 1.0
    velocity: float = 1.0
    name = "random-sobolev"
    analytic = True

    def __post_init__(self) -> None:
        if not self.roughness > 0:
            raise ValueError(f"random-sobolev roughness must be positive, got {self.roughness!r}")
        if not self.scale > 0:
            raise ValueError(f"random-sobolev scale must be positive, got {self.scale!r}")

    @property
    def support_radius(self) -> float:
        return math.inf

    def scaled(self, lam: float) -> "RandomSobolev":
        return RandomSobolev(self.s, self.roughness, self.amplitude / lam, self.scale * lam, self.velocity)

    def coefficients(self, grid: Grid3, rng) -> tuple[np.ndarray, np.ndarray]:
        r = 1.0 + self.scale * grid.xi_norm
        decay = self.s + 1.5 + self.roughness
        mag0 = self.amplitude * r ** (-decay)
        mag1 = self.velocity * self.amplitude / self.scale * r ** (-(decay - 1.0))
        out = []
        for mag in (mag0, mag1):
            theta = rng.uniform(0.0, 2.0 * math.pi, grid.shape)
            theta = theta - _negate(theta, grid)
            c = np.where(grid.dealias_mask, mag * np.exp(1j * theta), 0.0)
            c[0, 0, 0] = 0.0
            out.append(c)
        return out[0], out[1]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "s": self.s,
            "roughness": self.roughness,
            "amplitude": self.amplitude,
            "scale": self.scale,
            "velocity": self.velocity,
        }


@dataclass(frozen=True)
class SnapshotData:
    """Data read back from a binary snapshot; usable as-is but not rescalable."""

    path: str
    name = "snapshot"
    analytic = False

    def scaled(self, lam: float):
        raise ValueError("snapshot data cannot be rescaled; use an analytic profile (gaussian-bump, ...)")

    def to_dict(self) -> dict:
        return {"name": self.name, "path": self.path}


RECIPES = {
    "gaussian-bump": GaussianBump,
    "plane-wave-packet": PlaneWavePacket,
    "random-sobolev": RandomSobolev,
    "snapshot": SnapshotData,
}


def recipe_from_dict(entry: dict):
    """Build a recipe from ``{"name": ..., **params}``."""
    params = dict(entry)
    name = params.pop("name", None)
    if name not in RECIPES:
        raise ValueError(f"unknown recipe {name!r}; valid recipes: {', '.join(sorted(RECIPES))}")
    for key in ("center", "wavevector"):
        if key in params:
            params[key] = tuple(params[key])
    try:
        return RECIPES[name](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for recipe {name!r}: {exc}") from None


def synthesize_initial_data(grid: Grid3, recipe, seed: int = 0) -> tuple[SpectralField, SpectralField]:
    """(u0, u1) for ``recipe`` on ``grid``, projected onto the dealiased lattice.

    Deterministic in ``seed``; only random-sobolev consumes randomness.
    """
    if isinstance(recipe, dict):
        recipe = recipe_from_dict(recipe)
    if isinstance(recipe, SnapshotData):
        from .io import read_snapshot

        state, _ = read_snapshot(recipe.path)
        if state.u.grid != grid:
            raise ValueError(f"snapshot grid {state.u.grid} does not match requested grid {grid}")
        return state.u, state.ut
    rng = np.random.default_rng(seed)
    if isinstance(recipe, RandomSobolev):
        c0, c1 = recipe.coefficients(grid, rng)
        return SpectralField(grid, c0), SpectralField(grid, c1)
    if not hasattr(recipe, "physical"):
        raise ValueError(f"unknown recipe {recipe!r}; valid recipes: {', '.join(sorted(RECIPES))}")
    p0, p1 = recipe.physical(grid, rng)
    u0 = forward_transform(np.broadcast_to(p0, grid.shape), grid).dealiased()
    u1 = forward_transform(np.broadcast_to(p1, grid.shape), grid).dealiased()
    return u0, u1
