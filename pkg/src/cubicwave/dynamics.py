"""Time evolution of  u_tt - Laplace(u) = -g u^3  on the periodic box.

The linear flow is applied exactly in Fourier space; the cubic term enters
through Strang splitting.  Nonlinear products use half-Nyquist truncation
(|k|_inf < n/4), which is alias-free for a cubic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Iterator, NamedTuple, Optional

import numpy as np
import scipy.fft as sfft

from .spectral import Grid3, SpectralField, _full_from_half, synthesize_initial_data

__all__ = [
    "WaveState",
    "Trajectory",
    "SubInterval",
    "BlowUpError",
    "EvolutionAborted",
    "DuhamelPart",
    "stability_bound",
    "default_dt",
    "linear_propagate",
    "nonlinear_term",
    "nonlinear_kick",
    "step_strang",
    "schedule",
    "integrate",
    "evolve",
    "adapted_linear_part",
    "duhamel_nonlinear_part",
    "duhamel_sweep",
    "simpson_weights",
]

TIME_TOL = 1e-9


class BlowUpError(ArithmeticError):
    """The physical-space cube overflowed or a field became non-finite."""


class EvolutionAborted(RuntimeError):
    def __init__(self, message: str, last_good_index: int, trajectory: "Trajectory | None" = None):
        super().__init__(message)
        self.last_good_index = last_good_index
        self.trajectory = trajectory


@dataclass(frozen=True, eq=False)
class WaveState:
    """(u, u_t) at time t."""

    t: float
    u: SpectralField
    ut: SpectralField

    def __post_init__(self) -> None:
        if self.u.grid != self.ut.grid:
            raise ValueError("u and u_t live on different grids")

    @property
    def grid(self) -> Grid3:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: Grid3, t: float = 0.0) -> "WaveState":
        z = SpectralField.zeros(grid)
        return cls(t, z, z)

    @classmethod
    def from_recipe(cls, grid: Grid3, recipe, seed: int = 0, t: float = 0.0) -> "WaveState":
        u0, u1 = synthesize_initial_data(grid, recipe, seed)
        return cls(t, u0, u1)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.u.coefficients).all() and np.isfinite(self.ut.coefficients).all())


def stability_bound(grid: Grid3) -> float:
    """Largest accepted Strang step, 0.5 * L / n."""
    return 0.5 * grid.dx


def default_dt(grid: Grid3) -> float:
    return 0.25 * stability_bound(grid)


def _rotation_arrays(w: np.ndarray, tau: float):
    wt = w * tau
    c = np.cos(wt)
    sn = np.sin(wt)
    with np.errstate(invalid="ignore", divide="ignore"):
        sw = np.where(w > 0, sn / np.where(w > 0, w, 1.0), tau)
    ws = -w * sn
    for a in (c, sw, ws):
        a.flags.writeable = False
    return c, sw, ws


@lru_cache(maxsize=16)
def _rotation(n: int, L: float, tau: float):
    return _rotation_arrays(Grid3(n, L).xi_norm, tau)


@lru_cache(maxsize=16)
def _rotation_compact(n: int, L: float, tau: float):
    return _rotation_arrays(_compress(Grid3(n, L).xi_norm, n), tau)


def _rotate(grid: Grid3, tau: float, U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if tau == 0.0:
        return U, V
    c, sw, ws = _rotation(grid.n, grid.box_length, float(tau))
    return c * U + sw * V, ws * U + c * V


def linear_propagate(state: WaveState, dt: float) -> WaveState:
    """Exact free-wave flow over ``dt`` (any sign); sin(tD)/D is t at xi = 0."""
    U, V = _rotate(state.grid, dt, state.u.coefficients, state.ut.coefficients)
    g = state.grid
    return WaveState(state.t + dt, SpectralField(g, U), SpectralField(g, V))


@lru_cache(maxsize=8)
def _compact_layout(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Axis indices of the truncated band |k| < n/4 (plus the zero plane k = -n/4).

    In FFT order these n/2 indices form the lattice of an n/2 grid; ``neg``
    maps each compact position to that of -k.
    """
    q = n // 4
    k = np.concatenate([np.arange(0, q), np.arange(-q, 0)])
    idx = np.where(k >= 0, k, k + n)
    pos = {int(kk): i for i, kk in enumerate(k)}
    neg = np.array([pos.get(-int(kk), i) for i, kk in enumerate(k)])
    for a in (idx, neg):
        a.flags.writeable = False
    return idx, neg


def _compress(c: np.ndarray, n: int) -> np.ndarray:
    idx, _ = _compact_layout(n)
    return c[np.ix_(idx, idx, idx)]


def _expand(c: np.ndarray, n: int) -> np.ndarray:
    idx, _ = _compact_layout(n)
    full = np.zeros((n, n, n), dtype=complex)
    full[np.ix_(idx, idx, idx)] = c
    return full


def _cube_compact(c: np.ndarray, n: int) -> np.ndarray:
    """Compact coefficients of P(u^3) from the compact coefficients of u."""
    q = n // 4
    idx, neg = _compact_layout(n)
    low = np.arange(q)
    half = np.zeros((n, n, n // 2 + 1), dtype=complex)
    half[np.ix_(idx, idx, low)] = c[:, :, :q]
    half[q, :, :] = 0.0
    half[:, q, :] = 0.0
    phys = sfft.irfftn(half, s=(n, n, n)) * n**3
    with np.errstate(over="ignore", invalid="ignore"):
        cube = phys * phys * phys
    if not np.isfinite(cube).all():
        umax = float(np.nanmax(np.abs(phys))) if np.isfinite(phys).any() else math.inf
        raise BlowUpError(f"cubic term overflowed; max |u| = {umax:.6e}")
    coeffs = sfft.rfftn(cube)
    coeffs /= n**3
    lowpart = coeffs[np.ix_(idx, idx, low)]
    out = np.zeros_like(c)
    out[:, :, :q] = lowpart
    # negative k3 from Hermitian symmetry: c(k1, k2, -k3) = conj(c(-k1, -k2, k3))
    out[:, :, q + 1 :] = np.conj(lowpart[np.ix_(neg, neg, 2 * q - np.arange(q + 1, 2 * q))])
    out[q, :, :] = 0.0
    out[:, q, :] = 0.0
    return out


def _cube_coefficients(u: np.ndarray, grid: Grid3) -> np.ndarray:
    return _expand(_cube_compact(_compress(u, grid.n), grid.n), grid.n)


def nonlinear_term(u: SpectralField, coupling: float = 1.0) -> SpectralField:
    """coupling * P(P(u)^3), P the half-Nyquist truncation."""
    if coupling == 0.0:
        return SpectralField.zeros(u.grid)
    return SpectralField(u.grid, coupling * _cube_coefficients(u.coefficients, u.grid))


def nonlinear_kick(state: WaveState, dt: float, coupling: float = 1.0) -> WaveState:
    """u_t <- u_t - dt * coupling * P(u^3); u and t unchanged."""
    if coupling == 0.0:
        return state
    F = _cube_coefficients(state.u.coefficients, state.grid)
    ut = SpectralField(state.grid, state.ut.coefficients - (dt * coupling) * F)
    return WaveState(state.t, state.u, ut)


def _check_dt(grid: Grid3, dt: float) -> None:
    bound = stability_bound(grid)
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt!r}")
    if dt > bound * (1 + 1e-12):
        raise ValueError(f"time step {dt:.6g} exceeds the stability bound 0.5*L/n = {bound:.6g}")


def step_strang(state: WaveState, dt: float, coupling: float = 1.0) -> WaveState:
    """Half linear step, full kick, half linear step."""
    _check_dt(state.grid, dt)
    half = linear_propagate(state, dt / 2)
    if coupling != 0.0:
        half = nonlinear_kick(half, dt, coupling)
    return linear_propagate(half, dt / 2)


@dataclass(frozen=True)
class SubInterval:
    """Closed time window [a, b]."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError(f"subinterval needs a < b, got [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, t: float, tol: float = TIME_TOL) -> bool:
        return self.a - tol <= t <= self.b + tol


@dataclass(eq=False)
class Trajectory:
    """Snapshots at uniformly spaced times t0 + i * dt * stride."""

    states: list
    dt: float
    stride: int
    coupling: float = 1.0
    _nonlinear: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if not self.states:
            raise ValueError("trajectory needs at least one snapshot")
        t = self.times
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def spacing(self) -> float:
        return self.dt * self.stride

    @property
    def grid(self) -> Grid3:
        return self.states[0].grid

    @property
    def span(self) -> SubInterval:
        return SubInterval(self.states[0].t, self.states[-1].t)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i) -> WaveState:
        return self.states[i]

    def index_of(self, t: float) -> int:
        """Index of the snapshot at time ``t``; raises if none sits there."""
        times = self.times
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > max(TIME_TOL, 1e-6 * self.spacing):
            raise ValueError(f"no snapshot at t={t!r} (nearest is {times[i]!r})")
        return i

    def snap(self, J: SubInterval) -> SubInterval:
        """Move J's endpoints to the nearest snapshot times inside the span."""
        times = self.times
        if J.a < times[0] - TIME_TOL or J.b > times[-1] + TIME_TOL:
            raise ValueError(f"interval [{J.a}, {J.b}] leaves the trajectory span [{times[0]}, {times[-1]}]")
        ia = int(np.argmin(np.abs(times - J.a)))
        ib = int(np.argmin(np.abs(times - J.b)))
        if ib <= ia:
            raise ValueError(f"interval [{J.a}, {J.b}] is shorter than one snapshot spacing")
        return SubInterval(float(times[ia]), float(times[ib]))

    def window(self, J: SubInterval) -> range:
        """Snapshot indices covering the snapped interval J."""
        Js = self.snap(J)
        return range(self.index_of(Js.a), self.index_of(Js.b) + 1)

    def nonlinear(self, i: int) -> np.ndarray:
        """Coefficients of coupling * P(u^3) at snapshot i (cached)."""
        F = self._nonlinear.get(i)
        if F is None:
            F = nonlinear_term(self.states[i].u, self.coupling).coefficients
            self._nonlinear[i] = F
        return F


def schedule(grid: Grid3, T: float, dt: Optional[float] = None, stride: int = 1) -> tuple[int, float]:
    """(number of steps, effective step) for a run of length T.

    The requested step (default: a quarter of the stability bound) is shrunk
    so that T is a whole number of strides.
    """
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T!r}")
    if int(stride) != stride or stride < 1:
        raise ValueError(f"stride must be a positive integer, got {stride!r}")
    dt = default_dt(grid) if dt is None else float(dt)
    _check_dt(grid, dt)
    chunks = max(1, math.ceil(T / (dt * stride) - 1e-9))
    nsteps = chunks * int(stride)
    return nsteps, T / nsteps


def integrate(
    state: WaveState,
    T: float,
    dt: Optional[float] = None,
    stride: int = 1,
    coupling: float = 1.0,
) -> Iterator[WaveState]:
    """Yield snapshots of the Strang flow every ``stride`` steps, from ``state`` to t + T.

    The step comes from ``schedule``; the first and last yielded states are
    the endpoints.
    """
    nsteps, h = schedule(state.grid, T, dt, stride)
    g = state.grid
    n, L = g.n, g.box_length
    t0 = state.t
    yield state
    # The kick only sees the truncated band, which is evolved as a compact
    # (n/2)^3 block; anything outside it moves freely and is added back at
    # snapshots.  Adjacent half steps between snapshots are fused.
    u = _compress(state.u.coefficients, n)
    v = _compress(state.ut.coefficients, n)
    outside = WaveState(
        t0,
        SpectralField(g, state.u.coefficients - _expand(u, n)),
        SpectralField(g, state.ut.coefficients - _expand(v, n)),
    )
    free = bool(np.any(outside.u.coefficients) or np.any(outside.ut.coefficients))

    def rotate(tau, a, b):
        c, sw, ws = _rotation_compact(n, L, tau)
        return c * a + sw * b, ws * a + c * b

    u, v = rotate(h / 2, u, v)
    for i in range(1, nsteps + 1):
        if coupling != 0.0:
            v = v - (h * coupling) * _cube_compact(u, n)
        if i % stride == 0:
            u, v = rotate(h / 2, u, v)
            if not (np.isfinite(u).all() and np.isfinite(v).all()):
                raise BlowUpError(f"non-finite field at t={t0 + i * h:.6g}")
            U, V = _expand(u, n), _expand(v, n)
            if free:
                U, V = _rotate(g, i * h, outside.u.coefficients, outside.ut.coefficients)
                U, V = U + _expand(u, n), V + _expand(v, n)
            yield WaveState(t0 + i * h, SpectralField(g, U), SpectralField(g, V))
            if i < nsteps:
                u, v = rotate(h / 2, u, v)
        else:
            u, v = rotate(h, u, v)


def evolve(
    state: WaveState,
    T: float,
    dt: Optional[float] = None,
    stride: int = 1,
    coupling: float = 1.0,
    observer: Optional[Callable[[WaveState], None]] = None,
) -> Trajectory:
    """Run ``integrate`` and keep every snapshot."""
    _, h = schedule(state.grid, T, dt, stride)
    states: list = []
    try:
        for snap in integrate(state, T, dt, stride, coupling):
            states.append(snap)
            if observer is not None:
                observer(snap)
    except BlowUpError as exc:
        partial = Trajectory(states, h, stride, coupling) if states else None
        raise EvolutionAborted(
            f"evolution aborted after snapshot {len(states) - 1}: {exc}", len(states) - 1, partial
        ) from exc
    return Trajectory(states, h, stride, coupling)


# ---------------------------------------------------------------------------
# adapted linear / nonlinear decomposition
# ---------------------------------------------------------------------------


def simpson_weights(count: int, h: float) -> np.ndarray:
    """Composite Simpson weights on ``count`` uniform nodes.

    Odd interval counts close with the 3/8 rule on the last three intervals;
    one interval falls back to the trapezoid.
    """
    k = count - 1
    w = np.zeros(count)
    if k == 0:
        return w
    if k == 1:
        w[:] = h / 2
        return w
    m = k if k % 2 == 0 else k - 3
    if m > 0:
        w[0 : m + 1 : 2] += 2 * h / 3
        w[1:m:2] += 4 * h / 3
        w[0] -= h / 3
        w[m] -= h / 3
    if k % 2 == 1:
        w[m : m + 4] += np.array([3, 9, 9, 3]) * h / 8
    return w


class DuhamelPart(NamedTuple):
    state: WaveState
    nodes: int
    reduced_order: bool


def _check_in(J: SubInterval, t: float) -> None:
    if not J.contains(t):
        raise ValueError(f"t={t!r} lies outside the interval [{J.a}, {J.b}]")


def adapted_linear_part(traj: Trajectory, J: SubInterval, t: float) -> WaveState:
    """Free evolution of the snapshot at J.a, evaluated at t in J."""
    _check_in(J, t)
    Js = traj.snap(J)
    start = traj[traj.index_of(Js.a)]
    out = linear_propagate(start, t - start.t)
    return replace(out, t=t)


def duhamel_sweep(traj: Trajectory, J: SubInterval) -> Iterator[DuhamelPart]:
    """u^{nl,J} (with its time derivative) at every snapshot of J, in order.

    Runs the composite Simpson rule of ``simpson_weights`` recursively: each
    partial sum is carried forward by the exact propagator, so the sweep costs
    O(snapshots) field operations and agrees with the direct sum.
    """
    idx = traj.window(J)
    grid = traj.grid
    h = traj.spacing
    zero = np.zeros(grid.shape, dtype=complex)

    def X(i):
        # source pair (0, -F) at snapshot i
        return zero, -traj.nonlinear(i)

    def rot(tau, P):
        return _rotate(grid, tau, P[0], P[1])

    def add(P, Q, a=1.0, b=1.0):
        return (a * P[0] + b * Q[0], a * P[1] + b * Q[1])

    A = B = E = None
    simpson_even: dict[int, tuple] = {}
    recent: list = []
    for step, i in enumerate(idx):
        Xi = X(i)
        if step == 0:
            A, B, E = Xi, Xi, Xi
            val = (zero, zero)
        else:
            A = add(rot(h, A), Xi)
            B = rot(h, B)
            E = rot(h, E)
            if step % 2 == 0:
                # Simpson = (4/3) trapezoid_h - (1/3) trapezoid_2h
                E = add(E, Xi)
                edge = add(B, Xi)
                trap_h = add(A, edge, h, -h / 2)
                trap_2h = add(E, edge, 2 * h, -h)
                val = add(trap_h, trap_2h, 4 / 3, -1 / 3)
                simpson_even[step] = val
                simpson_even.pop(step - 4, None)
            elif step == 1:
                val = add(rot(h, recent[-1]), Xi, h / 2, h / 2)
            else:
                x3, x2, x1 = recent
                val = add(rot(3 * h, x3), rot(2 * h, x2), 3 * h / 8, 9 * h / 8)
                val = add(val, rot(h, x1), 1.0, 9 * h / 8)
                val = add(val, Xi, 1.0, 3 * h / 8)
                if step > 3:
                    val = add(val, rot(3 * h, simpson_even[step - 3]))
        recent = (recent + [Xi])[-3:]
        st = traj[i]
        out = WaveState(st.t, SpectralField(grid, val[0]), SpectralField(grid, val[1]))
        yield DuhamelPart(out, step + 1, step + 1 < 4)


def duhamel_nonlinear_part(traj: Trajectory, J: SubInterval, t: float) -> DuhamelPart:
    """u^{nl,J}(t) = -int_a^t sin((t-t')D)/D g u^3(t') dt' and its time derivative.

    t must be a snapshot time in J.  ``reduced_order`` flags windows with fewer
    than four quadrature nodes.
    """
    _check_in(J, t)
    Js = traj.snap(J)
    it = traj.index_of(t)
    ia = traj.index_of(Js.a)
    if it == ia:
        return DuhamelPart(replace(WaveState.zeros(traj.grid), t=traj[ia].t), 1, True)
    part = None
    for part in duhamel_sweep(traj, SubInterval(Js.a, traj[it].t)):
        pass
    return part
