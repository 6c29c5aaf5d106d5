"""Pseudo-spectral laboratory for the defocusing cubic wave equation on a 3-torus."""
from .dynamics import (
    SubInterval,
    Trajectory,
    WaveState,
    adapted_linear_part,
    duhamel_nonlinear_part,
    evolve,
    linear_propagate,
    nonlinear_kick,
    step_strang,
)
from .spectral import (
    DyadicShell,
    Grid3,
    MultiplierProfile,
    SpectralField,
    forward_transform,
    inverse_transform,
    synthesize_initial_data,
)

__version__ = "0.1.0"
