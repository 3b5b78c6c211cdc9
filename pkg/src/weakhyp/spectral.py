"""Periodic grid, unitary FFT, Fourier multipliers and Gevrey weights.

Conventions used throughout the package:

* the spatial domain is the torus [0, L) sampled at n equispaced points,
* the frequency lattice is xi_k = k / L for k in {-n/2, ..., n/2 - 1}
  (cycles per unit length), stored in numpy's natural FFT order,
* the forward transform is the unitary DFT (norm="ortho"), so plain
  vector 2-norms are preserved exactly,
* spectral differentiation is the multiplier 2*pi*i*xi, matching the
  kernel convention exp(2*pi*i*(x - y)*xi) of the quantizer,
* L2 norms carry the quadrature weight dx, which makes the physical and
  frequency side Parseval sums identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "Space",
    "Grid",
    "GridFunction",
    "GevreyOverflowError",
    "bracket",
    "forward_transform",
    "inverse_transform",
    "apply_multiplier",
    "derivative_multiplier",
    "gevrey_weight",
    "gevrey_multiplier",
]

#: exponent cap for exp(tau * <xi>^sigma); doubles overflow near exp(709)
DEFAULT_MAX_EXPONENT = 700.0


class Space(Enum):
    PHYSICAL = "physical"
    FREQUENCY = "frequency"


class GevreyOverflowError(OverflowError):
    """Gevrey weight exponent exceeded the configured cap."""


def bracket(xi):
    """Japanese bracket <xi> = (1 + |xi|^2)^(1/2)."""
    return np.sqrt(1.0 + np.asarray(xi, dtype=float) ** 2)


@dataclass(frozen=True)
class Grid:
    """Periodic spatial grid with its dual frequency lattice.

    Parameters
    ----------
    n : int
        Number of points, must be a power of two.
    length : float
        Period L of the domain [0, L).
    x0 : float
        Center of the coefficient bump; must lie in the open interior.
    """

    n: int
    length: float = 1.0
    x0: float = 0.5

    def __post_init__(self):
        if self.n <= 0 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a positive power of two, got {self.n}")
        if self.length <= 0:
            raise ValueError(f"length must be positive, got {self.length}")
        if not (0.0 < self.x0 < self.length):
            raise ValueError(
                f"x0 = {self.x0} must lie inside the open domain (0, {self.length})"
            )

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        """Grid points x_j = j * dx."""
        return np.arange(self.n) * self.dx

    @property
    def x_doubled(self) -> np.ndarray:
        """Half-step lattice x_m = m * dx / 2 holding all pair midpoints."""
        return np.arange(2 * self.n) * (self.dx / 2.0)

    @property
    def xi(self) -> np.ndarray:
        """Frequency lattice k / L in numpy FFT order."""
        return np.fft.fftfreq(self.n, d=self.dx)

    @property
    def xi_max(self) -> float:
        return float(np.max(np.abs(self.xi)))

    def norm2(self, values: np.ndarray) -> float:
        """Squared L2 norm with quadrature weight dx."""
        return float(self.dx * np.sum(np.abs(values) ** 2))

    def norm(self, values: np.ndarray) -> float:
        return float(np.sqrt(self.norm2(values)))

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """L2 inner product <f, g> = dx * sum f * conj(g)."""
        return complex(self.dx * np.sum(f * np.conj(g)))


@dataclass
class GridFunction:
    """Complex samples of a function on a :class:`Grid`, tagged by space."""

    grid: Grid
    values: np.ndarray
    space: Space = Space.PHYSICAL

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"values have shape {self.values.shape}, expected ({self.grid.n},)"
            )

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy(), self.space)


def forward_transform(u: GridFunction) -> GridFunction:
    """Unitary DFT, physical -> frequency."""
    if u.space is not Space.PHYSICAL:
        raise ValueError("forward_transform expects a physical-space function")
    return GridFunction(u.grid, np.fft.fft(u.values, norm="ortho"), Space.FREQUENCY)


def inverse_transform(u: GridFunction) -> GridFunction:
    """Unitary inverse DFT, frequency -> physical."""
    if u.space is not Space.FREQUENCY:
        raise ValueError("inverse_transform expects a frequency-space function")
    return GridFunction(u.grid, np.fft.ifft(u.values, norm="ortho"), Space.PHYSICAL)


def _multiplier_values(grid: Grid, m) -> np.ndarray:
    mv = np.asarray(m(grid.xi) if callable(m) else m, dtype=complex)
    if mv.shape == ():
        mv = np.full(grid.n, mv)
    if mv.shape != (grid.n,):
        raise ValueError(f"multiplier has shape {mv.shape}, expected ({grid.n},)")
    bad = ~np.isfinite(mv)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise ValueError(
            f"multiplier is not finite at lattice point xi = {grid.xi[k]}"
        )
    return mv


def apply_multiplier(u: GridFunction, m) -> GridFunction:
    """Apply the Fourier multiplier u_hat_k <- m(xi_k) u_hat_k.

    `m` is a callable on the frequency lattice or a precomputed array in
    FFT order.  A physical-space input is transformed, multiplied and
    transformed back; a frequency-space input is multiplied in place.
    """
    mv = _multiplier_values(u.grid, m)
    if u.space is Space.FREQUENCY:
        return GridFunction(u.grid, u.values * mv, Space.FREQUENCY)
    uh = np.fft.fft(u.values, norm="ortho")
    return GridFunction(u.grid, np.fft.ifft(mv * uh, norm="ortho"), Space.PHYSICAL)


def derivative_multiplier(grid: Grid) -> np.ndarray:
    """Multiplier of d/dx in the exp(2*pi*i*x*xi) convention."""
    return 2.0j * np.pi * grid.xi


def gevrey_multiplier(
    grid: Grid,
    tau: float,
    sigma: float,
    direction: int = +1,
    max_exponent: float = DEFAULT_MAX_EXPONENT,
) -> np.ndarray:
    """Values of exp(+-tau * <xi>^sigma) on the lattice, overflow-guarded.

    Exponents are formed in log space and exponentiated once; if
    tau * <xi>^sigma exceeds `max_exponent` anywhere the offending
    frequency is named in the raised :class:`GevreyOverflowError`.
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    if not (0.0 < sigma < 1.0):
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    if direction not in (+1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    exponents = tau * bracket(grid.xi) ** sigma
    worst = int(np.argmax(exponents))
    if exponents[worst] > max_exponent:
        raise GevreyOverflowError(
            f"Gevrey overflow: tau*<xi>^sigma = {exponents[worst]:.3g} exceeds "
            f"cap {max_exponent:.3g} at xi = {grid.xi[worst]}"
        )
    return np.exp(direction * exponents)


def gevrey_weight(
    u: GridFunction,
    tau: float,
    sigma: float,
    direction: int = +1,
    max_exponent: float = DEFAULT_MAX_EXPONENT,
) -> GridFunction:
    """Apply the Gevrey weight exp(+-tau * D^sigma) as a Fourier multiplier."""
    mv = gevrey_multiplier(u.grid, tau, sigma, direction, max_exponent)
    return apply_multiplier(u, mv)
