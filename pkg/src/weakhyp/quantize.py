"""Discrete Weyl / Kohn-Nirenberg quantization and operator experiments.

A phase-space symbol p(x, xi) is sampled on the doubled spatial lattice
(2n half-step points, so every pair midpoint (x_i + y_j)/2 is a sample
point) times the n-point frequency lattice.  Quantization assembles the
dense kernel

    K[i, j] = (1/n) * sum_k exp(2*pi*i*(x_i - y_j)*xi_k) * p(m_ij, xi_k)

with m_ij = (x_i + y_j)/2 for Weyl and m_ij = x_i for Kohn-Nirenberg.
On the torus the pair (x_i, y_j) is identified through its wrapped
difference d in (-n/2, n/2] and the midpoint on the short arc, which
keeps the convention translation-equivariant across the seam.  Per
midpoint the kernel formula is a single inverse FFT in the difference
variable.  x-independent symbols reduce exactly to Fourier multipliers
and x-only symbols to pointwise multiplication.

De-quantization inverts the kernel formula along the (midpoint,
difference) slots, FFT in x - y.  The slot map (i, j) <-> (m, d) is a
bijection, so `quantize(dequantize(K)) == K` holds for every matrix;
each midpoint row only observes difference residues of its own parity,
and the unobserved components are filled from a caller-supplied prior
symbol (zero if absent), which keeps `dequantize(quantize(p), prior=p)
== p` exact.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .spectral import Grid
from .symbols import SymbolB

__all__ = [
    "SymbolField",
    "QuantizedOperator",
    "sample_symbol",
    "quantize",
    "dequantize",
    "multiplier_matrix",
    "multiplication_matrix",
    "operator_norm",
    "PowerIterationWarning",
    "poisson_bracket",
    "compose_remainder",
    "invert_b",
]

WEYL = "weyl"
KOHN_NIRENBERG = "kohn_nirenberg"


@dataclass
class SymbolField:
    """Symbol samples on the doubled (2n, n) phase-space lattice."""

    grid: Grid
    samples: np.ndarray
    time: float = 0.0
    label: str = ""
    claimed_weight: Optional[str] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        n = self.grid.n
        if self.samples.shape != (2 * n, n):
            raise ValueError(
                f"samples have shape {self.samples.shape}, expected {(2 * n, n)}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise ValueError(f"symbol '{self.label}' has non-finite samples")


@dataclass
class QuantizedOperator:
    """Dense matrix realization of op(p) on the grid."""

    matrix: np.ndarray
    quantization: str = WEYL
    provenance: str = ""

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"matrix must be square, got {self.matrix.shape}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_defect(self) -> float:
        scale = np.linalg.norm(self.matrix)
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T) / scale)


def sample_symbol(grid: Grid, fn, time: float = 0.0, label: str = "",
                  claimed_weight: Optional[str] = None) -> SymbolField:
    """Sample fn(x, xi) on the doubled lattice; fn must broadcast."""
    x = grid.x_doubled[:, None]
    xi = grid.xi[None, :]
    return SymbolField(grid, np.broadcast_to(np.asarray(fn(x, xi), dtype=complex),
                                             (2 * grid.n, grid.n)).copy(),
                       time=time, label=label, claimed_weight=claimed_weight)


def sample_symbol_b(sb: SymbolB, grid: Grid, t: float, power: int = 1,
                    label: Optional[str] = None) -> SymbolField:
    """Sample b(t, x, xi)^power on the doubled lattice."""
    x = grid.x_doubled[:, None]
    xi = grid.xi[None, :]
    values = sb.b(t, x, xi) ** power
    if label is None:
        label = "b" if power == 1 else f"b^{power}"
    return SymbolField(grid, values.astype(complex), time=t, label=label,
                       claimed_weight=label)


def _wrapped_difference(n: int):
    """Index maps of the torus pair geometry.

    Returns (D0, Dstar, Mstar): for every entry (i, j), the difference
    residue d0 = (i - j) mod n, its wrapped representative d* in
    (-n/2, n/2], and the short-arc midpoint index m* = (2j + d*) mod 2n
    on the doubled lattice.  At the antipodal column d0 = n/2 the two
    torus midpoints m* and m* + n are equally valid; callers average
    over them, which keeps real symbols exactly Hermitian.
    """
    i = np.arange(n)
    I, J = np.meshgrid(i, i, indexing="ij")
    D0 = (I - J) % n
    Dstar = np.where(D0 <= n // 2, D0, D0 - n)
    Mstar = (2 * J + Dstar) % (2 * n)
    return D0, Dstar, Mstar


def quantize(p: SymbolField, mode: str = WEYL) -> QuantizedOperator:
    """Assemble the dense kernel of op(p)."""
    n = p.grid.n
    D0, _, Mstar = _wrapped_difference(n)
    if mode == WEYL:
        c = np.fft.ifft(p.samples, axis=1)
        K = c[Mstar, D0]
        anti = D0 == n // 2
        K[anti] = 0.5 * (K[anti] + c[(Mstar[anti] + n) % (2 * n), n // 2])
    elif mode == KOHN_NIRENBERG:
        c = np.fft.ifft(p.samples[::2], axis=1)
        K = c[np.arange(n)[:, None], D0]
    else:
        raise ValueError(f"unknown quantization mode {mode!r}")
    return QuantizedOperator(K, quantization=mode, provenance=p.label)


def dequantize(matrix: np.ndarray, grid: Grid,
               prior: Optional[np.ndarray] = None,
               time: float = 0.0, label: str = "") -> SymbolField:
    """Weyl symbol of a kernel: invert the kernel formula per midpoint.

    Every kernel entry (i, j) determines the difference profile c_m at
    its own slot (m*, d0); away from the antipodal column the slot map
    is one-to-one, so the written values reproduce `matrix` exactly
    under `quantize`.  The antipodal column d0 = n/2 is stored
    symmetrized over the two torus midpoints, matching the averaging in
    `quantize`.

    Each midpoint only observes difference residues of its own parity.
    The complementary slots never influence `quantize`, but they do
    shape the extracted symbol: with `prior` given they are copied from
    it, otherwise they are interpolated from the two neighboring
    midpoints, which keeps the symbol free of midpoint-Nyquist ripple.
    """
    n = grid.n
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (n, n):
        raise ValueError(f"matrix has shape {matrix.shape}, expected {(n, n)}")
    if prior is not None:
        prior = np.asarray(prior, dtype=complex)
        if prior.shape != (2 * n, n):
            raise ValueError(
                f"prior has shape {prior.shape}, expected {(2 * n, n)}"
            )
        c = np.fft.ifft(prior, axis=1)
    else:
        c = np.zeros((2 * n, n), dtype=complex)
    D0, _, Mstar = _wrapped_difference(n)
    c[Mstar, D0] = matrix
    anti = D0 == n // 2
    sym = 0.5 * (matrix[anti] + matrix.T[anti])
    c[Mstar[anti], n // 2] = sym
    c[(Mstar[anti] + n) % (2 * n), n // 2] = sym
    if prior is None:
        m_idx = np.arange(2 * n)[:, None]
        r_idx = np.arange(n)[None, :]
        unseen = (m_idx % 2) != (r_idx % 2)
        fill = 0.5 * (np.roll(c, 1, axis=0) + np.roll(c, -1, axis=0))
        c[unseen] = fill[unseen]
    return SymbolField(grid, np.fft.fft(c, axis=1), time=time, label=label)


def multiplier_matrix(grid: Grid, m) -> np.ndarray:
    """Dense matrix of the Fourier multiplier m(xi) (exact)."""
    mv = np.asarray(m(grid.xi) if callable(m) else m, dtype=complex)
    eye = np.eye(grid.n, dtype=complex)
    return np.fft.ifft(mv[:, None] * np.fft.fft(eye, axis=0), axis=0)


def multiplication_matrix(q_values: np.ndarray) -> np.ndarray:
    """Dense matrix of pointwise multiplication by q(x)."""
    return np.diag(np.asarray(q_values, dtype=complex))


class PowerIterationWarning(UserWarning):
    pass


def operator_norm(matrix, tol: float = 1e-8, max_iter: int = 200,
                  seed: int = 7, block: int = 8) -> float:
    """Largest singular value by blocked power iteration on A* A.

    A single power vector stalls on near-degenerate top singular values
    (frequency multipliers routinely have clustered maxima), so a small
    orthonormal block is iterated and the top Rayleigh-Ritz value
    tracked until its relative change falls below `tol`.
    """
    A = matrix.matrix if isinstance(matrix, QuantizedOperator) else np.asarray(matrix)
    n = A.shape[0]
    block = min(block, n)
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(n, block)) + 1j * rng.normal(size=(n, block))
    V, _ = np.linalg.qr(V)
    AH = A.conj().T
    est = -1.0
    sigma = 0.0
    change = np.inf
    for _ in range(max_iter):
        W = A @ V
        sigma = float(np.linalg.svd(W, compute_uv=False)[0])
        if sigma == 0.0:
            return 0.0
        change = abs(sigma - est) / max(sigma, 1e-300)
        if change <= tol:
            return sigma
        est = sigma
        V, _ = np.linalg.qr(AH @ W)
    warnings.warn(
        f"power iteration did not converge in {max_iter} iterations; "
        f"achieved relative change {change:.3g}",
        PowerIterationWarning,
    )
    return sigma


def _dxi_samples(grid: Grid, samples: np.ndarray) -> np.ndarray:
    """d/dxi by central differences on the (sorted) frequency lattice."""
    order = np.argsort(grid.xi)
    inv = np.argsort(order)
    s_sorted = samples[:, order]
    d_sorted = np.gradient(s_sorted, grid.xi[order], axis=1)
    return d_sorted[:, inv]


def _dx_samples(grid: Grid, samples: np.ndarray) -> np.ndarray:
    """d/dx by spectral differentiation on the doubled periodic lattice."""
    n2 = 2 * grid.n
    freqs = np.fft.fftfreq(n2, d=grid.dx / 2.0)
    return np.fft.ifft(2.0j * np.pi * freqs[:, None]
                       * np.fft.fft(samples, axis=0), axis=0)


def poisson_bracket(p1: SymbolField, p2: SymbolField) -> np.ndarray:
    """{p1, p2} = d_xi p1 d_x p2 - d_x p1 d_xi p2 on the sample lattice."""
    g = p1.grid
    return (_dxi_samples(g, p1.samples) * _dx_samples(g, p2.samples)
            - _dx_samples(g, p1.samples) * _dxi_samples(g, p2.samples))


def compose_remainder(p1: SymbolField, p2: SymbolField, order: int = 1,
                      mode: str = WEYL, tol: float = 1e-8,
                      max_iter: int = 50):
    """Residuals of the symbolic composition expansion, at operator level.

    order 0:  R0 = op(p1) op(p2) - op(p1 p2)
    order 1:  R1 = R0 - op(first-order correction)

    In the exp(2*pi*i*(x-y)*xi) kernel convention the first-order Weyl
    correction is {p1, p2}/(4*pi*i) and the Kohn-Nirenberg one is
    d_xi p1 d_x p2 / (2*pi*i).  Returns (residual matrices dict,
    norms dict, norm ratio ||R1||/||R0||).
    """
    if p1.grid is not p2.grid and p1.grid != p2.grid:
        raise ValueError("symbols live on different grids")
    g = p1.grid
    Q1 = quantize(p1, mode).matrix
    Q2 = quantize(p2, mode).matrix
    prod = SymbolField(g, p1.samples * p2.samples, time=p1.time,
                       label=f"({p1.label})*({p2.label})")
    R0 = Q1 @ Q2 - quantize(prod, mode).matrix
    norms = {"R0": operator_norm(R0, tol=tol, max_iter=max_iter)}
    residuals = {"R0": R0}
    if order >= 1:
        if mode == WEYL:
            corr = poisson_bracket(p1, p2) / (4.0j * np.pi)
        else:
            corr = (_dxi_samples(g, p1.samples)
                    * _dx_samples(g, p2.samples)) / (2.0j * np.pi)
        R1 = R0 - quantize(SymbolField(g, corr, time=p1.time,
                                       label="order-1 correction"),
                           mode).matrix
        residuals["R1"] = R1
        norms["R1"] = operator_norm(R1, tol=tol, max_iter=max_iter)
    ratio = norms.get("R1", np.nan) / norms["R0"] if norms["R0"] > 0 else 0.0
    return residuals, norms, ratio


def invert_b(sb: SymbolB, nu: int, t: float, grid: Grid, mode: str = WEYL):
    """Approximate inverse symbol of op(b) by the defect recursion.

    c_0 = b^(-1) and c_k = c_{k-1} + b^(-1) (1 - s_k), where s_k is the
    symbol extracted from the exact matrix product op(b) op(c_{k-1}).
    Returns (SymbolField c_nu, defects) with
    defects[k] = || op(b) op(c_k) - Id ||.  A defect increase between
    consecutive steps signals the discretization floor and is reported
    via warning, not an exception.
    """
    if nu < 0 or nu > 6:
        raise ValueError(f"nu must be in 0..6, got {nu}")
    b_field = sample_symbol_b(sb, grid, t)
    b_samples = b_field.samples
    B = quantize(b_field, mode).matrix
    eye = np.eye(grid.n, dtype=complex)
    c = 1.0 / b_samples

    def defect_of(c_samples):
        Q = quantize(SymbolField(grid, c_samples, time=t, label="c"), mode).matrix
        return operator_norm(B @ Q - eye)

    defects = [defect_of(c)]
    for k in range(1, nu + 1):
        M = B @ quantize(SymbolField(grid, c, time=t, label=f"c_{k-1}"),
                         mode).matrix
        s = dequantize(M, grid, time=t, label=f"b#c_{k-1}").samples
        c = c + (1.0 - s) / b_samples
        defects.append(defect_of(c))
        if defects[-1] > defects[-2]:
            warnings.warn(
                f"invert_b defect increased at nu={k} "
                f"({defects[-2]:.3e} -> {defects[-1]:.3e}); "
                "discretization floor reached",
                UserWarning,
            )
    field = SymbolField(grid, c, time=t, label=f"c_{nu}",
                        claimed_weight="b^-1")
    return field, defects
