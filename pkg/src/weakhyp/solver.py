"""Time integration of the 2x2 model system with energy monitoring.

The system is

    d/dt u1 = d/dx u2 + (F(t,x,u) u)_1
    d/dt u2 = a(t,x) d/dx u1 + (F(t,x,u) u)_2

integrated by classical RK4 with spectral d/dx, under the CFL rule
dt <= CFL * dx / max(1, sup sqrt(a)).  The default nonlinearity places
u1 times a plateau profile in the (2,1) entry of F, which reproduces
the wave-like equation d_t^2 u1 = d_x(a d_x u1) + d_x(u1^2) on the
plateau.  Runs record the Gevrey energy budget along the trajectory.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .spectral import Grid, GridFunction, Space
from .symbols import CoefficientField, SymbolB
from .energy import Symmetrizer, dt_energy_breakdown
from .energy import energy as gevrey_energy

__all__ = [
    "SystemState",
    "NonlinearityF",
    "RunConfig",
    "EnergyTrace",
    "CFLError",
    "SolverBlowupError",
    "wave_packet",
    "rhs",
    "step_rk4",
    "run_with_energy",
    "measure_tau_threshold",
    "verify_breakdown_identity",
]


class CFLError(ValueError):
    pass


class SolverBlowupError(RuntimeError):
    def __init__(self, message: str, last_valid_time: float):
        super().__init__(message)
        self.last_valid_time = last_valid_time


@dataclass
class SystemState:
    """The pair (u1, u2) of physical-space grid functions at time t."""

    u1: GridFunction
    u2: GridFunction
    t: float = 0.0

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise ValueError("u1 and u2 live on different grids")
        if self.u1.space is not Space.PHYSICAL or self.u2.space is not Space.PHYSICAL:
            raise ValueError("SystemState components must be physical-space")
        if not (np.all(np.isfinite(self.u1.values))
                and np.all(np.isfinite(self.u2.values))):
            raise ValueError("SystemState has non-finite entries")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @staticmethod
    def from_arrays(grid: Grid, u1, u2, t: float = 0.0) -> "SystemState":
        return SystemState(GridFunction(grid, u1), GridFunction(grid, u2), t)


@dataclass
class NonlinearityF:
    """F(t,x,u) = sum_k F_k(t,x) u^k, truncated at |k| <= k_max.

    Terms are (k, i, j, profile) tuples: multi-index k = (k1, k2),
    matrix entry (i, j) in {0, 1}^2 and a spatial profile callable
    profile(t, x).  Entry profiles should be supported inside the outer
    bump ball so the source respects the compact-support setup.
    """

    terms: Sequence[tuple] = field(default_factory=list)
    k_max: int = 4

    def __post_init__(self):
        for k, i, j, _ in self.terms:
            if len(k) != 2 or min(k) < 0:
                raise ValueError(f"bad multi-index {k}")
            if sum(k) > self.k_max:
                raise ValueError(f"term {k} exceeds k_max={self.k_max}")
            if not (i in (0, 1) and j in (0, 1)):
                raise ValueError(f"bad matrix entry ({i},{j})")

    @staticmethod
    def zero() -> "NonlinearityF":
        return NonlinearityF([])

    @staticmethod
    def wave_default(coeff: CoefficientField) -> "NonlinearityF":
        """F with (F)_{21} = u1 * plateau, the wave-equation source."""
        def profile(t, x):
            return coeff.chi(x)
        return NonlinearityF([((1, 0), 1, 0, profile)])

    def is_zero(self) -> bool:
        return len(self.terms) == 0

    def apply(self, t: float, x: np.ndarray, u1: np.ndarray, u2: np.ndarray,
              f21_zero: bool = False):
        """(F(t,x,u) u)_1 and (F(t,x,u) u)_2 as arrays."""
        n = x.shape[0]
        F = np.zeros((2, 2, n), dtype=complex)
        for k, i, j, profile in self.terms:
            if f21_zero and (i, j) == (1, 0):
                continue
            F[i, j] += np.asarray(profile(t, x), dtype=complex) \
                * u1 ** k[0] * u2 ** k[1]
        return F[0, 0] * u1 + F[0, 1] * u2, F[1, 0] * u1 + F[1, 1] * u2


def wave_packet(grid: Grid, center: float, xi_center: float,
                width: float, n_sigma_cut: float = 5.0) -> np.ndarray:
    """Gaussian packet modulated at xi_center, spectrally truncated.

    The hard truncation at n_sigma_cut spectral widths keeps the
    Gevrey-weighted norm meaningful and the support tails below 1e-8.
    """
    x = grid.x
    env = np.exp(-((x - center) ** 2) / (2.0 * width ** 2))
    vals = env * np.exp(2.0j * np.pi * xi_center * (x - center))
    spec_width = 1.0 / (2.0 * np.pi * width)
    vh = np.fft.fft(vals, norm="ortho")
    keep = np.abs(grid.xi - xi_center) <= n_sigma_cut * spec_width
    return np.fft.ifft(vh * keep, norm="ortho")


@dataclass
class RunConfig:
    """Everything one trajectory needs; validates the admissible ranges."""

    n: int = 256
    length: float = 1.0
    sigma: float = 0.5
    c: Optional[float] = None          # defaults to the coupling 2(1 - sigma)
    tau0: float = 1.0
    taudot: float = 0.0
    coeff: Optional[CoefficientField] = field(default_factory=CoefficientField)
    nonlinearity: Optional[NonlinearityF] = None
    f21_zero: bool = False
    cfl: float = 0.25
    dt: Optional[float] = None
    horizon: Optional[float] = None
    sample_stride: int = 1
    packet_xi: float = 24.0
    packet_width: float = 0.02
    packet_component: int = 2
    normalize_energy: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.c is None:
            self.c = 2.0 * (1.0 - self.sigma)
        if not (0.0 < self.sigma < 1.0):
            raise ValueError(f"sigma = {self.sigma} must lie in (0, 1)")
        if not (0.0 < self.c <= 2.0):
            raise ValueError(
                f"c = {self.c} violates the uncertainty-principle bound c <= 2"
            )
        if self.taudot < 0.0:
            raise ValueError(f"taudot = {self.taudot} must be >= 0")
        if self.coeff is not None:
            if self.tau0 >= self.coeff.tau_under:
                raise ValueError(
                    f"tau0 = {self.tau0} must stay below the coefficient's "
                    f"Gevrey radius {self.coeff.tau_under}"
                )
            if 2.0 * self.coeff.r_outer > self.length / 2.0:
                raise ValueError(
                    "coefficient support diameter exceeds half the period; "
                    "wrap-around would not be negligible"
                )
        if self.nonlinearity is None:
            self.nonlinearity = (NonlinearityF.zero() if self.coeff is None
                                 else NonlinearityF.wave_default(self.coeff))

    @property
    def grid(self) -> Grid:
        x0 = self.coeff.x0 if self.coeff is not None else self.length / 2.0
        return Grid(self.n, self.length, x0)

    def symbol_b(self) -> SymbolB:
        if self.coeff is None:
            raise ValueError("no coefficient field configured")
        return SymbolB(self.coeff, c=self.c)

    def t_end(self) -> float:
        T = self.coeff.T if self.coeff is not None else math.inf
        if self.horizon is not None:
            return min(self.horizon, T)
        if self.taudot > 0.0:
            return min(T, self.tau0 / self.taudot)
        return T

    def tau_at(self, t: float) -> float:
        tau = self.tau0 - self.taudot * t
        if tau < 0.0:
            raise ValueError(f"tau({t}) = {tau} became negative")
        return tau

    def max_dt(self) -> float:
        sup_speed = 1.0
        if self.coeff is not None:
            sup_speed = max(1.0, math.sqrt(self.coeff.sup_a()))
        return self.cfl * self.grid.dx / sup_speed

    def initial_state(self) -> SystemState:
        grid = self.grid
        packet = wave_packet(grid, grid.x0, self.packet_xi, self.packet_width)
        zero = np.zeros(grid.n, dtype=complex)
        if self.packet_component == 1:
            u1, u2 = packet, zero
        elif self.packet_component == 2:
            u1, u2 = zero, packet
        else:
            u1, u2 = packet, packet.copy()
        return SystemState.from_arrays(grid, u1, u2, 0.0)

    def content_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.describe(), sort_keys=True).encode()
        ).hexdigest()[:16]

    def describe(self) -> dict:
        d = {
            "n": self.n, "length": self.length, "sigma": self.sigma,
            "c": self.c, "tau0": self.tau0, "taudot": self.taudot,
            "f21_zero": self.f21_zero, "cfl": self.cfl, "dt": self.dt,
            "horizon": self.horizon, "sample_stride": self.sample_stride,
            "packet_xi": self.packet_xi, "packet_width": self.packet_width,
            "packet_component": self.packet_component,
            "normalize_energy": self.normalize_energy, "seed": self.seed,
            "nonlinear": not self.nonlinearity.is_zero(),
        }
        if self.coeff is not None:
            d["coeff"] = {
                "x0": self.coeff.x0, "r": self.coeff.r,
                "r_outer": self.coeff.r_outer, "T": self.coeff.T,
                "T_outer": self.coeff.T_outer,
                "sigma_coeff": self.coeff.sigma_coeff,
                "radius_R": self.coeff.radius_R,
            }
        return d


def rhs(state: SystemState, cfg: RunConfig):
    """Discrete right-hand side (du1/dt, du2/dt) as raw arrays."""
    grid = state.grid
    dxi = 2.0j * np.pi * grid.xi
    dx_u1 = np.fft.ifft(dxi * np.fft.fft(state.u1.values))
    dx_u2 = np.fft.ifft(dxi * np.fft.fft(state.u2.values))
    if cfg.coeff is not None:
        a_vals = cfg.coeff.a(state.t, grid.x)
    else:
        a_vals = 0.0
    du1 = dx_u2
    du2 = a_vals * dx_u1
    if not cfg.nonlinearity.is_zero():
        f1, f2 = cfg.nonlinearity.apply(state.t, grid.x, state.u1.values,
                                        state.u2.values, cfg.f21_zero)
        du1 = du1 + f1
        du2 = du2 + f2
    if not (np.all(np.isfinite(du1)) and np.all(np.isfinite(du2))):
        raise SolverBlowupError(
            f"non-finite right-hand side at t = {state.t}", state.t
        )
    return du1, du2


def step_rk4(state: SystemState, cfg: RunConfig, dt: float) -> SystemState:
    """One classical RK4 step; enforces the CFL bound."""
    limit = cfg.max_dt()
    if abs(dt) > limit * (1.0 + 1e-12):
        raise CFLError(
            f"dt = {dt} violates the CFL bound; required dt <= {limit:.6e}"
        )
    grid = state.grid
    u = (state.u1.values, state.u2.values)
    k1 = rhs(state, cfg)
    s2 = SystemState.from_arrays(grid, u[0] + 0.5 * dt * k1[0],
                                 u[1] + 0.5 * dt * k1[1], state.t + 0.5 * dt)
    k2 = rhs(s2, cfg)
    s3 = SystemState.from_arrays(grid, u[0] + 0.5 * dt * k2[0],
                                 u[1] + 0.5 * dt * k2[1], state.t + 0.5 * dt)
    k3 = rhs(s3, cfg)
    s4 = SystemState.from_arrays(grid, u[0] + dt * k3[0],
                                 u[1] + dt * k3[1], state.t + dt)
    k4 = rhs(s4, cfg)
    new1 = u[0] + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    new2 = u[1] + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return SystemState.from_arrays(grid, new1, new2, state.t + dt)


@dataclass
class EnergyTrace:
    """Time series of the energy budget along one run."""

    breakdowns: list
    taudot: float
    config: dict
    initial_energy: float
    aborted: bool = False
    abort_reason: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.array([b.t for b in self.breakdowns])

    @property
    def energies(self) -> np.ndarray:
        return np.array([b.E for b in self.breakdowns])

    def max_ratio(self) -> float:
        if self.initial_energy == 0.0:
            return 0.0
        return float(np.max(self.energies) / self.initial_energy)

    def max_ratio_sum(self) -> float:
        """max over time of (|E2| + |E3| + |E4|) / E1."""
        worst = 0.0
        for b in self.breakdowns:
            if b.E1 > 0:
                worst = max(worst, (abs(b.E2) + abs(b.E3) + abs(b.E4)) / b.E1)
        return worst

    def rows(self):
        for b in self.breakdowns:
            yield {
                "t": b.t, "tau": b.tau, "E": b.E, "E1": b.E1, "E2": b.E2,
                "E3": b.E3, "E4": b.E4, "r2": b.r2, "r3": b.r3, "r4": b.r4,
            }


def run_with_energy(cfg: RunConfig, state: Optional[SystemState] = None) -> EnergyTrace:
    """Integrate to min(T, tau0/taudot), recording the energy budget.

    Returns the trace; a blow-up aborts the run but keeps the partial
    trace with the abort reason recorded.
    """
    if cfg.coeff is None:
        raise ValueError("run_with_energy needs a coefficient field")
    grid = cfg.grid
    sb = cfg.symbol_b()
    if state is None:
        state = cfg.initial_state()

    sym0 = Symmetrizer(grid, sb, 0.0)
    E0 = gevrey_energy(state, sym0, cfg.tau0, cfg.sigma)
    if cfg.normalize_energy and E0 > 0.0:
        scale = 1.0 / math.sqrt(E0)
        state = SystemState.from_arrays(grid, scale * state.u1.values,
                                        scale * state.u2.values, state.t)
        E0 = gevrey_energy(state, sym0, cfg.tau0, cfg.sigma)

    t_end = cfg.t_end()
    dt = cfg.dt if cfg.dt is not None else cfg.max_dt()
    dt = min(dt, cfg.max_dt())
    n_steps = max(1, int(math.ceil(t_end / dt - 1e-12)))
    dt = t_end / n_steps

    breakdowns = []
    aborted = False
    reason = ""

    def record(s: SystemState):
        sym = Symmetrizer(grid, sb, s.t)
        tau = cfg.tau_at(s.t)
        d = rhs(s, cfg)
        breakdowns.append(
            dt_energy_breakdown(s, d, sym, tau, cfg.sigma, cfg.taudot)
        )

    try:
        record(state)
        for step in range(n_steps):
            state = step_rk4(state, cfg, dt)
            if step % cfg.sample_stride == cfg.sample_stride - 1 \
                    or step == n_steps - 1:
                record(state)
    except SolverBlowupError as err:
        aborted = True
        reason = str(err)

    return EnergyTrace(breakdowns=breakdowns, taudot=cfg.taudot,
                       config=cfg.describe(), initial_energy=E0,
                       aborted=aborted, abort_reason=reason)


def measure_tau_threshold(cfg: RunConfig) -> float:
    """Pilot run with taudot = 0 measuring max (|E2|+|E3|+|E4|)/E1.

    Any taudot above this threshold makes the energy budget strictly
    dissipative; callers typically take twice the measured value.
    """
    pilot = replace(cfg, taudot=0.0)
    trace = run_with_energy(pilot)
    if trace.aborted:
        raise SolverBlowupError(
            f"pilot run aborted: {trace.abort_reason}", trace.times[-1]
        )
    return trace.max_ratio_sum()


def verify_breakdown_identity(state: SystemState, cfg: RunConfig,
                              h: Optional[float] = None) -> dict:
    """Centered-difference check of dE/dt = -taudot E1 + E2 + E3 + E4.

    Steps the flow to t +- h with RK4, differences the energy and
    compares with the assembled budget.  Returns the residual and the
    magnitude sum E1 + |E2| + |E3| + |E4| used for the relative test.
    """
    grid = state.grid
    sb = cfg.symbol_b()
    if h is None:
        # small against both the CFL step and the fastest energy
        # oscillation, large against the roundoff floor of E
        h = cfg.max_dt() / 64.0
    sym = Symmetrizer(grid, sb, state.t)
    d = rhs(state, cfg)
    bd = dt_energy_breakdown(state, d, sym, cfg.tau_at(state.t),
                             cfg.sigma, cfg.taudot)
    fwd = step_rk4(state, cfg, h)
    bwd = step_rk4(state, cfg, -h)
    E_fwd = gevrey_energy(fwd, Symmetrizer(grid, sb, fwd.t),
                          cfg.tau_at(fwd.t), cfg.sigma)
    E_bwd = gevrey_energy(bwd, Symmetrizer(grid, sb, bwd.t),
                          cfg.tau_at(bwd.t), cfg.sigma)
    fd = (E_fwd - E_bwd) / (2.0 * h)
    predicted = bd.dt_energy(cfg.taudot)
    magnitude = bd.E1 + abs(bd.E2) + abs(bd.E3) + abs(bd.E4)
    return {
        "fd": fd,
        "predicted": predicted,
        "residual": abs(fd - predicted),
        "magnitude": magnitude,
        "breakdown": bd,
    }
