"""Numerical audits of the analytic estimates behind the symmetrizer.

Every analytic inequality the construction relies on is re-checked
here on sample lattices: the Glaeser inequality for the coefficient,
the derivative bounds for b, the Faa di Bruno combinatorics (exact
rational arithmetic), admissibility of the phase-space metric and of
the weight b, the embeddings between flat and metric symbol classes,
and the explicit local Glaeser constant.  Audits return measured
constants with witnesses; they never assert values the analysis
leaves unquantified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .spectral import bracket
from .symbols import CoefficientField, PhaseMetric, SymbolB

__all__ = [
    "GlaeserViolationError",
    "glaeser_audit_a",
    "derivative_bound_audit",
    "faa_di_bruno_check",
    "metric_admissibility_audit",
    "weight_admissibility_audit",
    "embedding_check",
    "local_glaeser_constant",
]

ZERO_OVER_ZERO_FLOOR = 1e-14


class GlaeserViolationError(ArithmeticError):
    """a vanished while its x-derivative did not."""


@dataclass
class AuditReport:
    check: str
    constant: float
    witness: tuple
    passed: bool
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"check": self.check, "constant": self.constant,
             "witness": list(np.atleast_1d(np.asarray(self.witness, dtype=float))),
             "pass": bool(self.passed)}
        d.update({k: (float(v) if np.isscalar(v) else v)
                  for k, v in self.extras.items()})
        return d


def glaeser_audit_a(coeff: CoefficientField, n_t: int = 24,
                    n_x: int = 257) -> AuditReport:
    """Measure C = max (d_x a)^2 / a over [0, T] x B_r(x0).

    0/0 is resolved to 0 only when numerator and denominator both sit
    below 1e-14; a vanishing a with non-vanishing slope raises.  The
    report also carries both sides of the shrink-free comparison
    sqrt(C) <= |a| R used by the derivative-bound proof.
    """
    ts = np.linspace(0.0, coeff.T, n_t)
    xs = np.linspace(coeff.x0 - coeff.r, coeff.x0 + coeff.r, n_x)
    T, X = np.meshgrid(ts, xs, indexing="ij")
    a = coeff.a(T, X)
    da2 = coeff.dx_a(T, X) ** 2
    tiny_a = a < ZERO_OVER_ZERO_FLOOR
    bad = tiny_a & (da2 >= ZERO_OVER_ZERO_FLOOR)
    if np.any(bad):
        k = np.argwhere(bad)[0]
        raise GlaeserViolationError(
            f"Glaeser violation: a = {a[tuple(k)]:.3e} but (d_x a)^2 = "
            f"{da2[tuple(k)]:.3e} at (t, x) = ({T[tuple(k)]}, {X[tuple(k)]})"
        )
    ratio = np.where(tiny_a, 0.0, da2 / np.where(tiny_a, 1.0, a))
    k = np.unravel_index(np.argmax(ratio), ratio.shape)
    C = float(ratio[k])
    # Gevrey seminorm proxy up to second order, for the comparison flag
    R = coeff.radius_R
    s = 1.0 / coeff.sigma_coeff
    m0 = float(np.max(np.abs(a)))
    m1 = float(np.max(np.abs(coeff.dx_a(T, X))))
    m2 = float(np.max(np.abs(coeff.dxx_a(T, X))))
    seminorm = max(m0, m1 / R, m2 / (R**2 * 2.0**s))
    return AuditReport(
        check="glaeser_a",
        constant=C,
        witness=(T[k], X[k]),
        passed=math.isfinite(C),
        extras={"sqrt_C": math.sqrt(C), "seminorm_R": seminorm * R,
                "shrink_ok": math.sqrt(C) <= seminorm * R},
    )


_CENTRAL_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def _fd_mixed(fn, x: float, xi: float, alpha: int, beta: int,
              hx: float, hxi: float) -> float:
    """Central-difference d_x^alpha d_xi^beta of fn at one point."""
    ox, wx = _CENTRAL_STENCILS[alpha]
    oxi, wxi = _CENTRAL_STENCILS[beta]
    total = 0.0
    for dx, cwx in zip(ox, wx):
        for dxi, cwxi in zip(oxi, wxi):
            total += cwx * cwxi * fn(x + dx * hx, xi + dxi * hxi)
    return total / (hx**alpha * hxi**beta)


def derivative_bound_audit(sb: SymbolB, alpha: int, beta: int,
                           t: float = 0.0, n_x: int = 41, n_xi: int = 41,
                           xi_max: float = 128.0) -> AuditReport:
    """Measured sup of |d_x^a d_xi^b b| / (b^(1+a) <xi>^(-b)).

    Derivatives come from nested central differences of the closed-form
    evaluator, with steps eps^(1/(order+2)) times the local metric
    scale.  The caller compares the returned constant against its own
    budget; the audit only asserts finiteness.
    """
    if alpha + beta > 4 or alpha > 4 or beta > 4:
        raise ValueError("central stencils support alpha + beta <= 4")
    coeff = sb.coeff
    eps = np.finfo(float).eps
    xs = np.linspace(coeff.x0 - coeff.r, coeff.x0 + coeff.r, n_x)
    xis = np.concatenate([
        -np.geomspace(1.0, xi_max, n_xi // 2),
        [0.0],
        np.geomspace(1.0, xi_max, n_xi // 2),
    ])
    worst = -1.0
    witness = (np.nan, np.nan)
    for x in xs:
        for xi in xis:
            bval = float(sb.b(t, x, xi))
            hx = eps ** (1.0 / (alpha + 2)) * max(1.0 / bval, 1e-3) \
                if alpha else 1.0
            if alpha and abs(x - coeff.x0) + _CENTRAL_STENCILS[alpha][0][-1] * hx > coeff.r_outer:
                raise ValueError(
                    f"x-stencil exits the sampled domain at x = {x}"
                )
            hxi = eps ** (1.0 / (beta + 2)) * float(bracket(xi)) if beta else 1.0
            val = _fd_mixed(lambda xx, xxi: float(sb.b(t, xx, xxi)),
                            x, xi, alpha, beta, hx, hxi)
            denom = bval ** (1 + alpha) * float(bracket(xi)) ** (-beta)
            ratio = abs(val) / denom
            if ratio > worst:
                worst = ratio
                witness = (x, xi)
    return AuditReport(
        check=f"derivative_bound_b_a{alpha}b{beta}",
        constant=float(worst),
        witness=witness,
        passed=math.isfinite(worst),
        extras={"alpha": alpha, "beta": beta, "t": t},
    )


def _compositions_count(total: int, parts: int) -> int:
    """Number of ways to write `total` as an ordered sum of `parts` >= 1."""
    if parts <= 0 or total < parts:
        return 0
    count = 0
    for cuts in combinations(range(1, total), parts - 1):
        count += 1
    return count


def faa_di_bruno_check(k_max: int = 8, alpha_max: int = 8) -> AuditReport:
    """Exact checks of the composition-count and square-root coefficients.

    (i)   N(alpha, k) = binom(alpha - 1, k - 1) against enumeration;
    (ii)  the k-th derivative of y^(-1/2) is c_k y^(-1/2-k) with
          c_k = (-1/4)^k (2k)!/k!;
    (iii) |c_k| <= k!.
    """
    if not (1 <= k_max <= 8 and 1 <= alpha_max <= 8):
        raise ValueError("k_max and alpha_max must lie in 1..8")
    ok = True
    for a in range(1, alpha_max + 1):
        for k in range(1, k_max + 1):
            if _compositions_count(a, k) != math.comb(a - 1, k - 1):
                ok = False
    c = Fraction(1)
    for k in range(1, k_max + 1):
        c *= Fraction(-1, 2) - (k - 1)       # d/dy brings down (-1/2 - (k-1))
        closed = Fraction(-1, 4) ** k * Fraction(math.factorial(2 * k),
                                                 math.factorial(k))
        if c != closed:
            ok = False
        if abs(c) > math.factorial(k):
            ok = False
    return AuditReport(check="faa_di_bruno", constant=float(k_max),
                       witness=(k_max, alpha_max), passed=ok)


def _sample_phase_points(pm: PhaseMetric, t: float, n_pairs: int,
                         xi_max: float, seed: int):
    coeff = pm.sb.coeff
    rng = np.random.default_rng(seed)
    x = coeff.x0 + rng.uniform(-coeff.r, coeff.r, size=n_pairs)
    mag = np.exp(rng.uniform(0.0, np.log(xi_max + 1.0), size=n_pairs)) - 1.0
    xi = np.where(rng.random(n_pairs) < 0.5, -mag, mag)
    return x, xi


def metric_admissibility_audit(pm: PhaseMetric, t: float = 0.0,
                               n_pairs: int = 10_000, n_probes: int = 16,
                               xi_max: float = 128.0, r_slow: float = 0.1,
                               seed: int = 11) -> dict:
    """Slow variation, uncertainty and temperance, measured on samples.

    Returns the three findings: the slow-variation constant over pairs
    with g_X(X - Y) <= r_slow^2 (max over random probe directions and
    also the closed-form supremum), the minimal gain lambda over the
    lattice, and the fitted temperance pair (C, N).
    """
    sb = pm.sb
    x1, xi1 = _sample_phase_points(pm, t, n_pairs, xi_max, seed)
    x2, xi2 = _sample_phase_points(pm, t, n_pairs, xi_max, seed + 1)
    rng = np.random.default_rng(seed + 2)
    # half the partners are g-scaled perturbations, so the slow-variation
    # ball g_X(X - Y) <= r^2 is well populated
    half = n_pairs // 2
    anat = np.asarray(sb.a_natural(t, x1[:half], xi1[:half]))
    scale = rng.uniform(0.0, r_slow, size=half)
    angle = rng.uniform(0.0, 2.0 * np.pi, size=half)
    x2[:half] = x1[:half] + scale * np.cos(angle) * np.sqrt(anat)
    xi2[:half] = xi1[:half] + scale * np.sin(angle) * bracket(xi1[:half])

    gX_sep = pm.g(t, (x1, xi1), (x1 - x2, xi1 - xi2))
    ratio_sup = pm.sup_ratio(t, (x1, xi1), (x2, xi2))
    ratio_sup = np.maximum(ratio_sup, pm.sup_ratio(t, (x2, xi2), (x1, xi1)))

    probes = rng.normal(size=(n_probes, 2))
    probe_ratio = np.zeros(n_pairs)
    for p1, p2 in probes:
        gx = pm.g(t, (x1, xi1), (p1, p2))
        gy = pm.g(t, (x2, xi2), (p1, p2))
        probe_ratio = np.maximum(probe_ratio, np.maximum(gx / gy, gy / gx))

    near = gX_sep <= r_slow**2
    slow_constant = float(np.max(ratio_sup[near])) if np.any(near) else 1.0
    slow_probe_constant = float(np.max(probe_ratio[near])) if np.any(near) else 1.0

    # uncertainty: min lambda over a lattice including the worst corner
    xs = np.linspace(sb.coeff.x0 - sb.coeff.r, sb.coeff.x0 + sb.coeff.r, 101)
    xis = np.linspace(-xi_max, xi_max, 257)
    lam = sb.lam(t, xs[:, None], xis[None, :])
    k = np.unravel_index(np.argmin(lam), lam.shape)
    min_lambda = float(lam[k])

    # temperance: fit ratio <= C (1 + g^sigma_X(X-Y))^N over all pairs
    gsig = pm.g_dual(t, (x1, xi1), (x1 - x2, xi1 - xi2))
    logbase = np.log1p(gsig)
    logratio = np.log(np.maximum(ratio_sup, 1.0))
    pos = logbase > 1e-12
    slope = float(np.sum(logratio[pos] * logbase[pos])
                  / np.sum(logbase[pos] ** 2))
    N = max(1, math.ceil(slope))
    C = float(np.max(ratio_sup / (1.0 + gsig) ** N))
    return {
        "slow_variation": AuditReport(
            "slow_variation", slow_constant, (r_slow,),
            math.isfinite(slow_constant),
            extras={"probe_constant": slow_probe_constant,
                    "pairs_in_ball": int(np.sum(near))}),
        "uncertainty": AuditReport(
            "uncertainty", min_lambda, (xs[k[0]], xis[k[1]]),
            (min_lambda >= 1.0 - 1e-9) == (sb.c <= 2.0),
            extras={"c": sb.c}),
        "temperance": AuditReport(
            "temperance", C, (r_slow,), math.isfinite(C) and math.isfinite(slope),
            extras={"N": N, "fitted_slope": slope}),
    }


def weight_admissibility_audit(pm: PhaseMetric, t: float = 0.0,
                               n_pairs: int = 10_000, xi_max: float = 128.0,
                               seed: int = 13) -> AuditReport:
    """Fit b(X)/b(Y) <= C (1 + g^sigma_X(X - Y))^N over sampled pairs."""
    sb = pm.sb
    x1, xi1 = _sample_phase_points(pm, t, n_pairs, xi_max, seed)
    x2, xi2 = _sample_phase_points(pm, t, n_pairs, xi_max, seed + 1)
    bx = sb.b(t, x1, xi1)
    by = sb.b(t, x2, xi2)
    ratio = np.maximum(bx / by, by / bx)
    gsig = pm.g_dual(t, (x1, xi1), (x1 - x2, xi1 - xi2))
    logbase = np.log1p(gsig)
    logratio = np.log(np.maximum(ratio, 1.0))
    pos = logbase > 1e-12
    slope = float(np.sum(logratio[pos] * logbase[pos])
                  / np.sum(logbase[pos] ** 2))
    N = max(1, math.ceil(slope))
    C = float(np.max(ratio / (1.0 + gsig) ** N))
    k = int(np.argmax(ratio / (1.0 + gsig) ** N))
    return AuditReport("weight_admissibility", C, (x1[k], xi1[k]),
                       math.isfinite(C),
                       extras={"N": N, "fitted_slope": slope})


def embedding_check(sb: SymbolB, m: float, probe: Callable, t: float = 0.0,
                    xi_max: float = 128.0, growth_cap: float = 2.0,
                    mode: str = "metric_to_flat") -> AuditReport:
    """Check one symbol-class embedding on a sample lattice.

    `probe(alpha, beta, x, xi)` returns d_x^alpha d_xi^beta of the
    symbol (orders alpha + beta <= 2).  For "flat_to_metric" the
    measured constants of the metric class S(<xi>^m, g) must not grow
    across dyadic frequency bands; for "metric_to_flat" the same test
    runs against the flat class S^m_{1,c/2}.  A symbol of genuinely
    higher order fails by band growth.
    """
    coeff = sb.coeff
    xs = np.linspace(coeff.x0 - coeff.r, coeff.x0 + coeff.r, 31)
    lo = np.geomspace(1.0, math.sqrt(xi_max), 24)
    hi = np.geomspace(math.sqrt(xi_max), xi_max, 24)

    def band_constant(xis):
        worst = 0.0
        for alpha in range(0, 3):
            for beta in range(0, 3 - alpha):
                for x in xs:
                    d = np.abs(np.asarray(
                        [probe(alpha, beta, x, xi) for xi in xis]))
                    br = bracket(xis)
                    if mode == "flat_to_metric":
                        denom = br**m * np.asarray(
                            sb.b(t, x, xis))**alpha * br**(-beta)
                    elif mode == "metric_to_flat":
                        denom = br ** (m + alpha * sb.c / 2.0 - beta)
                    else:
                        raise ValueError(f"unknown embedding mode {mode!r}")
                    worst = max(worst, float(np.max(d / denom)))
        return worst

    c_lo = band_constant(lo)
    c_hi = band_constant(hi)
    passed = c_hi <= growth_cap * c_lo and math.isfinite(c_hi)
    return AuditReport(f"embedding_{mode}", c_hi, (m,), passed,
                       extras={"low_band": c_lo, "high_band": c_hi,
                               "m": m})


def local_glaeser_constant(f: Callable, x0: float, r_inner: float,
                           r_outer: float, df: Optional[Callable] = None,
                           d2f: Optional[Callable] = None,
                           n_samples: int = 4097) -> AuditReport:
    """Explicit local Glaeser constant and the pointwise verification.

    G = 2 M2(f; B_r) + 4/(r - r') M1(f; annulus) + 4/(r - r')^2
    M0(f; annulus), with the sup norms measured by dense sampling
    (derivatives by central differences when not supplied).  Verifies
    |f'|^2 <= G f on the inner ball and reports the measured pointwise
    constant max |f'|^2 / f.
    """
    if not (0.0 < r_inner < r_outer):
        raise ValueError("need 0 < r_inner < r_outer")
    xs_outer = np.linspace(x0 - r_outer, x0 + r_outer, n_samples)
    fv = np.asarray([f(x) for x in xs_outer], dtype=float)
    if np.any(fv < -1e-12):
        raise ValueError("f must be nonnegative on the outer ball")
    h = xs_outer[1] - xs_outer[0]
    dfv = (np.asarray([df(x) for x in xs_outer]) if df is not None
           else np.gradient(fv, h))
    d2fv = (np.asarray([d2f(x) for x in xs_outer]) if d2f is not None
            else np.gradient(dfv, h))
    dist = np.abs(xs_outer - x0)
    annulus = (dist > r_inner) & (dist < r_outer)
    inner = dist <= r_inner
    M2 = float(np.max(np.abs(d2fv)))
    M1 = float(np.max(np.abs(dfv[annulus]))) if np.any(annulus) else 0.0
    M0 = float(np.max(np.abs(fv[annulus]))) if np.any(annulus) else 0.0
    gap = r_outer - r_inner
    G = 2.0 * M2 + 4.0 / gap * M1 + 4.0 / gap**2 * M0

    fi = fv[inner]
    dfi = dfv[inner]
    tiny = fi < ZERO_OVER_ZERO_FLOOR
    bad = tiny & (dfi**2 >= ZERO_OVER_ZERO_FLOOR)
    if np.any(bad):
        xw = xs_outer[inner][np.argmax(bad)]
        raise GlaeserViolationError(
            f"local Glaeser violation at x = {xw}: f = 0 but f' != 0"
        )
    ratio = np.where(tiny, 0.0, dfi**2 / np.where(tiny, 1.0, fi))
    k = int(np.argmax(ratio))
    pointwise = float(ratio[k])
    holds = bool(np.all(dfi**2 <= G * fi + 1e-12 * max(G, 1.0)))
    return AuditReport("local_glaeser", G, (xs_outer[inner][k],), holds,
                       extras={"pointwise_max": pointwise,
                               "M0": M0, "M1": M1, "M2": M2})
