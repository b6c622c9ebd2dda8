"""Time-dependent Gaussian coefficients A(t), B(t), C(t).

Two independent routes are provided:

* :func:`abc_numeric` integrates the defining frequency integral, using
  exact per-exponential antiderivatives for the inner time integrals so
  only the (smooth) frequency quadrature is numerical.
* :func:`abc_closed_form` evaluates the residue-calculus closed forms,
  valid when the characteristic cubic has three real roots (two negative,
  one positive) -- the regime where the coefficients grow exponentially.

The closed forms factor into six scalar functions P_1..P_6 multiplying
fixed quadratic prefactors in the probe variables; the long-time limits
of those factors give the runaway constants ``alpha_limit`` (growth
coefficient of A C - B^2) and ``pi_limit`` (limiting exponent at a fixed
phase-space point).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .response import CubicRoots, ModelParams, Regime, ResponseSolution
from .spectral import (
    QuadratureSpec,
    QuadratureError,
    SpectralDensity,
    eval_j,
    oscillation_panels,
    panel_gauss_nodes,
)

__all__ = [
    "CovarianceTriple",
    "Sterm",
    "RegimeError",
    "SingularDenominator",
    "abc_numeric",
    "abc_closed_form",
    "p_factors",
    "s_terms",
    "p3_growth",
    "alpha_limit",
    "pi_limit",
    "default_quadrature",
]


class RegimeError(ValueError):
    """Operation requires the large-coupling (three-real-roots) regime."""


class SingularDenominator(ArithmeticError):
    """A root coincides with sqrt(a/b); the closed forms are singular there."""


@dataclass(frozen=True)
class CovarianceTriple:
    """Gaussian coefficients at time t: variances A (coordinate),
    C (momentum) and cross term B."""

    t: float
    a_coef: float
    b_coef: float
    c_coef: float

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"t must be nonnegative, got {self.t!r}")
        for name in ("a_coef", "b_coef", "c_coef"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def det(self) -> float:
        """A C - B^2, the covariance determinant."""
        return self.a_coef * self.c_coef - self.b_coef**2


def default_quadrature(sd: SpectralDensity, mp: ModelParams) -> QuadratureSpec:
    """Frequency-integral budget suited to the covariance integrands.

    The integrands decay like nu^-4, so a cutoff tens of times past the
    largest model frequency leaves a relative tail well below 1e-6.
    """
    nu_max = 50.0 * max(sd.rate, mp.omega, 1.0)
    tail = max(2.0 / (sd.b * nu_max), 1e-6)
    return QuadratureSpec(nu_max=nu_max, panels=64, tail_tolerance=tail)


def _phi(z: np.ndarray, t: float) -> np.ndarray:
    """(exp(z t) - 1)/z, stable for small |z t| (equals t at z = 0)."""
    zt = z * t
    small = np.abs(zt) < 1e-6
    out = np.empty_like(z)
    zs = np.where(small, 0.0, z)
    out = np.where(small, t * (1.0 + zt / 2.0 + zt * zt / 6.0),
                   (np.exp(np.where(small, 0.0, zt)) - 1.0) / np.where(small, 1.0, zs))
    return out


def _uw_transforms(rs: ResponseSolution, t: float, nu: np.ndarray):
    """U(nu) = int_0^t v e^{-i nu x} dx and W(nu) likewise for v'.

    Exact per exponential term: the time integral of e^{(r - i nu)x} is
    phi(r - i nu) evaluated at t.
    """
    r = np.asarray(rs.roots.roots)
    c = np.asarray(rs.coefficients)
    u = np.zeros(len(nu), dtype=complex)
    w = np.zeros(len(nu), dtype=complex)
    for ri, ci in zip(r, c):
        ph = _phi(ri - 1j * nu, t)
        u += ci * ph
        w += ci * ri * ph
    return u, w


def abc_numeric(
    sd: SpectralDensity,
    mp: ModelParams,
    rs: ResponseSolution,
    t: float,
    quad: QuadratureSpec | None = None,
) -> CovarianceTriple:
    """A, B, C by frequency quadrature of the defining identity.

    A = eps^2 kT int J |U|^2, C likewise with W, B with Re(U conj W).
    The integrand oscillates with period ~2 pi/t in nu, so the panel
    count scales with t.  The tail estimate uses |U(nu)| <= const/nu
    (integration by parts) and is checked against the tolerance,
    interpreted relative to the largest coefficient.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    if t == 0.0:
        return CovarianceTriple(t=0.0, a_coef=0.0, b_coef=0.0, c_coef=0.0)
    if quad is None:
        quad = default_quadrature(sd, mp)

    panels = oscillation_panels(quad.nu_max, t, quad.panels)
    nu, wts = panel_gauss_nodes(0.0, quad.nu_max, panels)
    u, w = _uw_transforms(rs, t, nu)
    j = eval_j(sd, nu)
    pref = mp.epsilon**2 * mp.kT
    a = pref * float(wts @ (j * (u.real**2 + u.imag**2)))
    c = pref * float(wts @ (j * (w.real**2 + w.imag**2)))
    b = pref * float(wts @ (j * (u.real * w.real + u.imag * w.imag)))

    # tail: |U|, |W| <= (boundary + total variation)/nu beyond nu_max
    from .response import eval_response

    xs = np.linspace(0.0, t, 257)
    v, v1, v2 = eval_response(rs, xs)
    bu = abs(v[0]) + abs(v[-1]) + np.trapz(np.abs(v1), xs)
    bw = abs(v1[0]) + abs(v1[-1]) + np.trapz(np.abs(v2), xs)
    jtail = quad.j_tail(sd)
    tail_est = pref * max(bu, bw) ** 2 * jtail / quad.nu_max**2
    scale = max(abs(a), abs(c), 1e-300)
    if tail_est / scale > quad.tail_tolerance:
        raise QuadratureError(
            f"estimated relative tail {tail_est / scale:.3e} exceeds "
            f"tolerance {quad.tail_tolerance:.3e}; increase nu_max"
        )
    return CovarianceTriple(t=t, a_coef=a, b_coef=b, c_coef=c)


def _lambdas_checked(roots: CubicRoots, sd: SpectralDensity) -> tuple[float, float, float]:
    if roots.regime is not Regime.LARGE_COUPLING:
        raise RegimeError(
            f"closed forms require the large-coupling regime, got {roots.regime}"
        )
    lam = roots.lambdas()
    for l in lam:
        if abs(sd.a - sd.b * l * l) < 1e-8 * sd.a:
            raise SingularDenominator(
                f"root magnitude {l:g} coincides with sqrt(a/b); closed forms singular"
            )
    return lam


def _response_coeffs(lam: tuple[float, float, float]) -> tuple[float, float, float]:
    """Exponential coefficients (C1, C2, C3) in the three-real-roots case."""
    l1, l2, l3 = lam
    c1 = (l3 - l2) / ((l2 - l1) * (l1 + l3))
    c2 = (l1 - l3) / ((l2 - l1) * (l2 + l3))
    c3 = (l1 + l2) / ((l2 + l3) * (l1 + l3))
    return c1, c2, c3


def p_factors(roots: CubicRoots, sd: SpectralDensity, t: float) -> tuple[float, ...]:
    """The six scalar factors P_1..P_6 of the residue closed forms.

    P_3 grows like exp(2 lam3 t); the others tend to constants whenever
    lam3 < min(lam1, lam2, sqrt(a/b)).
    """
    l1, l2, l3 = _lambdas_checked(roots, sd)
    c1, c2, c3 = _response_coeffs((l1, l2, l3))
    a, b = sd.a, sd.b
    s = sd.rate
    rba = 1.0 / s  # sqrt(b/a)
    d1 = a - b * l1 * l1
    d2 = a - b * l2 * l2
    d3 = a - b * l3 * l3

    e1 = math.exp(-l1 * t)
    e2 = math.exp(-l2 * t)
    g = math.exp(l3 * t)
    es = math.exp(-s * t)

    p1 = (math.pi * c1 * c1 / (2 * d1)) * (
        (1 + e1 * e1) * (1 / l1 - rba) - 2 * e1 * (e1 / l1 - rba * es)
    )
    p2 = (math.pi * c2 * c2 / (2 * d2)) * (
        (1 + e2 * e2) * (1 / l2 - rba) - 2 * e2 * (e2 / l2 - rba * es)
    )
    p3 = (math.pi * c3 * c3 / (2 * d3)) * (
        (1 + g * g) * (1 / l3 - rba) - 2 * (1 / l3 - rba * g * es)
    )
    p4 = (math.pi * c1 * c2 / (d1 * d2)) * (
        (1 - e1 * e2) * (2 * a - b * (l1 * l1 + l2 * l2)) / (l1 + l2)
        + (l1 * l2 * b ** 1.5 / math.sqrt(a) - math.sqrt(a * b))
        * (1 + e1 * e2 - e1 * es - e2 * es)
        - b * es * (e2 - e1) * (l2 - l1)
    )
    p5 = (math.pi * c2 * c3 / (d2 * d3)) * (
        (1 - g * e2) * (2 * a - b * (l2 * l2 + l3 * l3)) / (l2 - l3)
        - (l2 * l3 * b ** 1.5 / math.sqrt(a) + math.sqrt(a * b))
        * (1 + g * e2 - e2 * es - g * es)
        - b * es * (e2 - g) * (l2 + l3)
    )
    p6 = (math.pi * c1 * c3 / (d1 * d3)) * (
        (1 - g * e1) * (2 * a - b * (l1 * l1 + l3 * l3)) / (l1 - l3)
        - (l1 * l3 * b ** 1.5 / math.sqrt(a) + math.sqrt(a * b))
        * (1 + g * e1 - e1 * es - g * es)
        - b * es * (e1 - g) * (l1 + l3)
    )
    return (p1, p2, p3, p4, p5, p6)


@dataclass(frozen=True)
class Sterm:
    """One of the six summands of the frequency integral, factored as a
    scalar P value times a fixed quadratic prefactor in (lam, mu)."""

    index: int
    p_value: float

    def prefactor(self, lam: float, mu: float, lambdas: tuple[float, float, float]) -> float:
        l1, l2, l3 = lambdas
        return {
            1: (lam - mu * l1) ** 2,
            2: (lam - mu * l2) ** 2,
            3: (lam + mu * l3) ** 2,
            4: (lam - mu * l1) * (lam - mu * l2),
            5: (lam - mu * l2) * (lam + mu * l3),
            6: (lam - mu * l1) * (lam + mu * l3),
        }[self.index]

    def value(self, lam: float, mu: float, lambdas: tuple[float, float, float]) -> float:
        return self.p_value * self.prefactor(lam, mu, lambdas)


def s_terms(roots: CubicRoots, sd: SpectralDensity, t: float) -> tuple[Sterm, ...]:
    """All six S terms at time t (P values bundled with their prefactors)."""
    ps = p_factors(roots, sd, t)
    return tuple(Sterm(index=i + 1, p_value=p) for i, p in enumerate(ps))


def abc_closed_form(
    sd: SpectralDensity, mp: ModelParams, roots: CubicRoots, t: float
) -> CovarianceTriple:
    """A, B, C from the residue closed forms (large-coupling regime only)."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    l1, l2, l3 = _lambdas_checked(roots, sd)
    p1, p2, p3, p4, p5, p6 = p_factors(roots, sd, t)
    pref = mp.epsilon**2 * mp.kT
    a = pref * (p1 + p2 + p3 + p4 + p5 + p6)
    b = pref * (
        -l1 * p1
        - l2 * p2
        + l3 * p3
        - 0.5 * (l1 + l2) * p4
        - 0.5 * (l2 - l3) * p5
        - 0.5 * (l1 - l3) * p6
    )
    c = pref * (
        l1 * l1 * p1
        + l2 * l2 * p2
        + l3 * l3 * p3
        + l1 * l2 * p4
        - l2 * l3 * p5
        - l1 * l3 * p6
    )
    return CovarianceTriple(t=t, a_coef=a, b_coef=b, c_coef=c)


def p3_growth(roots: CubicRoots, sd: SpectralDensity, t: float) -> float:
    """P_3(t): the exponentially growing factor, log-slope -> 2 lam3."""
    return p_factors(roots, sd, t)[2]


def alpha_limit(roots: CubicRoots, sd: SpectralDensity) -> float:
    """Long-time growth coefficient of A C - B^2 relative to P_3:

        lim (A C - B^2) / ((eps^2 kT)^2 P_3) = pi / (2 b lam1 lam2 (lam1 + lam2)).

    Note the 2 in the denominator: it follows from assembling the limits
    of P_1, P_2, P_4 (and is confirmed by quadrature); the factor-free
    variant sometimes quoted alongside these closed forms is off by two.
    """
    l1, l2, _ = _lambdas_checked(roots, sd)
    return math.pi / (2.0 * sd.b * l1 * l2 * (l1 + l2))


def pi_limit(roots: CubicRoots, sd: SpectralDensity, mp: ModelParams) -> float:
    """Limiting exponent at any fixed phase-space point:

        lim (C xi^2 - 2 B xi eta + A eta^2) / (2 (A C - B^2))
            = (a lam3^2 / (eps^2 kT pi)) (1/lam3 + sqrt(b/a)) (q0 lam3 + p0)^2.

    Derived from the P_3 asymptotics; the prefactor is half the variant
    sometimes quoted next to these closed forms (the discrepancy is the
    same dropped 1/2 as in :func:`alpha_limit`, and the value here is the
    one the direct exponent evaluation converges to).
    """
    _, _, l3 = _lambdas_checked(roots, sd)
    rba = math.sqrt(sd.b / sd.a)
    amp = mp.q0 * l3 + mp.p0
    return (
        sd.a
        * l3**2
        / (mp.epsilon**2 * mp.kT * math.pi)
        * (1.0 / l3 + rba)
        * amp**2
    )
