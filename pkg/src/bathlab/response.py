"""Response function of the coupled oscillator and its characteristic cubic.

The continuum-limit dynamics reduce to a third-order linear ODE whose
characteristic polynomial is

    lam^3 + s lam^2 + w^2 lam + (s w^2 - eps^2 pi/(2b)) = 0,  s = sqrt(a/b).

Its root pattern classifies the coupling regime: a positive real root
(coupling past the positive-definiteness bound of the full Hamiltonian)
produces exponential runaway, otherwise the response decays.  This module
solves the cubic in closed form, builds the exponential-sum response
v(t) with v(0)=0, v'(0)=1, v''(0)=0, and provides two independent
time-domain solvers (continuum kernel and finite-bath kernel) that act as
oracles for the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .spectral import SpectralDensity, eval_j, j_total_integral

__all__ = [
    "Regime",
    "ModelParams",
    "CubicRoots",
    "ResponseSolution",
    "BathDiscretization",
    "VolterraGrid",
    "NearDegenerateRoots",
    "StepTooLarge",
    "Theorem5Bound",
    "SylvesterResult",
    "characteristic_coeffs",
    "characteristic_roots",
    "cubic_residuals",
    "vieta_residuals",
    "theorem5_bound",
    "sylvester_check",
    "hamiltonian_matrix",
    "build_response",
    "eval_response",
    "max_step",
    "solve_volterra",
    "solve_volterra_finite",
    "discretize_bath",
    "finite_kernel",
    "finite_kernel_grid",
]


class NearDegenerateRoots(ValueError):
    """Characteristic roots too close to a double-root boundary."""


class StepTooLarge(ValueError):
    """Requested integration step violates the solver's stability budget."""


class Regime(Enum):
    LARGE_COUPLING = "LargeCoupling"
    SMALL_COUPLING = "SmallCoupling"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class ModelParams:
    """System oscillator parameters and initial data.

    omega   : oscillator frequency (rad/time), > 0
    epsilon : coupling constant, >= 0
    kT      : bath temperature in energy units, > 0
    q0, p0  : initial coordinate and momentum of the system oscillator
    """

    omega: float
    epsilon: float
    kT: float
    q0: float = 0.0
    p0: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be positive, got {self.omega!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon!r}")
        if not (math.isfinite(self.kT) and self.kT > 0):
            raise ValueError(f"kT must be positive, got {self.kT!r}")

    def coupling_rhs(self, sd: SpectralDensity) -> float:
        """eps^2 pi / (2b), the constant on the right of the factored cubic."""
        return self.epsilon**2 * math.pi / (2.0 * sd.b)

    @classmethod
    def from_coupling_rhs(
        cls,
        sd: SpectralDensity,
        omega: float,
        rhs: float,
        kT: float = 1.0,
        q0: float = 0.0,
        p0: float = 0.0,
    ) -> "ModelParams":
        """Build params with epsilon chosen so eps^2 pi/(2b) equals rhs."""
        if rhs < 0:
            raise ValueError(f"coupling rhs must be nonnegative, got {rhs!r}")
        eps = math.sqrt(2.0 * sd.b * rhs / math.pi)
        return cls(omega=omega, epsilon=eps, kT=kT, q0=q0, p0=p0)


@dataclass(frozen=True)
class CubicRoots:
    """Roots of the characteristic cubic with their regime label.

    Ordering contract: real roots ascending, then the conjugate pair with
    positive imaginary part first.  In the large-coupling regime the roots
    are (-lam1, -lam2, +lam3) with lam1 >= lam2 > 0 and lam3 > 0.
    """

    roots: tuple[complex, complex, complex]
    regime: Regime

    def lambdas(self) -> tuple[float, float, float]:
        """Positive decay/growth magnitudes (lam1, lam2, lam3).

        Only defined when all three roots are real with exactly one
        positive (the proper large-coupling pattern).
        """
        r = self.roots
        if any(z.imag != 0.0 for z in r):
            raise ValueError("lambdas() requires three real roots")
        if not (r[0].real < 0 < r[2].real and r[1].real < 0):
            raise ValueError("lambdas() requires two negative roots and one positive")
        return (-r[0].real, -r[1].real, r[2].real)

    def lambda3(self) -> float | None:
        """The positive real root, if present."""
        for z in self.roots:
            if z.imag == 0.0 and z.real > 0:
                return z.real
        return None


def characteristic_coeffs(sd: SpectralDensity, mp: ModelParams) -> tuple[float, float, float]:
    """Coefficients (p, q, r) of the monic cubic lam^3 + p lam^2 + q lam + r."""
    s = sd.rate
    return (s, mp.omega**2, s * mp.omega**2 - mp.coupling_rhs(sd))


def _newton_polish(x: float, p: float, q: float, r: float, iters: int = 3) -> float:
    for _ in range(iters):
        f = ((x + p) * x + q) * x + r
        df = (3.0 * x + 2.0 * p) * x + q
        if df == 0.0:
            break
        step = f / df
        x -= step
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def _solve_cubic_monic(p: float, q: float, r: float) -> list[complex]:
    """All roots of x^3 + p x^2 + q x + r via the depressed trig/hyperbolic
    closed forms, each real root polished with Newton steps."""
    # depressed form y^3 + P y + Q with x = y - p/3
    P = q - p * p / 3.0
    Q = 2.0 * p**3 / 27.0 - p * q / 3.0 + r
    shift = -p / 3.0
    disc = -4.0 * P**3 - 27.0 * Q * Q

    if disc > 0.0:
        # three distinct real roots (requires P < 0)
        m = 2.0 * math.sqrt(-P / 3.0)
        arg = 3.0 * Q / (P * m)
        arg = min(1.0, max(-1.0, arg))
        theta = math.acos(arg)
        ys = [m * math.cos((theta - 2.0 * math.pi * k) / 3.0) for k in range(3)]
        xs = [_newton_polish(y + shift, p, q, r) for y in ys]
        xs.sort()
        return [complex(x) for x in xs]

    # one real root
    if P == 0.0:
        y0 = -math.copysign(abs(Q) ** (1.0 / 3.0), Q)
    elif P < 0.0:
        m = 2.0 * math.sqrt(-P / 3.0)
        arg = -3.0 * abs(Q) / (P * m)  # >= 1 here
        y0 = -math.copysign(m * math.cosh(math.acosh(max(1.0, arg)) / 3.0), Q)
    else:
        m = 2.0 * math.sqrt(P / 3.0)
        arg = 3.0 * Q / (P * m)
        y0 = -m * math.sinh(math.asinh(arg) / 3.0)
    x0 = _newton_polish(y0 + shift, p, q, r)

    # deflate to the remaining quadratic x^2 + b1 x + c1
    b1 = p + x0
    c1 = q + x0 * b1
    half = -b1 / 2.0
    disc2 = half * half - c1
    if disc2 >= 0.0:
        sq = math.sqrt(disc2)
        xs = sorted([half - sq, half + sq])
        out = sorted([x0, xs[0], xs[1]])
        return [complex(x) for x in out]
    sq = math.sqrt(-disc2)
    return [complex(x0), complex(half, sq), complex(half, -sq)]


def _coefficient_scale(p: float, q: float, r: float) -> float:
    return max(1.0, abs(p), math.sqrt(abs(q)), abs(r) ** (1.0 / 3.0))


def characteristic_roots(sd: SpectralDensity, mp: ModelParams) -> CubicRoots:
    """Solve the characteristic cubic and classify the coupling regime.

    A root at zero (within tolerance) marks the regime boundary; a
    positive real root marks large coupling (non-positive-definite
    Hamiltonian, Theorem 5 side); everything else is small coupling.
    """
    p, q, r = characteristic_coeffs(sd, mp)
    roots = _solve_cubic_monic(p, q, r)
    scale = _coefficient_scale(p, q, r)
    tol = 1e-9 * scale

    # deterministic ordering: real roots ascending, then the conjugate
    # pair, positive imaginary part first
    real = sorted([z for z in roots if z.imag == 0.0], key=lambda z: z.real)
    cplx = sorted([z for z in roots if z.imag != 0.0], key=lambda z: -z.imag)
    ordered = tuple(real + cplx)

    if any(abs(z) <= tol for z in ordered):
        regime = Regime.BOUNDARY
    elif any(z.imag == 0.0 and z.real > tol for z in ordered):
        regime = Regime.LARGE_COUPLING
    else:
        regime = Regime.SMALL_COUPLING

    out = CubicRoots(roots=ordered, regime=regime)
    res = cubic_residuals(sd, mp, out)
    if np.max(res) > 1e-8 * scale**3:
        raise ArithmeticError(f"cubic solver residuals too large: {res}")
    return out


def cubic_residuals(sd: SpectralDensity, mp: ModelParams, cr: CubicRoots) -> np.ndarray:
    """|lam^3 + p lam^2 + q lam + r| for each root."""
    p, q, r = characteristic_coeffs(sd, mp)
    z = np.asarray(cr.roots)
    return np.abs(((z + p) * z + q) * z + r)


def vieta_residuals(sd: SpectralDensity, mp: ModelParams, cr: CubicRoots) -> tuple[float, float, float]:
    """Residuals of the three symmetric-function identities of the cubic."""
    p, q, r = characteristic_coeffs(sd, mp)
    z1, z2, z3 = cr.roots
    return (
        abs(z1 + z2 + z3 + p),
        abs(z1 * z2 + z1 * z3 + z2 * z3 - q),
        abs(z1 * z2 * z3 + r),
    )


@dataclass(frozen=True)
class Theorem5Bound:
    critical_eps_sq: float
    positive_definite: bool


def theorem5_bound(sd: SpectralDensity, mp: ModelParams) -> Theorem5Bound:
    """Positive-definiteness bound eps^2 <= 2 sqrt(ab) omega^2 / pi.

    Equivalently: the characteristic cubic has a positive real root iff
    the bound fails strictly.
    """
    critical = 2.0 * math.sqrt(sd.a * sd.b) * mp.omega**2 / math.pi
    return Theorem5Bound(
        critical_eps_sq=critical,
        positive_definite=mp.epsilon**2 <= critical,
    )


@dataclass(frozen=True, eq=False)
class BathDiscretization:
    """Finite bath of n oscillators approximating the continuum spectrum.

    Midpoint discretization: alpha_k^2 / omega_k^2 = J(omega_k) * delta,
    so partial sums of alpha^2/omega^2 converge to the partial integrals
    of J.
    """

    n: int
    omegas: np.ndarray
    alphas: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 1 or len(self.omegas) != self.n or len(self.alphas) != self.n:
            raise ValueError("inconsistent bath arrays")
        if not (np.all(np.diff(self.omegas) > 0) and self.omegas[0] > 0):
            raise ValueError("bath frequencies must be positive and increasing")
        if not np.all(self.alphas > 0):
            raise ValueError("bath couplings must be positive")


def discretize_bath(sd: SpectralDensity, n: int, nu_max: float) -> BathDiscretization:
    """Midpoint grid omega_k = (k - 1/2) nu_max/n with matched couplings."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if nu_max <= 0:
        raise ValueError(f"nu_max must be positive, got {nu_max!r}")
    delta = nu_max / n
    om = (np.arange(1, n + 1) - 0.5) * delta
    al = om * np.sqrt(eval_j(sd, om) * delta)
    return BathDiscretization(n=n, omegas=om, alphas=al)


def finite_kernel(bath: BathDiscretization, t) :
    """K_N(t) = sum_n alpha_n^2 sin(omega_n t)/omega_n."""
    t = np.asarray(t, dtype=float)
    coef = bath.alphas**2 / bath.omegas
    out = np.sin(np.multiply.outer(t, bath.omegas)) @ coef
    return float(out) if out.ndim == 0 else out


def finite_kernel_grid(bath: BathDiscretization, t_grid: np.ndarray, block: int = 2048) -> np.ndarray:
    """finite_kernel evaluated on a (possibly long) grid, in blocks."""
    coef = bath.alphas**2 / bath.omegas
    out = np.empty(len(t_grid))
    for lo in range(0, len(t_grid), block):
        hi = min(lo + block, len(t_grid))
        out[lo:hi] = np.sin(np.multiply.outer(t_grid[lo:hi], bath.omegas)) @ coef
    return out


@dataclass(frozen=True)
class SylvesterResult:
    d_n: float
    positive_definite: bool


def sylvester_check(bath: BathDiscretization, mp: ModelParams) -> SylvesterResult:
    """Sign of the binding leading principal minor of the doubled Hamiltonian.

    The minor factors as (prod omega_i^2) * (omega^2 - eps^2 sum alpha_i^2
    / omega_i^2); only the last factor can change sign, so it is returned
    directly (avoiding the product overflow) as ``d_n``.
    """
    factor = mp.omega**2 - mp.epsilon**2 * float(np.sum(bath.alphas**2 / bath.omegas**2))
    return SylvesterResult(d_n=factor, positive_definite=factor > 0.0)


def hamiltonian_matrix(bath: BathDiscretization, mp: ModelParams) -> np.ndarray:
    """Doubled Hamiltonian as a quadratic form in (q, q_1..q_n, p_1..p_n).

    Dense; intended for small n (test oracle for sylvester_check).
    """
    n = bath.n
    m = np.zeros((2 * n + 1, 2 * n + 1))
    m[0, 0] = mp.omega**2
    m[0, 1 : n + 1] = mp.epsilon * bath.alphas
    m[1 : n + 1, 0] = mp.epsilon * bath.alphas
    m[np.arange(1, n + 1), np.arange(1, n + 1)] = bath.omegas**2
    m[np.arange(n + 1, 2 * n + 1), np.arange(n + 1, 2 * n + 1)] = 1.0
    return m


@dataclass(frozen=True)
class ResponseSolution:
    """v(t) = sum_i C_i exp(r_i t) with v(0)=0, v'(0)=1, v''(0)=0."""

    roots: CubicRoots
    coefficients: tuple[complex, complex, complex]


def build_response(roots: CubicRoots) -> ResponseSolution:
    """Solve the initial-condition system for the exponential coefficients.

    For three distinct roots the solution is
    C_i = -(r_j + r_k) / ((r_i - r_j)(r_i - r_k)).
    """
    r = roots.roots
    scale = max(1.0, max(abs(z) for z in r))
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(r[i] - r[j]) <= 1e-8 * scale:
                raise NearDegenerateRoots(
                    f"roots {r[i]} and {r[j]} closer than 1e-8 relative; "
                    "parameters sit on a double-root boundary"
                )
    coeffs = []
    for i in range(3):
        j, k = {0: (1, 2), 1: (0, 2), 2: (0, 1)}[i]
        coeffs.append(-(r[j] + r[k]) / ((r[i] - r[j]) * (r[i] - r[k])))
    c = tuple(coeffs)

    v0 = c[0] + c[1] + c[2]
    v1 = c[0] * r[0] + c[1] * r[1] + c[2] * r[2]
    v2 = c[0] * r[0] ** 2 + c[1] * r[1] ** 2 + c[2] * r[2] ** 2
    if abs(v0) > 1e-12 or abs(v1 - 1.0) > 1e-12 or abs(v2) > 1e-12:
        raise ArithmeticError(
            f"initial conditions violated: v(0)={v0}, v'(0)={v1}, v''(0)={v2}"
        )
    return ResponseSolution(roots=roots, coefficients=c)


def eval_response(rs: ResponseSolution, t):
    """(v, v', v'') at time(s) t from the exponential expansion.

    The imaginary residue of the reconstruction must stay below 1e-10
    relative; it is checked and discarded.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    r = np.asarray(rs.roots.roots)
    c = np.asarray(rs.coefficients)
    ert = np.exp(np.multiply.outer(t_arr, r))
    v = ert @ c
    v1 = ert @ (c * r)
    v2 = ert @ (c * r * r)
    for arr in (v, v1, v2):
        bad = np.abs(arr.imag) > 1e-10 * np.maximum(np.abs(arr.real), 1.0)
        if np.any(bad):
            raise ArithmeticError("imaginary residue of v(t) exceeds 1e-10 relative")
    if np.isscalar(t) or np.asarray(t).ndim == 0:
        return float(v[0].real), float(v1[0].real), float(v2[0].real)
    return v.real, v1.real, v2.real


def max_step(sd: SpectralDensity, mp: ModelParams) -> float:
    """Largest admissible Volterra step h: 0.01/max|root| and 0.01 sqrt(b/a)."""
    cr = characteristic_roots(sd, mp)
    rmax = max(abs(z) for z in cr.roots)
    return min(0.01 / rmax, 0.01 * math.sqrt(sd.b / sd.a))


@dataclass(frozen=True, eq=False)
class VolterraGrid:
    """Sampled response (v, v', v'') on a uniform time grid."""

    h: float
    t: np.ndarray
    v: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def index_of(self, time: float) -> int:
        """Grid index of a requested time; the time must lie on the grid."""
        k = int(round(time / self.h))
        if k < 0 or k >= len(self.t) or abs(k * self.h - time) > 1e-9 * max(1.0, abs(time)):
            raise ValueError(f"time {time!r} is not on the grid (h={self.h!r})")
        return k


def _grid_steps(t_max: float, h: float) -> int:
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max!r}")
    return int(math.ceil(t_max / h - 1e-12))


def solve_volterra(sd: SpectralDensity, mp: ModelParams, t_max: float, h: float) -> VolterraGrid:
    """March the continuum-memory response equation.

    The exponential kernel makes the memory integral local: with
    F(t) = int_0^t v(tau) exp(-s (t - tau)) dtau the system becomes

        v' = w,   w' = -omega^2 v + (eps^2 pi / 2b) F,   F' = v - s F,

    integrated with the classical fourth-order Runge-Kutta one-step map
    (constant for a linear autonomous system, so it is precomputed).
    """
    hmax = max_step(sd, mp)
    if h > hmax * (1.0 + 1e-12):
        raise StepTooLarge(f"h={h!r} exceeds the admissible step {hmax!r}")
    n = _grid_steps(t_max, h)
    s = sd.rate
    c = mp.coupling_rhs(sd)
    a_mat = np.array(
        [
            [0.0, 1.0, 0.0],
            [-mp.omega**2, 0.0, c],
            [1.0, 0.0, -s],
        ]
    )
    ha = h * a_mat
    rk4 = np.eye(3) + ha + ha @ ha / 2.0 + ha @ ha @ ha / 6.0 + ha @ ha @ ha @ ha / 24.0

    y = np.empty((n + 1, 3))
    y[0] = (0.0, 1.0, 0.0)
    for i in range(n):
        y[i + 1] = rk4 @ y[i]
    t = np.arange(n + 1) * h
    v, w, f = y[:, 0], y[:, 1], y[:, 2]
    return VolterraGrid(h=h, t=t, v=v, v1=w, v2=-mp.omega**2 * v + c * f)


def solve_volterra_finite(
    bath: BathDiscretization, sd: SpectralDensity, mp: ModelParams, t_max: float, h: float
) -> VolterraGrid:
    """March the finite-bath response equation with the sine-sum kernel.

    The memory term eps^2 int_0^t K_N(t - tau) v(tau) dtau is evaluated by
    trapezoid on the grid (K_N(0) = 0, so the newest node never
    contributes and the predictor-corrector pair stays explicit and
    second-order).
    """
    hmax = max_step(sd, mp)
    if h > hmax * (1.0 + 1e-12):
        raise StepTooLarge(f"h={h!r} exceeds the admissible step {hmax!r}")
    n = _grid_steps(t_max, h)
    t = np.arange(n + 1) * h
    kern = finite_kernel_grid(bath, t)
    eps2 = mp.epsilon**2
    w2 = mp.omega**2

    v = np.zeros(n + 1)
    w = np.zeros(n + 1)
    g = np.zeros(n + 1)
    w[0] = 1.0

    def memory(m: int) -> float:
        if m == 0:
            return 0.0
        acc = 0.5 * kern[m] * v[0]
        if m > 1:
            acc += kern[m - 1 : 0 : -1] @ v[1:m]
        return eps2 * h * acc

    for i in range(n):
        g[i] = memory(i)
        k1v, k1w = w[i], -w2 * v[i] + g[i]
        v_star = v[i] + h * k1v
        w_star = w[i] + h * k1w
        g_next = memory(i + 1)
        k2v, k2w = w_star, -w2 * v_star + g_next
        v[i + 1] = v[i] + 0.5 * h * (k1v + k2v)
        w[i + 1] = w[i] + 0.5 * h * (k1w + k2w)
    g[n] = memory(n)
    return VolterraGrid(h=h, t=t, v=v, v1=w, v2=-w2 * v + g)
