"""Lorentzian bath spectral density and the memory kernel it induces.

The bath enters every downstream calculation only through the spectral
weight J(nu) = 1/(a + b nu^2) and the kernel

    Q(t) = integral_0^inf J(nu) (1 - cos(nu t)) dnu
         = pi/(2 sqrt(ab)) * (1 - exp(-sqrt(a/b) t)).

Both the closed form and an independent panel-quadrature evaluation are
provided so each can act as an oracle for the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectralDensity",
    "QuadratureSpec",
    "QuadratureError",
    "eval_j",
    "j_total_integral",
    "j_partial_integral",
    "q_kernel",
    "q_kernel_slope",
    "q_kernel_numeric",
    "panel_gauss_nodes",
]

# Fixed-order Gauss-Legendre rule applied per panel.  Order 8 is exact for
# polynomials of degree 15, far more than a quarter-oscillation needs.
_GL_ORDER = 8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)

# Hard cap on total quadrature nodes, to fail loudly instead of hanging.
_MAX_NODES = 40_000_000


class QuadratureError(RuntimeError):
    """Estimated quadrature error exceeds the requested tolerance."""


@dataclass(frozen=True)
class SpectralDensity:
    """Bath spectral weight J(nu) = 1/(a + b nu^2), a > 0, b > 0."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and self.a > 0):
            raise ValueError(f"a must be positive and finite, got {self.a!r}")
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValueError(f"b must be positive and finite, got {self.b!r}")

    @property
    def rate(self) -> float:
        """Decay rate sqrt(a/b) of the exponential memory kernel."""
        return math.sqrt(self.a / self.b)


def eval_j(sd: SpectralDensity, nu):
    """J(nu) = 1/(a + b nu^2).  Even in nu; accepts scalars or arrays."""
    return 1.0 / (sd.a + sd.b * np.square(nu))


def j_total_integral(sd: SpectralDensity) -> float:
    """integral_0^inf J(nu) dnu = pi / (2 sqrt(ab))."""
    return math.pi / (2.0 * math.sqrt(sd.a * sd.b))


def j_partial_integral(sd: SpectralDensity, nu: float) -> float:
    """integral_0^nu J = arctan(nu sqrt(b/a)) / sqrt(ab)."""
    return math.atan(nu * math.sqrt(sd.b / sd.a)) / math.sqrt(sd.a * sd.b)


def q_kernel(sd: SpectralDensity, t: float) -> float:
    """Memory kernel Q(t) = pi/(2 sqrt(ab)) (1 - exp(-sqrt(a/b) t)), t >= 0.

    Nondecreasing, Q(0) = 0, sup Q = pi/(2 sqrt(ab)).
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    return j_total_integral(sd) * -math.expm1(-sd.rate * t)


def q_kernel_slope(sd: SpectralDensity, t: float) -> float:
    """dQ/dt = pi/(2b) * exp(-sqrt(a/b) t) for t > 0."""
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    return math.pi / (2.0 * sd.b) * math.exp(-sd.rate * t)


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation/resolution budget for the frequency integrals.

    ``tail_tolerance`` bounds the spectral mass discarded beyond
    ``nu_max``; construction through :meth:`for_density` guarantees the
    analytic tail bound holds.  ``panels`` is a minimum panel count;
    oscillatory integrands get extra panels so each spans at most a
    quarter period.
    """

    nu_max: float
    panels: int
    tail_tolerance: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.nu_max) and self.nu_max > 0):
            raise ValueError(f"nu_max must be positive, got {self.nu_max!r}")
        if self.panels < 1:
            raise ValueError(f"panels must be >= 1, got {self.panels!r}")
        if not (math.isfinite(self.tail_tolerance) and self.tail_tolerance > 0):
            raise ValueError(
                f"tail_tolerance must be positive, got {self.tail_tolerance!r}"
            )

    def j_tail(self, sd: SpectralDensity) -> float:
        """Exact spectral mass beyond nu_max."""
        return j_total_integral(sd) - j_partial_integral(sd, self.nu_max)

    def validate_for(self, sd: SpectralDensity) -> None:
        tail = self.j_tail(sd)
        if tail > self.tail_tolerance:
            raise QuadratureError(
                f"tail integral {tail:.3e} beyond nu_max={self.nu_max:g} "
                f"exceeds tail_tolerance={self.tail_tolerance:.3e}"
            )

    @classmethod
    def for_density(
        cls,
        sd: SpectralDensity,
        tail_tolerance: float = 1e-4,
        panels: int = 64,
    ) -> "QuadratureSpec":
        """Choose nu_max so the analytic tail bound meets tail_tolerance."""
        target = tail_tolerance * math.sqrt(sd.a * sd.b)
        if target >= math.pi / 2:
            nu_max = 10.0 * sd.rate
        else:
            nu_max = sd.rate * math.tan(math.pi / 2 - target) * 1.01
            nu_max = max(nu_max, 10.0 * sd.rate)
        return cls(nu_max=nu_max, panels=panels, tail_tolerance=tail_tolerance)


def panel_gauss_nodes(lo: float, hi: float, panels: int):
    """Nodes and weights of a composite Gauss-Legendre rule on [lo, hi]."""
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def oscillation_panels(nu_max: float, t: float, minimum: int) -> int:
    """Panel count so each panel spans at most a quarter period of cos(nu t)."""
    if t <= 0:
        return minimum
    needed = int(math.ceil(4.0 * nu_max * abs(t) / math.pi))
    n = max(minimum, needed)
    if n * _GL_ORDER > _MAX_NODES:
        raise QuadratureError(
            f"quadrature would need {n} panels (t={t:g}, nu_max={nu_max:g}); "
            "reduce t or nu_max"
        )
    return n


def q_kernel_numeric(sd: SpectralDensity, t: float, quad: QuadratureSpec) -> float:
    """Quadrature evaluation of integral_0^inf J(nu)(1 - cos(nu t)) dnu.

    Acts as the oracle for :func:`q_kernel`.  The smooth part of the tail
    beyond nu_max is completed with the exact partial integral of J; the
    oscillatory remainder is bounded analytically and reported as the
    error estimate.
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t!r}")
    quad.validate_for(sd)
    if t == 0.0:
        return 0.0

    panels = oscillation_panels(quad.nu_max, t, quad.panels)
    nodes, weights = panel_gauss_nodes(0.0, quad.nu_max, panels)
    body = float(weights @ (eval_j(sd, nodes) * (1.0 - np.cos(nodes * t))))

    # Beyond nu_max, 1 - cos averages to 1: add the exact J tail and bound
    # the leftover oscillatory piece |int J cos| by integration by parts.
    tail = quad.j_tail(sd)
    err_est = min(tail, 2.0 * float(eval_j(sd, quad.nu_max)) / t)
    if err_est > quad.tail_tolerance:
        raise QuadratureError(
            f"estimated quadrature error {err_est:.3e} exceeds "
            f"tail_tolerance={quad.tail_tolerance:.3e}"
        )
    return body + tail
