"""Refraction indices, Verdet constant and Faraday angle of a thin slab.

Conductivities are two-dimensional (sheet) values; the slab thickness ``d``
converts them to bulk ones.  With ``kappa = 4 pi / (d omega eps)``

    f(u, v) = [(1 + kappa u)^2 + (kappa v)^2]^(1/4) cos(arctan(kappa v / (1 + kappa u)) / 2)
            = Re sqrt(1 + kappa (u + i v))

on ``|u| < 1/kappa``, and ``eta_pm = sqrt(mu eps) f(+-sigma21, sigma11)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError

__all__ = ["FaradayResult", "SlabOptics", "df_du", "f_uv", "refraction_indices", "verdet_and_angle"]


@dataclass(frozen=True)
class SlabOptics:
    """Slab thickness, material constants, speed of light and light frequency."""

    d: float
    eps_r: float = 1.0
    mu_r: float = 1.0
    c: float = 1.0
    omega: float = 7.0

    def __post_init__(self):
        for name in ("d", "eps_r", "mu_r", "c", "omega"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be positive and finite, got {value!r}")

    @property
    def kappa(self) -> float:
        return 4 * math.pi / (self.d * self.omega * self.eps_r)

    @property
    def u_max(self) -> float:
        """Half-width of the admissible ``u`` range."""
        return 1.0 / self.kappa


def _check_u(u: float, optics: SlabOptics):
    if not math.isfinite(u) or abs(u) >= optics.u_max:
        raise ValidationError(f"|u|={abs(u):.6g} must be below d*omega*eps/(4 pi)={optics.u_max:.6g}")


def f_uv(u: float, v: float, optics: SlabOptics) -> float:
    """The real part of ``sqrt(1 + kappa (u + i v))`` in polar form."""
    _check_u(u, optics)
    if not math.isfinite(v):
        raise ValidationError("v must be finite")
    k = optics.kappa
    x, y = 1 + k * u, k * v
    return (x * x + y * y) ** 0.25 * math.cos(0.5 * math.atan(y / x))


def df_du(u: float, v: float, optics: SlabOptics) -> float:
    """Analytic ``df/du = Re[kappa / (2 sqrt(1 + kappa (u + i v)))]``."""
    _check_u(u, optics)
    k = optics.kappa
    root = complex(1 + k * u, k * v) ** 0.5
    return (k / (2 * root)).real


def refraction_indices(sigma21_2d: float, sigma11_2d: float, optics: SlabOptics) -> tuple[float, float]:
    """``(eta_plus, eta_minus)``, both non-negative."""
    scale = math.sqrt(optics.mu_r * optics.eps_r)
    return (scale * f_uv(sigma21_2d, sigma11_2d, optics),
            scale * f_uv(-sigma21_2d, sigma11_2d, optics))


@dataclass(frozen=True)
class FaradayResult:
    verdet: float
    theta: float
    theta_exact: float
    eta_plus: float
    eta_minus: float

    def to_record(self) -> dict:
        return {
            "verdet": self.verdet,
            "theta": self.theta,
            "theta_exact": self.theta_exact,
            "eta_plus": self.eta_plus,
            "eta_minus": self.eta_minus,
        }


def verdet_and_angle(sigma21_first: float, sigma11_zero: float, b: float, optics: SlabOptics) -> FaradayResult:
    """Verdet constant ``V`` and linearised angle ``theta = d b V``.

    ``V = -sqrt(mu eps) omega sigma21^(1) / c * df/du(0, sigma11^(0))``.
    ``theta_exact`` is ``omega d (eta_minus - eta_plus) / (2c)`` with
    ``sigma21 = b sigma21^(1)`` and ``sigma11 = sigma11^(0)``, the quantity
    that ``theta`` linearises.
    """
    for name, value in (("sigma21_first", sigma21_first), ("sigma11_zero", sigma11_zero), ("b", b)):
        if not math.isfinite(value):
            raise ValidationError(f"{name} must be finite")
    scale = math.sqrt(optics.mu_r * optics.eps_r)
    verdet = -scale * optics.omega * sigma21_first / optics.c * df_du(0.0, sigma11_zero, optics)
    eta_plus, eta_minus = refraction_indices(b * sigma21_first, sigma11_zero, optics)
    theta_exact = optics.omega * optics.d * (eta_minus - eta_plus) / (2 * optics.c)
    return FaradayResult(verdet, optics.d * b * verdet, theta_exact, eta_plus, eta_minus)
