"""Closed integration contours around a real spectrum and Fermi-Dirac weights.

The contour is a positively oriented rectangle with corners
``(E_min - delta) -/+ i h`` and ``(E_max + delta) -/+ i h``.  Each edge is
cut into panels whose length is ``panel_ratio`` times the distance to the
nearest singularity (band poles on the real axis, Fermi poles at
``mu + i pi (2n+1) / beta``), and every panel carries ``nodes_per_edge``
Gauss-Legendre nodes.  With the defaults this gives ~1e-13 relative accuracy
for resolvent traces whatever the temperature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AdmissibilityError, PoleEnclosureError, PoleProximityError, ValidationError

__all__ = [
    "Contour",
    "ContourSettings",
    "ThermoOpticalParams",
    "build_contour",
    "contour_integrate",
    "fermi_dirac",
]

POLE_TOL = 1e-8


@dataclass(frozen=True)
class ThermoOpticalParams:
    """Physical knobs: inverse temperature, chemical potential, light frequency
    ``omega = omega0 - i eta`` and magnetic field strength ``b``."""

    beta: float
    mu: float = 0.0
    omega0: float = 7.0
    eta: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        for name in ("beta", "mu", "omega0", "eta", "b"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.beta <= 0:
            raise ValidationError("beta must be positive")
        if self.eta < 0:
            raise ValidationError("eta must be non-negative")
        if self.eta >= math.pi / self.beta:
            raise PoleEnclosureError(
                f"eta={self.eta} must be smaller than pi/beta={math.pi / self.beta:.6g}"
            )

    @property
    def omega(self) -> complex:
        return complex(self.omega0, -self.eta)

    def with_(self, **changes) -> "ThermoOpticalParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class ContourSettings:
    """Quadrature knobs (``contour.*`` config keys)."""

    nodes_per_edge: int = 16
    delta: float = 0.5
    half_height_factor: float = 0.5
    panel_ratio: float = 2.0
    delta_min: float = 0.1

    def __post_init__(self):
        if self.nodes_per_edge < 8:
            raise ValidationError("contour.nodes_per_edge must be at least 8")
        if self.delta <= 0:
            raise ValidationError("contour.delta must be positive")
        if not 0 < self.half_height_factor < 1:
            raise ValidationError("contour.half_height_factor must lie in (0, 1)")
        if self.panel_ratio <= 0:
            raise ValidationError("contour.panel_ratio must be positive")

    def refined(self) -> "ContourSettings":
        return replace(self, nodes_per_edge=2 * self.nodes_per_edge)


@dataclass(frozen=True, eq=False)
class Contour:
    """Quadrature nodes and weights (``dz`` included) of a closed path."""

    nodes: np.ndarray
    weights: np.ndarray
    half_height: float
    interval: tuple[float, float]
    enclosed: tuple[float, float]
    settings: ContourSettings = field(default_factory=ContourSettings)
    omega0: float | None = None
    beta: float | None = None
    mu: float | None = None

    @property
    def size(self) -> int:
        return self.nodes.size

    def clearance(self) -> float:
        """Smallest distance from a node to the enclosed spectrum."""
        lo, hi = self.enclosed
        x = np.clip(self.nodes.real, lo, hi)
        return float(np.min(np.abs(self.nodes - x)))

    def validate(self) -> None:
        """Check every geometric invariant; raise on violation."""
        if self.beta is not None and self.half_height >= math.pi / self.beta:
            raise PoleEnclosureError("contour half-height reaches the first Fermi pole")
        lo, hi = self.enclosed
        left, right = self.interval
        if not (left < lo and right > hi):
            raise ValidationError("contour does not enclose the spectrum")
        needed = min(self.settings.delta_min, self.half_height, right - hi, lo - left)
        if self.clearance() < needed * (1 - 1e-12):
            raise ValidationError("contour nodes too close to the spectrum")
        if self.omega0 is not None:
            for shift in (self.omega0, -self.omega0):
                if left + shift <= hi and right + shift >= lo:
                    raise AdmissibilityError("shifted contour z +/- omega0 meets the spectrum")

    def refined(self) -> "Contour":
        """Same geometry with twice the nodes per panel."""
        return build_contour(
            self.enclosed,
            beta=self.beta,
            mu=self.mu,
            omega0=self.omega0,
            settings=self.settings.refined(),
            check_omega=False,
        )


def _panels(z0: complex, z1: complex, max_len: float, x, w):
    length = abs(z1 - z0)
    npan = max(1, math.ceil(length / max_len - 1e-12))
    ends = z0 + (z1 - z0) * np.arange(npan + 1) / npan
    mid = 0.5 * (ends[1:] + ends[:-1])
    half = 0.5 * (ends[1:] - ends[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def build_contour(
    spectrum_interval,
    params: ThermoOpticalParams | None = None,
    nodes_per_edge: int | None = None,
    *,
    settings: ContourSettings | None = None,
    spectral_radius: float | None = None,
    beta: float | None = None,
    mu: float | None = None,
    omega0: float | None = None,
    check_omega: bool = True,
) -> Contour:
    """Rectangle enclosing ``spectrum_interval`` for the given parameters.

    ``omega0`` must exceed twice the spectral radius (``spectral_radius``
    defaults to ``max(|E_min|, |E_max|)``) and ``eta < pi/beta``.  The
    horizontal clearance is shrunk below ``settings.delta`` when needed so that
    the contour shifted by ``+/- omega0`` stays away from the spectrum.
    """
    settings = settings or ContourSettings()
    if nodes_per_edge is not None:
        settings = replace(settings, nodes_per_edge=int(nodes_per_edge))
    if params is not None:
        beta, mu, omega0 = params.beta, params.mu, params.omega0
        if params.eta >= math.pi / params.beta:
            raise PoleEnclosureError("eta must be smaller than pi/beta")
    if beta is None or mu is None:
        raise ValidationError("build_contour needs beta and mu")
    lo, hi = (float(v) for v in spectrum_interval)
    if not lo <= hi:
        raise ValidationError("spectrum interval must satisfy E_min <= E_max")
    radius = max(abs(lo), abs(hi)) if spectral_radius is None else float(spectral_radius)
    delta = settings.delta
    if omega0 is not None:
        if check_omega and not abs(omega0) > 2 * radius:
            raise AdmissibilityError(
                f"omega0={omega0} must exceed twice the spectral radius ({2 * radius:.6g})"
            )
        gap = abs(omega0) - (hi - lo)
        if gap <= 0:
            raise AdmissibilityError("omega0 is smaller than the spectral width")
        delta = min(delta, 0.5 * gap)
    fermi_gap = math.pi / beta
    h = min(0.9 * fermi_gap, settings.half_height_factor * fermi_gap)
    left, right = lo - delta, hi + delta

    x, w = np.polynomial.legendre.leggauss(settings.nodes_per_edge)
    horizontal = settings.panel_ratio * min(h, fermi_gap - h, delta)
    vertical = settings.panel_ratio * min(delta, h)
    corners = [complex(left, -h), complex(right, -h), complex(right, h), complex(left, h)]
    pieces = [
        _panels(corners[0], corners[1], horizontal, x, w),
        _panels(corners[1], corners[2], vertical, x, w),
        _panels(corners[2], corners[3], horizontal, x, w),
        _panels(corners[3], corners[0], vertical, x, w),
    ]
    nodes = np.concatenate([p[0] for p in pieces])
    weights = np.concatenate([p[1] for p in pieces])
    contour = Contour(nodes, weights, h, (left, right), (lo, hi), settings, omega0, beta, mu)
    contour.validate()
    return contour


def fermi_dirac(z, params=None, *, beta: float | None = None, mu: float | None = None):
    """``1 / (exp(beta (z - mu)) + 1)`` for real or complex ``z``.

    Uses ``exp(-x) / (1 + exp(-x))`` on the half plane ``Re x > 0`` so large
    ``beta`` never overflows.  Raises :class:`PoleProximityError` within
    ``1e-8`` of a pole ``mu + i pi (2n+1) / beta``.
    """
    if params is not None:
        beta, mu = params.beta, params.mu
    if beta is None or mu is None:
        raise ValidationError("fermi_dirac needs beta and mu")
    scalar = np.isscalar(z)
    z = np.asarray(z)
    x = beta * (z - mu)
    if np.iscomplexobj(x):
        n = np.round((x.imag / np.pi - 1) / 2)
        dist = np.abs(x - 1j * np.pi * (2 * n + 1)) / beta
        if np.any(dist <= POLE_TOL):
            raise PoleProximityError("Fermi-Dirac function evaluated at a pole")
    pos = x.real > 0
    with np.errstate(over="ignore"):
        e_neg = np.exp(-np.where(pos, x, 0))
        e_pos = np.exp(np.where(pos, 0, x))
    out = np.where(pos, e_neg / (1 + e_neg), 1 / (1 + e_pos))
    return out.item() if scalar else out


def contour_integrate(contour: Contour, integrand, *, vectorized: bool = True, error: bool = False):
    """``sum_j w_j g(z_j)`` approximating the closed integral of ``g``.

    ``integrand`` receives the node array when ``vectorized`` (its result may
    carry trailing dimensions) and single nodes otherwise.  With
    ``error=True`` the contour is refined once and ``(value, |difference|)``
    is returned.
    """

    def run(c: Contour):
        if vectorized:
            values = np.asarray(integrand(c.nodes))
        else:
            values = np.array([integrand(z) for z in c.nodes])
        weights = c.weights.reshape((-1,) + (1,) * (values.ndim - 1))
        total = np.sum(weights * values, axis=0)
        return complex(total) if np.ndim(total) == 0 else total

    value = run(contour)
    if not error:
        return value
    finer = run(contour.refined())
    return finer, np.abs(np.asarray(finer) - np.asarray(value))
