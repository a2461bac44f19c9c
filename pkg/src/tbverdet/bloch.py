"""Bloch-Floquet fibers, band structures and Brillouin-zone grids.

Two fiber conventions are supported:

``PHASED``
    ``h(u, u'; k) = sum_g h0(u + g, u') exp(-i k.(u + g - u'))``.  Its
    k-derivatives are the fibers of the current operators, so every
    conductivity formula works in this convention.
``PLAIN``
    ``h(u, u'; k) = sum_g h0(u + g, u') exp(-i k.g)``, exactly periodic under
    reciprocal-lattice shifts.

Both are unitarily equivalent (conjugation by ``diag(exp(-i k.u_n))``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import ValidationError
from .lattice import LatticeModel

__all__ = [
    "BZGrid",
    "BandPath",
    "Convention",
    "FiberMatrix",
    "band_energies",
    "band_path",
    "bz_grid",
    "fiber_hamiltonian",
    "fiber_k_derivative",
    "fiber_stack",
    "graphene_waypoints",
    "spectral_bounds",
]


class Convention(enum.Enum):
    PLAIN = "plain"
    PHASED = "phased"


@dataclass(frozen=True, eq=False)
class FiberMatrix:
    """A ``nu x nu`` matrix attached to a Bloch momentum."""

    k: np.ndarray
    entries: np.ndarray
    convention: Convention = Convention.PHASED

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _normalize_direction(direction) -> tuple[int, ...]:
    if isinstance(direction, int):
        direction = (direction,)
    direction = tuple(int(d) for d in direction)
    if len(direction) == 0:
        return direction
    if len(direction) > 2:
        raise ValidationError("only first and second k-derivatives are supported")
    if any(d not in (1, 2) for d in direction):
        raise ValidationError(f"k-derivative directions must be 1 or 2, got {direction}")
    return direction


def _scatter(model: LatticeModel) -> np.ndarray:
    i, j, _, _, _ = model.hopping_arrays()
    nu = model.nu
    onehot = np.zeros((i.size, nu * nu))
    onehot[np.arange(i.size), i * nu + j] = 1.0
    return onehot


def fiber_stack(model: LatticeModel, ks, directions=((),), convention=Convention.PHASED):
    """Fibers and k-derivatives at many momenta at once.

    Parameters
    ----------
    ks : array_like, shape (K, 2)
    directions : sequence of derivative multi-indices
        ``()`` is the Hamiltonian itself, ``(1,)`` is ``d/dk1``, ``(1, 2)``
        is ``d^2/dk1 dk2`` and so on.

    Returns
    -------
    ndarray, shape (len(directions), K, nu, nu)
    """
    convention = Convention(convention)
    ks = np.atleast_2d(np.asarray(ks, dtype=float))
    _, _, cells, amps, disp = model.hopping_arrays()
    nu = model.nu
    out = np.zeros((len(directions), ks.shape[0], nu, nu), dtype=complex)
    if amps.size == 0:
        return out
    if convention is Convention.PHASED:
        vec = disp
    else:
        vec = cells[:, :1] * model.a1 + cells[:, 1:] * model.a2
    phase = np.exp(-1j * (ks @ vec.T)) * amps
    onehot = _scatter(model)
    for slot, direction in enumerate(directions):
        direction = _normalize_direction(direction)
        if direction and convention is not Convention.PHASED:
            raise ValidationError("k-derivatives are defined in the PHASED convention only")
        factor = np.ones(amps.size, dtype=complex)
        for d in direction:
            factor = factor * (-1j * disp[:, d - 1])
        out[slot] = ((phase * factor) @ onehot).reshape(-1, nu, nu)
    return out


def fiber_hamiltonian(model: LatticeModel, k, convention=Convention.PHASED) -> FiberMatrix:
    """Bloch fiber of the zero-field Hamiltonian at momentum ``k``."""
    k = np.asarray(k, dtype=float).reshape(2)
    convention = Convention(convention)
    entries = fiber_stack(model, k[None, :], ((),), convention)[0, 0]
    return FiberMatrix(k, entries, convention)


def fiber_k_derivative(model: LatticeModel, k, direction, convention=Convention.PHASED) -> FiberMatrix:
    """Analytic k-derivative of the PHASED fiber.

    ``direction`` is ``1``, ``2`` or a pair such as ``(1, 1)`` or ``(1, 2)``.
    Each derivative multiplies a hopping by ``-i`` times the matching
    component of its displacement ``u + g - u'``.
    """
    if Convention(convention) is not Convention.PHASED:
        raise ValidationError("k-derivatives are defined in the PHASED convention only")
    direction = _normalize_direction(direction)
    if not direction:
        raise ValidationError("direction must name at least one derivative")
    k = np.asarray(k, dtype=float).reshape(2)
    entries = fiber_stack(model, k[None, :], (direction,))[0, 0]
    return FiberMatrix(k, entries, Convention.PHASED)


def band_energies(model: LatticeModel, k) -> np.ndarray:
    """Ascending band energies at ``k``."""
    h = fiber_hamiltonian(model, k).entries
    return np.linalg.eigvalsh(h)


@dataclass(frozen=True)
class BZGrid:
    """Uniform shift-symmetric grid ``t1*b1 + t2*b2`` with ``t_i`` in ``[-1/2, 1/2)``."""

    n1: int
    n2: int
    nodes: np.ndarray
    weights: np.ndarray
    fractional: np.ndarray

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def index_of_reflection(self, axis: int = 2) -> np.ndarray:
        """For every node, the index of the node with fractional coordinate
        ``t_axis`` negated (modulo 1)."""
        n1, n2 = self.n1, self.n2
        i1, i2 = np.divmod(np.arange(n1 * n2), n2)
        if axis == 2:
            i2 = (-(i2 - n2 // 2)) % n2
            i2 = (i2 + n2 // 2) % n2
        else:
            i1 = (-(i1 - n1 // 2)) % n1
            i1 = (i1 + n1 // 2) % n1
        return i1 * n2 + i2


def bz_grid(model: LatticeModel, n1: int = 64, n2: int | None = None) -> BZGrid:
    """Periodic trapezoidal grid over the Brillouin zone.

    Weights are uniform and sum to the Brillouin-zone area.
    """
    n2 = n1 if n2 is None else n2
    if n1 < 1 or n2 < 1:
        raise ValidationError("grid sizes must be positive")
    t1 = (np.arange(n1) - n1 // 2) / n1
    t2 = (np.arange(n2) - n2 // 2) / n2
    frac = np.stack(np.meshgrid(t1, t2, indexing="ij"), axis=-1).reshape(-1, 2)
    b1, b2 = model.reciprocal_vectors
    nodes = frac[:, :1] * b1 + frac[:, 1:] * b2
    weights = np.full(nodes.shape[0], model.bz_area / nodes.shape[0])
    return BZGrid(n1, n2, nodes, weights, frac)


def spectral_bounds(model: LatticeModel, n: int = 64) -> tuple[float, float]:
    """Lowest and highest band energy.

    A grid scan is polished with a bounded local optimisation around the grid
    extrema, which is enough for the smooth bands of short-range models.
    """
    if not model.hoppings:
        return 0.0, 0.0
    grid = bz_grid(model, n)
    h = fiber_stack(model, grid.nodes, ((),), Convention.PLAIN)[0]
    bands = np.linalg.eigvalsh(h)
    b1, b2 = model.reciprocal_vectors
    bmat = np.array([b1, b2]).T

    def polish(col, sign):
        values = sign * bands[:, col]
        start = grid.fractional[np.argmax(values)]
        res = scipy.optimize.minimize(
            lambda t: -sign * band_energies(model, bmat @ t)[col], start,
            method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14},
        )
        return sign * max(values.max(), -res.fun)

    emax = polish(-1, +1)
    emin = polish(0, -1)
    return float(emin), float(emax)


def graphene_waypoints(a: float = 1.0) -> dict[str, np.ndarray]:
    """High-symmetry points of the rectangular graphene Brillouin zone.

    ``K`` and ``Kp`` are the band-touching points on the ``k2`` axis, found
    from the zero of ``|exp(i k1 a) - 2 exp(-i k1 a/2) cos(sqrt(3) k2 a/2)|``.
    """
    s3 = np.sqrt(3.0)
    return {
        "G": np.array([0.0, 0.0]),
        "X1": np.array([np.pi / (3 * a), 0.0]),
        "X2": np.array([0.0, np.pi / (s3 * a)]),
        "M": np.array([np.pi / (3 * a), np.pi / (s3 * a)]),
        "K": np.array([0.0, 2 * np.pi / (3 * s3 * a)]),
        "Kp": np.array([0.0, -2 * np.pi / (3 * s3 * a)]),
    }


@dataclass(frozen=True)
class BandPath:
    """Bands sampled along a piecewise linear path."""

    arclength: np.ndarray
    k: np.ndarray
    energies: np.ndarray
    labels: tuple[str, ...] = ()

    def rows(self):
        for s, k, e in zip(self.arclength, self.k, self.energies):
            yield (s, k[0], k[1], *e)


def band_path(model: LatticeModel, waypoints, samples_per_segment: int = 50) -> BandPath:
    """Evaluate bands along straight segments joining ``waypoints``.

    Each segment contributes ``samples_per_segment`` intervals; shared
    endpoints are emitted once.
    """
    points = [np.asarray(p, dtype=float).reshape(2) for p in waypoints]
    if len(points) < 2:
        raise ValidationError("a band path needs at least two waypoints")
    if samples_per_segment < 1:
        raise ValidationError("samples_per_segment must be at least 1")
    ks = [points[0]]
    for start, stop in zip(points, points[1:]):
        if np.allclose(start, stop):
            raise ValidationError("band path contains an empty segment")
        t = np.arange(1, samples_per_segment + 1) / samples_per_segment
        ks.extend(start + tt * (stop - start) for tt in t)
    ks = np.array(ks)
    steps = np.linalg.norm(np.diff(ks, axis=0), axis=1)
    arclength = np.concatenate([[0.0], np.cumsum(steps)])
    h = fiber_stack(model, ks, ((),))[0]
    energies = np.linalg.eigvalsh(h)
    return BandPath(arclength, ks, energies)
