"""Real-space tight-binding crystals, Peierls phases and triangle fluxes.

A crystal is a Bravais lattice ``m*a1 + n*a2`` decorated with ``nu`` basis
sites.  Hopping amplitudes are stored per ``(i, j, (m, n))`` with the
convention

    amplitude(i, j, (m, n)) = h0(u_i + m*a1 + n*a2, u_j),

i.e. the matrix element between site ``i`` of cell ``(m, n)`` (row) and site
``j`` of the home cell (column).  Hermiticity then reads
``amplitude(i, j, g) == conj(amplitude(j, i, -g))``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ValidationError

__all__ = [
    "LatticeModel",
    "Site",
    "graphene_model",
    "load_model",
    "magnetic_kernel",
    "peierls_phase",
    "schur_holmgren_norm",
    "triangle_flux",
]

HoppingKey = tuple[int, int, tuple[int, int]]

_HERMITIAN_ATOL = 1e-12


@dataclass(frozen=True)
class Site:
    """A lattice site: Bravais cell, basis index and Cartesian position."""

    cell: tuple[int, int]
    basis_index: int
    position: np.ndarray = field(compare=False)


@dataclass(frozen=True, eq=False)
class LatticeModel:
    """Immutable tight-binding model.

    Parameters
    ----------
    a1, a2 : array_like, shape (2,)
        Bravais generators.
    basis : array_like, shape (nu, 2)
        Basis positions; the first one must be the origin.
    hoppings : mapping
        ``(i, j, (m, n)) -> complex`` amplitude, see module docstring.
    name : str
        Free-form label used in result records.
    """

    a1: np.ndarray
    a2: np.ndarray
    basis: np.ndarray
    hoppings: Mapping[HoppingKey, complex]
    name: str = "custom"

    def __post_init__(self):
        a1 = np.asarray(self.a1, dtype=float).reshape(2)
        a2 = np.asarray(self.a2, dtype=float).reshape(2)
        basis = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if basis.ndim != 2 or basis.shape[1] != 2 or basis.shape[0] == 0:
            raise ValidationError("basis must be a non-empty list of 2-vectors")
        if not np.all(np.isfinite(a1)) or not np.all(np.isfinite(a2)):
            raise ValidationError("Bravais generators must be finite")
        if abs(a1[0] * a2[1] - a1[1] * a2[0]) <= 0.0:
            raise ValidationError("Bravais generators are linearly dependent")
        if np.any(basis[0] != 0.0):
            raise ValidationError("the first basis site must be the origin")
        nu = basis.shape[0]
        hops: dict[HoppingKey, complex] = {}
        for key, amp in dict(self.hoppings).items():
            i, j, cell = key
            i, j = int(i), int(j)
            cell = (int(cell[0]), int(cell[1]))
            if not (0 <= i < nu and 0 <= j < nu):
                raise ValidationError(f"hopping {key!r} refers to a missing basis site")
            amp = complex(amp)
            if not np.isfinite(amp):
                raise ValidationError(f"hopping {key!r} is not finite")
            if amp != 0:
                hops[(i, j, cell)] = hops.get((i, j, cell), 0) + amp
        for (i, j, (m, n)), amp in hops.items():
            partner = hops.get((j, i, (-m, -n)), 0.0)
            if abs(amp - np.conj(partner)) > _HERMITIAN_ATOL * max(1.0, abs(amp)):
                raise ValidationError(
                    f"hopping table is not Hermitian at {(i, j, (m, n))!r}: "
                    f"{amp!r} vs conj({partner!r})"
                )
        for attr, value in (("a1", a1), ("a2", a2), ("basis", basis)):
            value.setflags(write=False)
            object.__setattr__(self, attr, value)
        object.__setattr__(self, "hoppings", hops)
        object.__setattr__(self, "_arrays", _hopping_arrays(hops, a1, a2, basis))

    @property
    def nu(self) -> int:
        """Number of basis sites per cell."""
        return self.basis.shape[0]

    @property
    def unit_cell_area(self) -> float:
        return float(abs(self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0]))

    @property
    def reciprocal_vectors(self) -> tuple[np.ndarray, np.ndarray]:
        """``b1, b2`` with ``a_i . b_j = 2 pi delta_ij``."""
        amat = np.array([self.a1, self.a2])
        bmat = 2 * np.pi * np.linalg.inv(amat).T
        return bmat[0], bmat[1]

    @property
    def bz_area(self) -> float:
        return (2 * np.pi) ** 2 / self.unit_cell_area

    def hopping_arrays(self):
        """Vectorised hopping table ``(i, j, cells, amplitudes, displacement)``.

        ``displacement`` is ``u_i + g - u_j``, the vector from column site to
        row site of every hopping.
        """
        return self._arrays

    def position(self, cell, basis_index: int) -> np.ndarray:
        m, n = cell
        return m * self.a1 + n * self.a2 + self.basis[basis_index]

    def site(self, cell, basis_index: int) -> Site:
        cell = (int(cell[0]), int(cell[1]))
        return Site(cell, int(basis_index), self.position(cell, basis_index))

    def locate(self, position, rtol: float = 1e-12) -> Site | None:
        """Return the site at ``position`` or ``None`` if there is none."""
        position = np.asarray(position, dtype=float)
        amat = np.array([self.a1, self.a2]).T
        scale = max(np.linalg.norm(self.a1), np.linalg.norm(self.a2))
        for idx, u in enumerate(self.basis):
            frac = np.linalg.solve(amat, position - u)
            cell = np.rint(frac)
            if np.linalg.norm(amat @ cell + u - position) <= rtol * scale * 10:
                return self.site((int(cell[0]), int(cell[1])), idx)
        return None

    def kernel(self, x: Site, y: Site) -> complex:
        """Zero-field kernel ``h0(x, y)``."""
        cell = (x.cell[0] - y.cell[0], x.cell[1] - y.cell[1])
        return self.hoppings.get((x.basis_index, y.basis_index, cell), 0.0 + 0.0j)

    def scaled(self, factor: complex) -> "LatticeModel":
        return LatticeModel(
            self.a1, self.a2, self.basis,
            {k: factor * v for k, v in self.hoppings.items()}, name=self.name,
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "a1": self.a1.tolist(),
            "a2": self.a2.tolist(),
            "basis": self.basis.tolist(),
            "hoppings": [
                [i, j, m, n, complex(v).real, complex(v).imag]
                for (i, j, (m, n)), v in sorted(self.hoppings.items())
            ],
        }


def _hopping_arrays(hops, a1, a2, basis):
    keys = sorted(hops)
    i = np.array([k[0] for k in keys], dtype=np.intp)
    j = np.array([k[1] for k in keys], dtype=np.intp)
    cells = np.array([k[2] for k in keys], dtype=np.intp).reshape(-1, 2)
    amps = np.array([hops[k] for k in keys], dtype=complex)
    disp = basis[i] + cells[:, :1] * a1 + cells[:, 1:] * a2 - basis[j]
    for arr in (i, j, cells, amps, disp):
        arr.setflags(write=False)
    return i, j, cells, amps, disp


def graphene_model(a: float = 1.0) -> LatticeModel:
    """Nearest-neighbour graphene on the rectangular four-site cell.

    Sites sit at ``(0, 0), (a, 0), (3a/2, sqrt(3) a/2), (5a/2, sqrt(3) a/2)``
    with generators ``(3a, 0)`` and ``(0, sqrt(3) a)``.  Every pair of sites
    at distance exactly ``a`` is joined by a unit hopping.
    """
    if not a > 0:
        raise ValidationError("graphene bond length must be positive")
    s3 = np.sqrt(3.0)
    a1 = np.array([3 * a, 0.0])
    a2 = np.array([0.0, s3 * a])
    basis = np.array([[0.0, 0.0], [a, 0.0], [1.5 * a, 0.5 * s3 * a], [2.5 * a, 0.5 * s3 * a]])
    hops = {}
    for i in range(4):
        for j in range(4):
            for m in (-1, 0, 1):
                for n in (-1, 0, 1):
                    d = basis[i] + m * a1 + n * a2 - basis[j]
                    if abs(np.hypot(*d) - a) <= 1e-12 * a:
                        hops[(i, j, (m, n))] = 1.0
    return LatticeModel(a1, a2, basis, hops, name="graphene")


def load_model(path) -> LatticeModel:
    """Read a model file (YAML or JSON).

    Expected keys are ``a1``, ``a2``, ``basis`` and ``hoppings``; every
    hopping is either a whitespace separated string ``"i j m n re im"`` or a
    six element list in the same order.
    """
    text = Path(path).read_text()
    try:
        import yaml

        data = yaml.safe_load(text)
    except ImportError:  # pragma: no cover - pyyaml is a declared dependency
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: model file must contain a mapping")
    missing = {"a1", "a2", "basis", "hoppings"} - set(data)
    if missing:
        raise ValidationError(f"{path}: missing keys {sorted(missing)}")
    hops: dict[HoppingKey, complex] = {}
    for rec in data["hoppings"]:
        fields = rec.split() if isinstance(rec, str) else list(rec)
        if len(fields) != 6:
            raise ValidationError(f"{path}: bad hopping record {rec!r}")
        try:
            i, j, m, n = (int(v) for v in fields[:4])
            amp = complex(float(fields[4]), float(fields[5]))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{path}: bad hopping record {rec!r}") from exc
        key = (i, j, (m, n))
        hops[key] = hops.get(key, 0) + amp
    return LatticeModel(
        data["a1"], data["a2"], data["basis"], hops, name=str(data.get("name", Path(path).stem))
    )


def peierls_phase(x, y):
    """Peierls phase ``phi(x, y) = (y1*x2 - x1*y2) / 2``.  Broadcasts."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.5 * (y[..., 0] * x[..., 1] - x[..., 0] * y[..., 1])


def triangle_flux(x, xp, xpp):
    """Unit-field flux through the triangle ``(x, x', x'')``.

    Equals ``[(x' - x'') x (x - x')]_z / 2``.
    """
    x, xp, xpp = (np.asarray(v, dtype=float) for v in (x, xp, xpp))
    u = xp - xpp
    v = x - xp
    return 0.5 * (u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0])


def magnetic_kernel(model: LatticeModel, b: float, x: Site, y: Site) -> complex:
    """Peierls-substituted kernel ``exp(i b phi(x, y)) h0(x, y)``."""
    h0 = model.kernel(x, y)
    if h0 == 0:
        return 0.0 + 0.0j
    return complex(np.exp(1j * b * peierls_phase(x.position, y.position)) * h0)


def schur_holmgren_norm(model: LatticeModel) -> float:
    """Largest absolute row or column sum of the zero-field kernel."""
    i, j, _, amps, _ = model.hopping_arrays()
    if amps.size == 0:
        return 0.0
    rows = np.bincount(i, weights=np.abs(amps), minlength=model.nu)
    cols = np.bincount(j, weights=np.abs(amps), minlength=model.nu)
    return float(max(rows.max(), cols.max()))
