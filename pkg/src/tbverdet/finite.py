"""Finite-lattice oracle with Dirichlet boundary conditions.

The crystal is cut to the box of cells ``|m|, |n| <= N``; every hopping that
leaves the box is dropped and the remaining ones carry the Peierls phase
``exp(i b phi(x, y))``.  The transverse conductivity at frequency
``omega = omega0 - i eta`` is

    sigma21(b, N) = -eta / ((eta^2 + omega0^2) |Lambda|) Tr{i[j2, X1] f(H)}
                    + Re [i / (omega |Lambda|) sum_{n,m} J1_nm J2_mn (f_n - f_m) / (lam_n - lam_m + omega)]

with ``J_nu = V^H j_nu V`` in the eigenbasis of ``H``.  The second term is the
residue form of the contour integral over ``r(z - omega) j1 r(z) j2`` plus
its ``z -> z + omega`` image; ``method="quadrature"`` evaluates that integral
on a contour instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from . import kernels
from .contour import ContourSettings, ThermoOpticalParams, build_contour, fermi_dirac
from .errors import DegeneracyError, ValidationError
from .lattice import LatticeModel, Site, peierls_phase

__all__ = [
    "BDerivative",
    "FiniteLattice",
    "FinitePoint",
    "build_finite",
    "equilibrium_current",
    "numeric_b_derivative",
    "schur_holmgren_norm_finite",
    "sigma21_finite",
]

MAX_SITES = 10_000
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FiniteLattice:
    """Dirichlet restriction of a Peierls-substituted crystal.

    Hoppings are kept as sparse triplets ``(rows, cols, values)``; the dense
    Hamiltonian is assembled on demand.
    """

    model: LatticeModel
    N: int
    b: float
    cells: np.ndarray
    basis_index: np.ndarray
    positions: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.positions.shape[0]

    @property
    def area(self) -> float:
        """``|Lambda_N| = (2N+1)^2 |Omega|``."""
        return (2 * self.N + 1) ** 2 * self.model.unit_cell_area

    @property
    def sites(self) -> list[Site]:
        return [
            Site((int(c[0]), int(c[1])), int(s), p)
            for c, s, p in zip(self.cells, self.basis_index, self.positions)
        ]

    @property
    def x1(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def x2(self) -> np.ndarray:
        return self.positions[:, 1]

    def sparse(self, values=None) -> scipy.sparse.csr_matrix:
        values = self.values if values is None else values
        n = self.n_sites
        return scipy.sparse.csr_matrix((values, (self.rows, self.cols)), shape=(n, n))

    @property
    def H(self) -> np.ndarray:
        return self.sparse().toarray()

    def current_values(self, nu: int) -> np.ndarray:
        """Nonzero entries of ``j_nu = i[H, X_nu]``, aligned with ``rows, cols``."""
        x = self.positions[:, nu - 1]
        return 1j * self.values * (x[self.cols] - x[self.rows])

    @property
    def j1(self) -> np.ndarray:
        return self.sparse(self.current_values(1)).toarray()

    @property
    def j2(self) -> np.ndarray:
        return self.sparse(self.current_values(2)).toarray()

    def eta_commutator_values(self) -> np.ndarray:
        """Nonzero entries of ``C = i[j2, X1]``."""
        x1 = self.x1
        return 1j * self.current_values(2) * (x1[self.cols] - x1[self.rows])


def build_finite(model: LatticeModel, N: int, b: float = 0.0, max_sites: int = MAX_SITES) -> FiniteLattice:
    """Sites ordered lexicographically in ``(m, n, basis_index)``."""
    if int(N) != N or N < 1:
        raise ValidationError("N must be a positive integer")
    N = int(N)
    if not math.isfinite(b):
        raise ValidationError("b must be finite")
    side = 2 * N + 1
    nu = model.nu
    n_sites = nu * side * side
    if n_sites > max_sites:
        raise ValidationError(f"{n_sites} sites exceed the cap of {max_sites}")
    m, n, s = np.meshgrid(np.arange(-N, N + 1), np.arange(-N, N + 1), np.arange(nu), indexing="ij")
    cells = np.stack([m.ravel(), n.ravel()], axis=1)
    basis_index = s.ravel()
    positions = cells[:, :1] * model.a1 + cells[:, 1:] * model.a2 + model.basis[basis_index]

    hi, hj, hcells, amps, _ = model.hopping_arrays()
    # hopping (i, j, g) joins column site (c, j) to row site (c + g, i)
    col_sites = np.flatnonzero(np.isin(basis_index, hj))
    rows, cols, vals = [], [], []
    for i, j, g, amp in zip(hi, hj, hcells, amps):
        col = col_sites[basis_index[col_sites] == j]
        target = cells[col] + g
        inside = np.all(np.abs(target) <= N, axis=1)
        col = col[inside]
        target = target[inside]
        row = ((target[:, 0] + N) * side + (target[:, 1] + N)) * nu + i
        rows.append(row)
        cols.append(col)
        vals.append(np.full(col.size, amp, dtype=complex))
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.intp)
    cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.intp)
    vals = np.concatenate(vals) if vals else np.zeros(0, dtype=complex)
    if b != 0.0:
        vals = vals * np.exp(1j * b * peierls_phase(positions[rows], positions[cols]))
    order = np.lexsort((cols, rows))
    arrays = [cells, basis_index, positions, rows[order], cols[order], vals[order]]
    for arr in arrays:
        arr.setflags(write=False)
    return FiniteLattice(model, N, float(b), *arrays)


def schur_holmgren_norm_finite(lat: FiniteLattice) -> float:
    """Largest absolute row or column sum of ``H_b``."""
    if lat.values.size == 0:
        return 0.0
    mag = np.abs(lat.values)
    rows = np.bincount(lat.rows, weights=mag, minlength=lat.n_sites)
    cols = np.bincount(lat.cols, weights=mag, minlength=lat.n_sites)
    return float(max(rows.max(), cols.max()))


@dataclass(frozen=True, eq=False)
class _Spectral:
    """Eigen data shared by all eta values at one field strength."""

    lam: np.ndarray
    P: np.ndarray  # J1_nm * J2_mn
    trace_cf: complex  # Tr{i[j2, X1] f(H)}
    f: np.ndarray


def _spectral(lat: FiniteLattice, params: ThermoOpticalParams):
    h = lat.H
    lam, vec = scipy.linalg.eigh(h, overwrite_a=True, check_finite=False)
    del h
    f = fermi_dirac(lam, params)
    jv = lat.sparse(lat.current_values(1)) @ vec
    J1 = vec.conj().T @ jv
    jv = lat.sparse(lat.current_values(2)) @ vec
    J2 = vec.conj().T @ jv
    del jv
    P = J1 * J2.T
    del J1, J2
    # Tr{C f(H)} = sum_{xy} C_xy F_yx with F = V diag(f) V^H, only where C != 0
    cvals = lat.eta_commutator_values()
    trace_cf = 0j
    step = max(1, 2_000_000 // max(1, lat.n_sites))
    for s in range(0, cvals.size, step):
        r, c = lat.rows[s:s + step], lat.cols[s:s + step]
        F_yx = np.einsum("tn,n,tn->t", vec[c], f, vec[r].conj())
        trace_cf += np.sum(cvals[s:s + step] * F_yx)
    return _Spectral(lam, P, complex(trace_cf), f), vec


@dataclass(frozen=True)
class FinitePoint:
    """``sigma21(b, N)`` at one ``eta`` with its eta-proportional term."""

    N: int
    b: float
    eta: float
    sigma21: float
    eta_term: float
    second_term: float

    def row(self):
        return (self.N, self.b, self.eta, self.sigma21, self.eta_term)


def _second_term_residue(sp: _Spectral, omega: complex) -> complex:
    gap = sp.lam[:, None] - sp.lam[None, :] + omega
    if np.any(np.abs(gap) <= DEGENERACY_TOL):
        raise DegeneracyError("resonant denominator lam_n - lam_m + omega ~ 0")
    return 2j * np.pi * np.sum(sp.P * (sp.f[:, None] - sp.f[None, :]) / gap)


def _second_term_quadrature(sp: _Spectral, omega: complex, params, settings) -> complex:
    lo, hi = float(sp.lam.min()), float(sp.lam.max())
    contour = build_contour((lo, hi), params, settings=settings)
    c = fermi_dirac(contour.nodes, params) * contour.weights
    z = contour.nodes
    lam = sp.lam[None, :]
    direct = kernels.pair_moment(lam, z - omega, z, c)[0]
    image = kernels.pair_moment(lam, z, z + omega, c)[0]
    return np.sum((direct + image) * sp.P)


def _points(lat, sp: _Spectral, params, etas, method, settings, b=None):
    out = []
    for eta in etas:
        if not eta > 0:
            raise ValidationError("the finite oracle needs eta > 0")
        p = params.with_(eta=float(eta))
        omega = p.omega
        if method == "residue":
            integral = _second_term_residue(sp, omega)
        else:
            integral = _second_term_quadrature(sp, omega, p, settings)
        second = (integral / (2 * math.pi * omega * lat.area)).real
        eta_term = (-eta / ((eta**2 + p.omega0**2) * lat.area) * sp.trace_cf).real
        out.append(FinitePoint(lat.N, lat.b if b is None else b, float(eta), float(second + eta_term),
                               float(eta_term), float(second)))
    return out


def _check_admissible(sp: _Spectral, params: ThermoOpticalParams, settings):
    build_contour((float(sp.lam.min()), float(sp.lam.max())), params, settings=settings)


def sigma21_finite(
    lat: FiniteLattice,
    params: ThermoOpticalParams,
    etas=None,
    *,
    method: str = "residue",
    settings: ContourSettings | None = None,
) -> list[FinitePoint]:
    """``sigma21(b, N)`` for each ``eta`` in ``etas`` (default ``[params.eta]``).

    One eigendecomposition is shared by all ``eta`` values.
    """
    if method not in ("residue", "quadrature"):
        raise ValidationError(f"unknown method {method!r}")
    etas = [params.eta] if etas is None else list(etas)
    settings = settings or ContourSettings()
    sp, _ = _spectral(lat, params)
    _check_admissible(sp, params, settings)
    return _points(lat, sp, params, etas, method, settings)


def _conjugate(sp: _Spectral) -> _Spectral:
    # H_{-b} = conj(H_b) for real hoppings: same spectrum, conjugated eigenvectors
    return _Spectral(sp.lam, sp.P.conj(), sp.trace_cf.conjugate(), sp.f)


def _pm_points(model, N, b, params, etas, settings, max_sites):
    """Points at ``+b`` and ``-b``; one diagonalisation for real hoppings."""
    lat = build_finite(model, N, b, max_sites=max_sites)
    sp, _ = _spectral(lat, params)
    _check_admissible(sp, params, settings)
    plus = _points(lat, sp, params, etas, "residue", settings)
    if all(v.imag == 0 for v in model.hoppings.values()):
        minus = _points(lat, _conjugate(sp), params, etas, "residue", settings, b=-lat.b)
    else:
        lat_m = build_finite(model, N, -b, max_sites=max_sites)
        sp_m, _ = _spectral(lat_m, params)
        minus = _points(lat_m, sp_m, params, etas, "residue", settings)
    return plus, minus


@dataclass
class BDerivative:
    """Numerical ``d sigma21 / db`` at ``b = 0`` from the finite lattice."""

    estimate: float
    error: float
    N: int
    b_step: float
    etas: tuple[float, ...]
    per_eta: dict[float, float]
    eta_shift: float
    points: list[FinitePoint] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "quantity": "d sigma21/db (finite lattice)",
            "value": self.estimate,
            "error_estimate": self.error,
            "N": self.N,
            "b_step": self.b_step,
            "etas": list(self.etas),
            "per_eta": {str(k): v for k, v in self.per_eta.items()},
            "eta_extrapolation_shift": self.eta_shift,
        }


def numeric_b_derivative(
    model: LatticeModel,
    N: int,
    params: ThermoOpticalParams,
    b_step: float = 1e-3,
    etas=(0.1, 0.05),
    *,
    richardson: bool = True,
    settings: ContourSettings | None = None,
    max_sites: int = MAX_SITES,
) -> BDerivative:
    """Central difference ``[sigma21(h) - sigma21(-h)] / 2h``.

    With ``richardson`` the steps ``h`` and ``h/2`` are combined as
    ``(4 D(h/2) - D(h)) / 3`` and ``error`` is the distance between that value
    and ``D(h/2)``.  Two or more ``etas`` are extrapolated linearly to
    ``eta = 0`` from the two smallest values; ``eta_shift`` is the size of that
    correction.
    """
    if not b_step > 0:
        raise ValidationError("b_step must be positive")
    etas = tuple(sorted({float(e) for e in etas}, reverse=True))
    if not etas:
        raise ValidationError("at least one eta is required")
    settings = settings or ContourSettings()
    steps = (b_step, b_step / 2) if richardson else (b_step,)
    diffs = {}
    points = []
    for h in steps:
        plus, minus = _pm_points(model, N, h, params, etas, settings, max_sites)
        points += plus + minus
        for pp, pm in zip(plus, minus):
            diffs[(h, pp.eta)] = (pp.sigma21 - pm.sigma21) / (2 * h)
    per_eta, defects = {}, []
    for eta in etas:
        if richardson:
            coarse, fine = diffs[(steps[0], eta)], diffs[(steps[1], eta)]
            value = (4 * fine - coarse) / 3
            defects.append(abs(value - fine))
        else:
            value = diffs[(steps[0], eta)]
            defects.append(0.0)
        per_eta[eta] = value
    if len(etas) >= 2:
        e1, e2 = etas[-2], etas[-1]  # e1 > e2
        d1, d2 = per_eta[e1], per_eta[e2]
        estimate = (e1 * d2 - e2 * d1) / (e1 - e2)
        eta_shift = abs(estimate - d2)
    else:
        estimate = per_eta[etas[0]]
        eta_shift = 0.0
    return BDerivative(
        estimate=float(estimate),
        error=float(max(defects)),
        N=int(N),
        b_step=float(b_step),
        etas=etas,
        per_eta=per_eta,
        eta_shift=float(eta_shift),
        points=points,
    )


def equilibrium_current(lat: FiniteLattice, params: ThermoOpticalParams, nu: int = 2) -> float:
    """``Tr{f(H) j_nu} / |Lambda|``; vanishes in equilibrium."""
    lam, vec = scipy.linalg.eigh(lat.H, check_finite=False)
    f = fermi_dirac(lam, params)
    jv = lat.sparse(lat.current_values(nu)) @ vec
    value = np.einsum("n,in,in->", f, vec.conj(), jv)
    return float(abs(value) / lat.area)
