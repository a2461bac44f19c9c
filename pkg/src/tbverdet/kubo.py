"""Bulk conductivities from Bloch fibers.

Both coefficients are Brillouin-zone averages of contour integrals of traces
of resolvents ``r(z) = (h(k) - z)^{-1}`` and k-derivatives of the PHASED
fiber ``h(k)``:

* ``sigma_ab(0) = Re [1/(2 pi omega0 |Omega|) oint f(z) <tr(r(z-omega0) d_a h r(z) d_b h)
  + tr(r(z) d_a h r(z+omega0) d_b h)>_k dz]``
* ``sigma21^(1) = Re [i/(4 pi omega0 |Omega|) oint f(z) <tr(L1 + L2 + L3 - L4 - L5)>_k dz]``
  plus the same five lines with ``(z - omega0, z)`` replaced by ``(z, z + omega0)``.

With ``rm = r(z - omega0)``, ``r = r(z)``, ``D1 = d1 h``, ``D2 = d2 h``,
``D11 = d1 d1 h`` and ``D12 = d1 d2 h`` the lines read::

    L1 = (d1 rm D12 - d2 rm D11) r D2
    L2 = (d1 rm D1 d2 r - d2 rm D1 d1 r) D2
    L3 = rm (D11 d2 r - D12 d1 r) D2
    L4 = rm D1 r (D1 d2 r - D2 d1 r) D2
    L5 = rm (D1 d2 rm - D2 d1 rm) D1 r D2

where ``d_nu r = -r D_nu r``.  L1-L3 come from expanding the magnetic
resolvents on both sides of the current; L4 and L5 come from the first-order
correction of the resolvent itself, which carries the opposite sign.

In the eigenbasis of ``h(k)`` the resolvents are diagonal, so every trace is
a contraction of z-independent matrices with a moment tensor
``sum_z c_z p_i p_j ... q_l`` computed by :mod:`tbverdet.kernels`.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bloch import BZGrid, FiberMatrix, bz_grid, fiber_stack, spectral_bounds
from .contour import (
    Contour,
    ContourSettings,
    ThermoOpticalParams,
    build_contour,
    fermi_dirac,
)
from .errors import DegeneracyError, ValidationError
from .lattice import LatticeModel

__all__ = [
    "ConductivityResult",
    "VERDET_LABELS",
    "residue_double_resolvent",
    "sigma21_first_derivative",
    "sigma_zero",
    "with_convergence",
]

DEGENERACY_TOL = 1e-8
CHUNK = 128

VERDET_LINES = ("L1", "L2", "L3", "L4", "L5")
VERDET_LABELS = VERDET_LINES + tuple(f"{n}_image" for n in VERDET_LINES)
# sign of each line in the assembled coefficient
VERDET_SIGNS = {"L1": 1, "L2": 1, "L3": 1, "L4": -1, "L5": -1}


@dataclass
class ConductivityResult:
    """A conductivity coefficient with its per-term breakdown.

    ``value == prefactor * Re(sum(breakdown.values()))``.  Breakdown entries
    are Brillouin-zone averages of contour integrals, already carrying their
    signs and any factor of ``i``.
    """

    value: float
    breakdown: dict[str, complex]
    prefactor: float
    grid: tuple[int, int]
    contour_nodes: int
    params: ThermoOpticalParams
    quantity: str = ""
    method: str = "quadrature"
    imag_residue: float = 0.0
    error_estimate: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def total(self) -> complex:
        return complex(sum(self.breakdown.values()))

    def to_record(self) -> dict:
        p = self.params
        return {
            "quantity": self.quantity,
            "value": self.value,
            "method": self.method,
            "prefactor": self.prefactor,
            "breakdown": {k: [v.real, v.imag] for k, v in self.breakdown.items()},
            "imag_residue": self.imag_residue,
            "error_estimate": self.error_estimate,
            "grid": list(self.grid),
            "contour_nodes": self.contour_nodes,
            "params": {"beta": p.beta, "mu": p.mu, "omega0": p.omega0, "eta": p.eta, "b": p.b},
            **self.extra,
        }


def _as_grid(model: LatticeModel, grid) -> BZGrid:
    if isinstance(grid, BZGrid):
        return grid
    if isinstance(grid, (int, np.integer)):
        return bz_grid(model, int(grid))
    n1, n2 = grid
    return bz_grid(model, int(n1), int(n2))


def _workers(workers) -> int:
    if workers is None:
        return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)
    if workers < 1:
        raise ValidationError("workers must be at least 1")
    return int(workers)


def _contour_for(model: LatticeModel, params: ThermoOpticalParams, settings, bounds) -> Contour:
    settings = settings or ContourSettings()
    if bounds is None:
        bounds = spectral_bounds(model)
    return build_contour(bounds, params, settings=settings)


def _eigen_chunk(model: LatticeModel, ks, directions):
    """Eigenvalues and derivative fibers in the eigenbasis of ``h(k)``."""
    stack = fiber_stack(model, ks, ((),) + tuple(directions))
    lam, vec = np.linalg.eigh(stack[0])
    vh = vec.conj().transpose(0, 2, 1)
    mats = [vh @ d @ vec for d in stack[1:]]
    return lam, mats


def _map_chunks(fn, n: int, workers: int):
    """Apply ``fn(slice)`` to consecutive k-chunks; results in chunk order."""
    slices = [slice(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]
    if workers == 1 or len(slices) == 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, slices))


def _k_average(per_k: np.ndarray, grid: BZGrid) -> np.ndarray:
    # per_k has shape (K, ...); np.sum reduces pairwise in a fixed order
    w = grid.weights / grid.weights.sum()
    return np.sum(w.reshape((-1,) + (1,) * (per_k.ndim - 1)) * per_k, axis=0)


def _imag_residue(total: complex, terms) -> float:
    scale = max(abs(total), max((abs(t) for t in terms), default=0.0))
    return 0.0 if scale == 0 else abs(total.imag) / scale


def _c3(m, a, b, c):
    return np.einsum("kabc,kab,kbc,kca->k", m, a, b, c)


def _c4(m, a, b, c, d):
    return np.einsum("kabcd,kab,kbc,kcd,kda->k", m, a, b, c, d)


def _pair_trace(moment, a, b):
    return np.einsum("kab,kab,kba->k", moment, a, b)


def sigma_zero(
    model: LatticeModel,
    params: ThermoOpticalParams,
    pair=(1, 2),
    *,
    grid=64,
    settings: ContourSettings | None = None,
    method: str = "quadrature",
    workers: int | None = None,
    bounds=None,
) -> ConductivityResult:
    """Zero-field conductivity ``sigma_ab(0)`` for ``pair = (a, b)``.

    ``method="residue"`` replaces the contour quadrature by the exact sum over
    band poles (see :func:`residue_double_resolvent`).
    """
    a, b = (int(v) for v in pair)
    if a not in (1, 2) or b not in (1, 2):
        raise ValidationError(f"direction pair must lie in {{1,2}}^2, got {pair!r}")
    if method not in ("quadrature", "residue"):
        raise ValidationError(f"unknown method {method!r}")
    grid = _as_grid(model, grid)
    contour = _contour_for(model, params, settings, bounds)
    c = fermi_dirac(contour.nodes, params) * contour.weights
    z = contour.nodes
    w0 = params.omega0

    def chunk(sl):
        lam, (da, db) = _eigen_chunk(model, grid.nodes[sl], ((a,), (b,)))
        if method == "residue":
            return _residue_pair_terms(lam, da, db, params, w0)
        direct = _pair_trace(kernels.pair_moment(lam, z - w0, z, c), da, db)
        image = _pair_trace(kernels.pair_moment(lam, z, z + w0, c), da, db)
        return np.stack([direct, image], axis=1)

    per_k = np.concatenate(_map_chunks(chunk, grid.size, _workers(workers)))
    direct, image = _k_average(per_k, grid)
    breakdown = {"direct": complex(direct), "image": complex(image)}
    prefactor = 1.0 / (2 * math.pi * w0 * model.unit_cell_area)
    total = complex(direct + image)
    return ConductivityResult(
        value=float(prefactor * total.real),
        breakdown=breakdown,
        prefactor=prefactor,
        grid=(grid.n1, grid.n2),
        contour_nodes=0 if method == "residue" else contour.size,
        params=params,
        quantity=f"sigma{a}{b}(0)",
        method=method,
        imag_residue=_imag_residue(total, breakdown.values()),
    )


def _residue_pair_terms(lam, da, db, params, omega):
    """Per-k residue sums of the direct and image terms."""
    f = fermi_dirac(lam, params)
    gap = lam[:, :, None] - lam[:, None, :] + omega  # lam_n - lam_m + omega
    if np.any(np.abs(gap) <= DEGENERACY_TOL):
        raise DegeneracyError("resonant denominator lam_n - lam_m + omega ~ 0")
    ab = da * db.transpose(0, 2, 1)  # A_nm B_mn
    direct = -2j * np.pi * np.einsum("knm,km,knm->k", ab, f, 1 / gap)
    image = 2j * np.pi * np.einsum("knm,kn,knm->k", ab, f, 1 / gap)
    return np.stack([direct, image], axis=1)


def residue_double_resolvent(fiber, A, B, params: ThermoOpticalParams, omega=None) -> complex:
    """Closed form of ``oint f(z) tr[r(z - omega) A r(z) B] dz``.

    Only the band poles ``z = lam_m`` of ``r(z)`` are enclosed, so the
    integral equals ``-2 pi i sum_{n,m} f(lam_m) A_nm B_mn / (lam_n - lam_m + omega)``
    with ``A, B`` in the eigenbasis of the fiber.
    """
    h = np.asarray(fiber.entries if isinstance(fiber, FiberMatrix) else fiber, dtype=complex)
    A = np.asarray(A.entries if isinstance(A, FiberMatrix) else A, dtype=complex)
    B = np.asarray(B.entries if isinstance(B, FiberMatrix) else B, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or A.shape != h.shape or B.shape != h.shape:
        raise ValidationError("fiber, A and B must be square matrices of equal size")
    omega = params.omega0 if omega is None else omega
    lam, vec = np.linalg.eigh(h)
    vh = vec.conj().T
    terms = _residue_pair_terms(lam[None], (vh @ A @ vec)[None], (vh @ B @ vec)[None], params, omega)
    return complex(terms[0, 0])


def _verdet_lines(moments, d1, d2, d11, d12):
    ppq, pqq, ppqq = moments["PPQ"], moments["PQQ"], moments["PPQQ"]
    pppq, pqqq = moments["PPPQ"], moments["PQQQ"]
    return np.stack([
        -_c3(ppq, d1, d12, d2) + _c3(ppq, d2, d11, d2),
        _c4(ppqq, d1, d1, d2, d2) - _c4(ppqq, d2, d1, d1, d2),
        -_c3(pqq, d11, d2, d2) + _c3(pqq, d12, d1, d2),
        -_c4(pqqq, d1, d1, d2, d2) + _c4(pqqq, d1, d2, d1, d2),
        -_c4(pppq, d1, d2, d1, d2) + _c4(pppq, d2, d1, d1, d2),
    ], axis=1)


def sigma21_first_derivative(
    model: LatticeModel,
    params: ThermoOpticalParams,
    *,
    grid=64,
    settings: ContourSettings | None = None,
    workers: int | None = None,
    bounds=None,
) -> ConductivityResult:
    """Verdet coefficient ``sigma21^(1) = d sigma21 / db`` at ``b = 0``.

    The breakdown has one entry per line (``L1``..``L5``) and per image
    (``L1_image``..``L5_image``); each entry already includes ``i`` and the
    line's sign, so the value is ``prefactor * Re(sum)`` with
    ``prefactor = 1 / (4 pi omega0 |Omega|)``.
    """
    grid = _as_grid(model, grid)
    contour = _contour_for(model, params, settings, bounds)
    c = fermi_dirac(contour.nodes, params) * contour.weights
    z = contour.nodes
    w0 = params.omega0

    def chunk(sl):
        lam, (d1, d2, d11, d12) = _eigen_chunk(model, grid.nodes[sl], ((1,), (2,), (1, 1), (1, 2)))
        direct = _verdet_lines(kernels.verdet_moments(lam, z - w0, z, c), d1, d2, d11, d12)
        image = _verdet_lines(kernels.verdet_moments(lam, z, z + w0, c), d1, d2, d11, d12)
        return np.concatenate([direct, image], axis=1)

    per_k = np.concatenate(_map_chunks(chunk, grid.size, _workers(workers)))
    avg = _k_average(per_k, grid)
    signs = [VERDET_SIGNS[n] for n in VERDET_LINES] * 2
    breakdown = {label: complex(1j * s * v) for label, s, v in zip(VERDET_LABELS, signs, avg)}
    prefactor = 1.0 / (4 * math.pi * w0 * model.unit_cell_area)
    total = complex(sum(breakdown.values()))
    return ConductivityResult(
        value=float(prefactor * total.real),
        breakdown=breakdown,
        prefactor=prefactor,
        grid=(grid.n1, grid.n2),
        contour_nodes=contour.size,
        params=params,
        quantity="sigma21^(1)",
        imag_residue=_imag_residue(total, breakdown.values()),
        extra={"backend": kernels.BACKEND},
    )


def with_convergence(fn, model, params, *, grid=64, settings: ContourSettings | None = None, **kwargs):
    """Run ``fn`` at the given settings and with grid and contour nodes doubled.

    Returns the refined result with ``error_estimate`` set to the absolute
    change between the two runs.
    """
    settings = settings or ContourSettings()
    base = _as_grid(model, grid)
    coarse = fn(model, params, grid=base, settings=settings, **kwargs)
    fine = fn(model, params, grid=(2 * base.n1, 2 * base.n2), settings=settings.refined(), **kwargs)
    fine.error_estimate = abs(fine.value - coarse.value)
    fine.extra["coarse_value"] = coarse.value
    return fine
