"""Quick oracle-equivalence and parity checks for ``tbverdet selftest``."""
from __future__ import annotations

import numpy as np

from . import kernels
from .contour import ThermoOpticalParams, build_contour, contour_integrate, fermi_dirac
from .finite import build_finite, equilibrium_current, sigma21_finite
from .kubo import residue_double_resolvent, sigma_zero
from .lattice import graphene_model, peierls_phase, triangle_flux


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def check_residue_vs_quadrature(n_fibers=50, seed=1):
    rng = np.random.default_rng(seed)
    params = ThermoOpticalParams(beta=10.0, mu=0.3, omega0=7.0)
    worst = 0.0
    for _ in range(n_fibers):
        h = _random_hermitian(rng, 4)
        h *= 2.5 / np.abs(np.linalg.eigvalsh(h)).max()
        a, b = _random_hermitian(rng, 4), _random_hermitian(rng, 4)
        contour = build_contour((-2.5, 2.5), params)
        lam, v = np.linalg.eigh(h)
        at, bt = v.conj().T @ a @ v, v.conj().T @ b @ v
        c = fermi_dirac(contour.nodes, params) * contour.weights
        pq = kernels.pair_moment(lam[None], contour.nodes - params.omega0, contour.nodes, c)[0]
        quad = np.sum(pq * at * bt.T)
        exact = residue_double_resolvent(h, a, b, params)
        worst = max(worst, abs(quad - exact) / abs(exact))
    return worst < 1e-8, f"max relative difference {worst:.2e}"


def check_cauchy():
    params = ThermoOpticalParams(beta=10.0, mu=0.0, omega0=7.0)
    contour = build_contour((-3.0, 3.0), params)
    value = contour_integrate(contour, lambda z: fermi_dirac(z, params) / (z - 1.0))
    err = abs(value - 2j * np.pi * fermi_dirac(1.0, params))
    return err < 1e-12, f"residue error {err:.2e}"


def check_sigma21_zero():
    res = sigma_zero(graphene_model(), ThermoOpticalParams(beta=10.0, mu=0.0, omega0=7.0), (1, 2), grid=16)
    return abs(res.value) < 1e-8, f"sigma21(0) = {res.value:.3e}"


def check_flux_identity(n=1000, seed=2):
    rng = np.random.default_rng(seed)
    x, y, z = rng.normal(scale=10.0, size=(3, n, 2))
    lhs = triangle_flux(x, y, z)
    rhs = peierls_phase(x, y) + peierls_phase(y, z) + peierls_phase(z, x)
    err = np.max(np.abs(lhs - rhs) / (1 + np.abs(lhs)))
    return err < 1e-12, f"max defect {err:.2e}"


def check_finite_routes():
    lat = build_finite(graphene_model(), 2, b=0.05)
    params = ThermoOpticalParams(beta=10.0, mu=0.5, omega0=7.0, eta=0.1)
    r = sigma21_finite(lat, params)[0].sigma21
    q = sigma21_finite(lat, params, method="quadrature")[0].sigma21
    rel = abs(r - q) / abs(r)
    cur = equilibrium_current(lat, params)
    return rel < 1e-9 and cur < 1e-12, f"residue vs quadrature {rel:.2e}, equilibrium current {cur:.1e}"


def check_backends():
    backends = kernels.available_backends()
    if len(backends) < 2:
        return True, "only the numpy backend is available"
    rng = np.random.default_rng(3)
    lam = rng.normal(size=(8, 4))
    za = rng.normal(size=40) + 2j
    c = rng.normal(size=40) + 1j * rng.normal(size=40)
    out = [mod.verdet_moments(lam, za, za + 7, c) for mod in backends.values()]
    err = max(np.max(np.abs(out[0][k] - out[1][k])) / np.max(np.abs(out[1][k])) for k in out[0])
    return err < 1e-12, f"cython vs numpy {err:.2e}"


CHECKS = (
    ("cauchy", check_cauchy),
    ("residue-vs-quadrature", check_residue_vs_quadrature),
    ("flux-identity", check_flux_identity),
    ("sigma21-zero-parity", check_sigma21_zero),
    ("finite-routes", check_finite_routes),
    ("kernel-backends", check_backends),
)


def run_selftest(stream) -> bool:
    ok_all = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # report and continue with the next check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        stream.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")
    stream.write(f"selftest {'passed' if ok_all else 'failed'} (backend {kernels.BACKEND})\n")
    return ok_all
