import numpy as np
import pytest

from oracles import brute_fiber, resolvent_verdet_lines, verdet_by_inverses, zero_model
from tbverdet import kernels
from tbverdet.bloch import FiberMatrix, bz_grid, fiber_stack
from tbverdet.contour import ContourSettings, ThermoOpticalParams, build_contour, contour_integrate, fermi_dirac
from tbverdet.errors import AdmissibilityError, ValidationError
from tbverdet.kubo import (
    VERDET_LABELS,
    _eigen_chunk,
    _verdet_lines,
    residue_double_resolvent,
    sigma21_first_derivative,
    sigma_zero,
    with_convergence,
)

# frozen from a 128x128 grid with 32 nodes per panel (self-convergence 1.9e-9 relative)
VERDET_MU1 = -0.005919327943750578


@pytest.fixture(scope="module")
def mu1():
    return ThermoOpticalParams(beta=10.0, mu=1.0, omega0=7.0)


def test_sigma21_zero_vanishes(graphene, standard_params):
    for method in ("quadrature", "residue"):
        res = sigma_zero(graphene, standard_params, (1, 2), grid=32, method=method)
        assert abs(res.value) < 1e-10
        assert res.quantity == "sigma12(0)"


def test_sigma21_zero_vanishes_away_from_half_filling(graphene):
    res = sigma_zero(graphene, ThermoOpticalParams(beta=3.0, mu=0.8, omega0=6.5), (2, 1), grid=24)
    assert abs(res.value) < 1e-10


def test_sigma21_zero_integrand_odd_in_k2(graphene, standard_params):
    # per-k contour integrals cancel between k and its k2-mirror
    grid = bz_grid(graphene, 16)
    contour = build_contour((-3, 3), standard_params)
    c = fermi_dirac(contour.nodes, standard_params) * contour.weights
    z, w0 = contour.nodes, standard_params.omega0
    lam, (d1, d2) = _eigen_chunk(graphene, grid.nodes, ((1,), (2,)))
    per_k = np.einsum("kab,kab,kba->k", kernels.pair_moment(lam, z - w0, z, c), d1, d2)
    per_k += np.einsum("kab,kab,kba->k", kernels.pair_moment(lam, z, z + w0, c), d1, d2)
    refl = grid.index_of_reflection(2)
    scale = np.abs(per_k).max()
    assert scale > 1e-3
    assert np.max(np.abs(per_k + per_k[refl])) < 1e-12 * scale


def test_sigma11_real_and_quadrature_matches_residue(graphene, mu1):
    q = sigma_zero(graphene, mu1, (1, 1), grid=24)
    r = sigma_zero(graphene, mu1, (1, 1), grid=24, method="residue")
    assert np.isfinite(q.value)
    for label in ("direct", "image"):
        assert q.breakdown[label] == pytest.approx(r.breakdown[label], rel=1e-10)


def test_zero_hopping_model(standard_params):
    m = zero_model()
    assert sigma_zero(m, standard_params, (1, 2), grid=4).value == 0
    assert sigma_zero(m, standard_params, (1, 1), grid=4).value == 0
    assert sigma21_first_derivative(m, standard_params, grid=4).value == 0


def test_admissibility_propagates(graphene):
    with pytest.raises(AdmissibilityError):
        sigma_zero(graphene, ThermoOpticalParams(beta=10, omega0=5), grid=4)
    with pytest.raises(ValidationError):
        sigma_zero(graphene, ThermoOpticalParams(beta=10, omega0=7), (1, 3), grid=4)


def test_residue_double_resolvent_scalar():
    p = ThermoOpticalParams(beta=4.0, mu=0.2, omega0=7.0)
    eps = 0.6
    got = residue_double_resolvent(np.array([[eps]]), np.eye(1), np.eye(1), p)
    assert got == pytest.approx(2j * np.pi * fermi_dirac(eps, p) * (-1 / 7.0), rel=1e-14)
    zero = np.zeros((1, 1))
    assert residue_double_resolvent(np.array([[eps]]), zero, zero, p) == 0


def test_residue_double_resolvent_vs_contour(graphene, mu1):
    contour = build_contour((-3, 3), mu1)
    rng = np.random.default_rng(5)
    for k in rng.uniform(-2, 2, size=(5, 2)):
        h, a, b = fiber_stack(graphene, k[None], ((), (1,), (2,)))[:, 0]
        eye = np.eye(4)

        def g(z):
            rm = np.linalg.inv(h - (z - mu1.omega0) * eye)
            r = np.linalg.inv(h - z * eye)
            return fermi_dirac(z, mu1) * np.trace(rm @ a @ r @ b)

        quad = contour_integrate(contour, g, vectorized=False)
        fib = FiberMatrix(k, h)
        exact = residue_double_resolvent(fib, FiberMatrix(k, a), FiberMatrix(k, b), mu1)
        assert quad == pytest.approx(exact, rel=1e-8)


def test_verdet_lines_match_explicit_resolvents(graphene, mu1):
    # moment-tensor contraction vs dense inverses at single (k, z) nodes
    k = np.array([[0.37, -0.81]])
    lam, mats = _eigen_chunk(graphene, k, ((1,), (2,), (1, 1), (1, 2)))
    dense = [brute_fiber(graphene, k[0], d) for d in ((), (1,), (2,), (1, 1), (1, 2))]
    for z in (0.3 + 0.2j, -2.9 - 0.1j):
        c = np.array([1.0 + 0j])
        mom = kernels.verdet_moments(lam, np.array([z - 7.0]), np.array([z]), c)
        got = _verdet_lines(mom, *mats)[0]
        assert np.allclose(got, resolvent_verdet_lines(*dense, z, 7.0), rtol=1e-11, atol=1e-13)


def test_verdet_against_explicit_inverse_route(graphene, mu1):
    settings = ContourSettings(nodes_per_edge=8)
    contour = build_contour((-3, 3), mu1, settings=settings)
    want = verdet_by_inverses(graphene, mu1, 4, contour)
    got = sigma21_first_derivative(graphene, mu1, grid=4, settings=settings, bounds=(-3, 3))
    assert got.value == pytest.approx(want, rel=1e-11)


def test_verdet_value_and_breakdown(graphene, mu1):
    res = sigma21_first_derivative(graphene, mu1, grid=64)
    assert res.value == pytest.approx(VERDET_MU1, rel=1e-7)
    assert tuple(res.breakdown) == VERDET_LABELS
    assert res.value == pytest.approx(res.prefactor * res.total.real, rel=1e-14)
    assert res.imag_residue < 1e-10
    assert res.contour_nodes > 0 and res.grid == (64, 64)


def test_verdet_half_filling_vanishes(graphene, standard_params):
    res = sigma21_first_derivative(graphene, standard_params, grid=32)
    scale = res.prefactor * max(abs(v) for v in res.breakdown.values())
    assert abs(res.value) < 1e-10 * scale


def test_verdet_odd_in_chemical_potential(graphene):
    # particle-hole symmetry of the bipartite lattice
    plus = sigma21_first_derivative(graphene, ThermoOpticalParams(beta=10, mu=0.7, omega0=7), grid=24)
    minus = sigma21_first_derivative(graphene, ThermoOpticalParams(beta=10, mu=-0.7, omega0=7), grid=24)
    assert plus.value == pytest.approx(-minus.value, rel=1e-9)


def test_contour_height_invariance(graphene, mu1):
    values = [
        sigma_zero(graphene, mu1, (1, 1), grid=16, settings=ContourSettings(half_height_factor=f)).total
        for f in (0.3, 0.5, 0.8)
    ]
    for v in values[1:]:
        assert v == pytest.approx(values[0], rel=1e-10)


def test_workers_do_not_change_result(graphene, mu1):
    a = sigma21_first_derivative(graphene, mu1, grid=24, workers=1)
    b = sigma21_first_derivative(graphene, mu1, grid=24, workers=3)
    assert a.value == b.value
    assert a.breakdown == b.breakdown


def test_with_convergence(graphene, mu1):
    res = with_convergence(sigma21_first_derivative, graphene, mu1, grid=16)
    assert res.grid == (32, 32)
    assert res.error_estimate == pytest.approx(abs(res.value - res.extra["coarse_value"]))
    record = res.to_record()
    assert record["error_estimate"] == res.error_estimate
    assert set(record["breakdown"]) == set(VERDET_LABELS)
