import numpy as np
import pytest

from oracles import brute_fiber, zero_model
from tbverdet.bloch import (
    Convention,
    band_energies,
    band_path,
    bz_grid,
    fiber_hamiltonian,
    fiber_k_derivative,
    fiber_stack,
    graphene_waypoints,
    spectral_bounds,
)
from tbverdet.errors import ValidationError

K_POINT = np.array([0.0, 2 * np.pi / (3 * np.sqrt(3))])


def test_fiber_at_gamma(graphene):
    h = fiber_hamiltonian(graphene, [0, 0]).entries
    expected = np.array([[0, 1, 0, 2], [1, 0, 2, 0], [0, 2, 0, 1], [2, 0, 1, 0]])
    assert np.allclose(h, expected)
    assert np.allclose(band_energies(graphene, [0, 0]), [-3, -1, 1, 3], atol=1e-10)


def test_dirac_point(graphene):
    e = band_energies(graphene, K_POINT)
    assert abs(e[1]) < 1e-10 and abs(e[2]) < 1e-10
    assert np.allclose(graphene_waypoints()["K"], K_POINT)


@pytest.mark.parametrize("k", [[0.3, -0.7], [1.1, 0.2], [-0.5, 1.4]])
@pytest.mark.parametrize("direction", [(), (1,), (2,), (1, 1), (1, 2), (2, 2)])
def test_fiber_matches_site_sum(graphene, k, direction):
    got = fiber_stack(graphene, np.array([k]), (direction,))[0, 0]
    assert np.allclose(got, brute_fiber(graphene, k, direction), atol=1e-13)


def test_derivative_matches_finite_difference(graphene):
    k = np.array([0.4, -0.9])
    step = 1e-5
    for nu in (1, 2):
        e = np.zeros(2)
        e[nu - 1] = step
        fd = (fiber_hamiltonian(graphene, k + e).entries - fiber_hamiltonian(graphene, k - e).entries) / (2 * step)
        assert np.allclose(fiber_k_derivative(graphene, k, nu).entries, fd, atol=1e-8)


def test_conventions_are_unitarily_equivalent(graphene):
    k = np.array([0.7, 0.25])
    plain = fiber_hamiltonian(graphene, k, Convention.PLAIN).entries
    phased = fiber_hamiltonian(graphene, k).entries
    u = np.diag(np.exp(-1j * graphene.basis @ k))
    assert np.allclose(u @ plain @ u.conj(), phased)


def test_plain_fiber_periodic(graphene):
    b1, b2 = graphene.reciprocal_vectors
    k = np.array([0.3, 0.2])
    h = fiber_hamiltonian(graphene, k, "plain").entries
    assert np.allclose(fiber_hamiltonian(graphene, k + b1 - 2 * b2, "plain").entries, h)


def test_derivative_validation(graphene):
    with pytest.raises(ValidationError):
        fiber_k_derivative(graphene, [0, 0], 3)
    with pytest.raises(ValidationError):
        fiber_k_derivative(graphene, [0, 0], (1, 1, 2))
    with pytest.raises(ValidationError):
        fiber_k_derivative(graphene, [0, 0], 1, convention="plain")


def test_bz_grid(graphene):
    g = bz_grid(graphene, 8, 6)
    assert g.size == 48
    assert g.weights.sum() == pytest.approx(graphene.bz_area)
    refl = g.index_of_reflection(2)
    assert np.allclose(g.fractional[refl, 1] % 1, (-g.fractional[:, 1]) % 1)
    assert np.array_equal(g.fractional[refl, 0], g.fractional[:, 0])
    assert np.array_equal(refl[refl], np.arange(g.size))
    with pytest.raises(ValidationError):
        bz_grid(graphene, 0)


def test_spectral_bounds(graphene):
    lo, hi = spectral_bounds(graphene)
    assert lo == pytest.approx(-3, abs=1e-12) and hi == pytest.approx(3, abs=1e-12)
    assert spectral_bounds(zero_model()) == (0.0, 0.0)


def test_band_path_shape(graphene):
    w = graphene_waypoints()
    path = band_path(graphene, [w["G"], w["X1"], w["M"], w["K"]], 10)
    assert path.energies.shape == (31, 4)
    assert np.all(np.diff(path.arclength) > 0)
    assert np.allclose(path.energies[0], [-3, -1, 1, 3])
    rows = list(path.rows())
    assert len(rows[0]) == 7
    with pytest.raises(ValidationError):
        band_path(graphene, [w["G"]], 10)
    with pytest.raises(ValidationError):
        band_path(graphene, [w["G"], w["G"]], 10)
