import math

import numpy as np
import pytest

from tbverdet.contour import (
    ContourSettings,
    ThermoOpticalParams,
    build_contour,
    contour_integrate,
    fermi_dirac,
)
from tbverdet.errors import AdmissibilityError, PoleEnclosureError, PoleProximityError, ValidationError


@pytest.fixture
def contour(standard_params):
    return build_contour((-3.0, 3.0), standard_params)


def test_geometry(contour):
    assert contour.half_height == pytest.approx(0.5 * math.pi / 10)
    assert contour.interval == (-3.5, 3.5)
    assert contour.clearance() >= 0.1 - 1e-12
    # positively oriented: signed area of the polygon through the nodes is positive
    z = contour.nodes
    area = 0.5 * np.sum(z.real * np.roll(z.imag, -1) - np.roll(z.real, -1) * z.imag)
    assert area > 0
    # perimeter equals the sum of |weights|
    perimeter = 2 * (7.0 + 2 * contour.half_height)
    assert np.sum(np.abs(contour.weights)) == pytest.approx(perimeter)


def test_cauchy(contour):
    assert contour_integrate(contour, lambda z: 1 / (z - 0.5)) == pytest.approx(2j * math.pi, rel=1e-13)
    assert abs(contour_integrate(contour, lambda z: z)) < 1e-13
    assert abs(contour_integrate(contour, lambda z: 1 / (z - 10.0))) < 1e-13


def test_fermi_residue(contour, standard_params):
    value = contour_integrate(contour, lambda z: fermi_dirac(z, standard_params) / (z - 1.0))
    assert value == pytest.approx(2j * math.pi * fermi_dirac(1.0, standard_params), rel=1e-10)


def test_scalar_integrand_and_error_estimate(contour):
    g = lambda z: 1 / (z - 0.25) ** 2 + 1 / (z + 1)  # noqa: E731
    value, err = contour_integrate(contour, g, vectorized=False, error=True)
    assert value == pytest.approx(2j * math.pi, rel=1e-13)
    # the estimate measures the error of the unrefined rule
    coarse_error = abs(contour_integrate(contour, g) - 2j * math.pi)
    assert err == pytest.approx(coarse_error, rel=1e-2)


def test_doubling_converged(standard_params):
    s32 = ContourSettings(nodes_per_edge=32)
    c32 = build_contour((-3, 3), standard_params, settings=s32)
    c64 = c32.refined()
    g = lambda z: fermi_dirac(z, standard_params) / ((z - 0.9) * (z + 2.9))  # noqa: E731
    a, b = contour_integrate(c32, g), contour_integrate(c64, g)
    assert abs(a - b) / abs(b) < 1e-12


def test_admissibility_errors():
    with pytest.raises(AdmissibilityError):
        build_contour((-3, 3), ThermoOpticalParams(beta=10, omega0=5))
    with pytest.raises(AdmissibilityError):
        build_contour((-3, 3), ThermoOpticalParams(beta=10, omega0=6))
    with pytest.raises(PoleEnclosureError):
        ThermoOpticalParams(beta=1, eta=4)
    with pytest.raises(PoleEnclosureError):
        ThermoOpticalParams(beta=1, eta=math.pi)
    with pytest.raises(ValidationError):
        ContourSettings(nodes_per_edge=4)
    with pytest.raises(ValidationError):
        ThermoOpticalParams(beta=-1)
    with pytest.raises(ValidationError):
        build_contour((1, -1), ThermoOpticalParams(beta=1))


def test_delta_clamped_for_shifted_contour():
    # omega0 = 6.2 leaves only 0.2 between the shifted contour and the spectrum
    c = build_contour((-3, 3), ThermoOpticalParams(beta=10, omega0=6.2))
    assert c.interval[0] == pytest.approx(-3.1)
    c.validate()


def test_fermi_dirac_values():
    assert fermi_dirac(0.3, beta=7, mu=0.3) == 0.5
    assert fermi_dirac(1.0, beta=10, mu=0) == pytest.approx(4.5397868702434395e-05, rel=1e-14)
    big = fermi_dirac(np.array([1e6, -1e6, 1e6 + 1j]), beta=1e3, mu=0)
    assert big[0] == 0 and big[1] == 1 and abs(big[2]) == 0
    assert fermi_dirac(0.0 + 1.0j, beta=10, mu=0) == pytest.approx(1 / (np.exp(10j) + 1))


def test_fermi_dirac_pole_proximity():
    with pytest.raises(PoleProximityError):
        fermi_dirac(1j * math.pi / 10, beta=10, mu=0)
    with pytest.raises(PoleProximityError):
        fermi_dirac(0.2 + 3j * math.pi / 2, beta=2, mu=0.2)
    fermi_dirac(1j * math.pi / 10 + 1e-6, beta=10, mu=0)
