import math

import pytest

from tbverdet.errors import ValidationError
from tbverdet.faraday import SlabOptics, df_du, f_uv, refraction_indices, verdet_and_angle

OPTICS = SlabOptics(d=2.0, eps_r=2.5, mu_r=1.3, c=3.0, omega=7.0)


def test_f_at_origin():
    assert f_uv(0, 0, OPTICS) == 1.0


def test_f_on_u_zero_axis():
    k = OPTICS.kappa
    for v in (0.3, -2.0, 11.0):
        expected = (1 + (k * v) ** 2) ** 0.25 * math.cos(0.5 * math.atan(k * v))
        assert f_uv(0, v, OPTICS) == pytest.approx(expected, rel=1e-15)


def test_f_is_real_part_of_square_root():
    k = OPTICS.kappa
    for u, v in ((0.5, 0.2), (-0.8, 3.0), (1.2, -4.0)):
        assert f_uv(u, v, OPTICS) == pytest.approx((complex(1 + k * u, k * v) ** 0.5).real, rel=1e-14)


def test_derivative_against_finite_difference():
    h = 1e-6
    for v in (0.0, 0.4, -3.0):
        for u in (0.0, 0.7):
            fd = (f_uv(u + h, v, OPTICS) - f_uv(u - h, v, OPTICS)) / (2 * h)
            assert df_du(u, v, OPTICS) == pytest.approx(fd, rel=1e-6)


def test_domain():
    with pytest.raises(ValidationError):
        f_uv(OPTICS.u_max, 0, OPTICS)
    with pytest.raises(ValidationError):
        SlabOptics(d=-1)


def test_refraction_indices():
    plus, minus = refraction_indices(0.0, 0.0, OPTICS)
    assert plus == minus == pytest.approx(math.sqrt(1.3 * 2.5))
    plus, minus = refraction_indices(0.2, 0.5, OPTICS)
    swapped = refraction_indices(-0.2, 0.5, OPTICS)
    assert swapped == (minus, plus)
    assert plus >= 0 and minus >= 0


def test_verdet_trivial_cases():
    res = verdet_and_angle(0.0, 0.3, 0.01, OPTICS)
    assert res.verdet == 0 and res.theta == 0 and res.theta_exact == 0
    assert verdet_and_angle(0.4, 0.3, 0.0, OPTICS).theta == 0


@pytest.mark.parametrize("s11", [0.0, 0.35])
def test_linearisation_matches_exact_angle(s11):
    # large coefficient so the O(b^2) remainder stands above rounding
    s21 = -40.0
    res = {b: verdet_and_angle(s21, s11, b, OPTICS) for b in (1e-3, 1e-4)}
    dv = OPTICS.d * res[1e-3].verdet
    defects = {b: abs(r.theta_exact / b - dv) for b, r in res.items()}
    assert defects[1e-3] < 1e-3 * abs(dv)
    assert defects[1e-4] < defects[1e-3] / 50
    for b, r in res.items():
        assert r.theta == pytest.approx(OPTICS.d * b * r.verdet)
