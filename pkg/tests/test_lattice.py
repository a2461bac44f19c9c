import numpy as np
import pytest

from tbverdet.errors import ValidationError
from tbverdet.lattice import (
    LatticeModel,
    graphene_model,
    load_model,
    magnetic_kernel,
    peierls_phase,
    schur_holmgren_norm,
    triangle_flux,
)


def test_graphene_geometry(graphene):
    assert graphene.nu == 4
    assert len(graphene.hoppings) == 12
    assert graphene.unit_cell_area == pytest.approx(3 * np.sqrt(3))
    b1, b2 = graphene.reciprocal_vectors
    for a, b, want in ((graphene.a1, b1, 2 * np.pi), (graphene.a1, b2, 0), (graphene.a2, b2, 2 * np.pi)):
        assert a @ b == pytest.approx(want, abs=1e-12)


def test_every_site_has_three_neighbours(graphene):
    i, j, _, amps, disp = graphene.hopping_arrays()
    assert np.allclose(np.hypot(*disp.T), 1.0)
    assert np.bincount(i, minlength=4).tolist() == [3, 3, 3, 3]


def test_hermiticity_is_enforced():
    with pytest.raises(ValidationError, match="Hermitian"):
        LatticeModel([1, 0], [0, 1], [[0, 0]], {(0, 0, (1, 0)): 1.0})
    LatticeModel([1, 0], [0, 1], [[0, 0]], {(0, 0, (1, 0)): 1j, (0, 0, (-1, 0)): -1j})


@pytest.mark.parametrize("kwargs, match", [
    (dict(a1=[1, 0], a2=[2, 0], basis=[[0, 0]]), "dependent"),
    (dict(a1=[1, 0], a2=[0, 1], basis=[[0.1, 0]]), "origin"),
    (dict(a1=[1, 0], a2=[0, 1], basis=[[0, 0]], hoppings={(0, 3, (0, 0)): 1.0}), "missing"),
])
def test_invalid_models(kwargs, match):
    kwargs.setdefault("hoppings", {})
    with pytest.raises(ValidationError, match=match):
        LatticeModel(**kwargs)


def test_locate_and_kernel(graphene):
    site = graphene.locate([1.5 + 3, np.sqrt(3) / 2 - np.sqrt(3)])
    assert (site.cell, site.basis_index) == ((1, -1), 2)
    assert graphene.locate([0.3, 0.1]) is None
    x = graphene.site((0, 0), 1)
    assert graphene.kernel(x, graphene.site((0, 0), 0)) == 1
    assert graphene.kernel(x, graphene.site((0, 0), 3)) == 0


def test_peierls_phase_antisymmetric_and_zero_at_origin():
    x, y = np.array([1.2, -0.4]), np.array([0.3, 2.0])
    assert peierls_phase(x, y) == pytest.approx(-peierls_phase(y, x))
    assert peierls_phase(x, [0, 0]) == 0


def test_triangle_flux_is_signed_area():
    # counter-clockwise unit right triangle has area 1/2
    flux = triangle_flux([0, 0], [1, 0], [0, 1])
    assert abs(flux) == pytest.approx(0.5)


def test_magnetic_kernel_unimodular(graphene):
    x, y = graphene.site((2, -1), 1), graphene.site((2, -1), 0)
    assert abs(magnetic_kernel(graphene, 0.37, x, y)) == pytest.approx(1.0)
    assert magnetic_kernel(graphene, 0.0, x, y) == 1.0
    assert magnetic_kernel(graphene, 0.37, x, graphene.site((5, 5), 0)) == 0


def test_schur_holmgren(graphene):
    assert schur_holmgren_norm(graphene) == 3.0
    assert schur_holmgren_norm(graphene.scaled(0.5)) == 1.5


def test_model_file_roundtrip(tmp_path, graphene):
    import yaml

    data = graphene.to_dict()
    data["hoppings"] = [" ".join(str(v) for v in h) for h in data["hoppings"]]
    path = tmp_path / "g.yaml"
    path.write_text(yaml.safe_dump(data))
    loaded = load_model(path)
    assert loaded.hoppings == graphene.hoppings
    assert np.array_equal(loaded.basis, graphene.basis)


def test_model_file_errors(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("a1: [1, 0]\n")
    with pytest.raises(ValidationError, match="missing"):
        load_model(path)
    path.write_text("a1: [1, 0]\na2: [0, 1]\nbasis: [[0, 0]]\nhoppings: ['0 0 1 0 1']\n")
    with pytest.raises(ValidationError, match="bad hopping"):
        load_model(path)
