import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centerkit.errors import InvalidSpec, MissingGradient
from centerkit.fields import (
    FlatPart,
    ScalarField,
    catalog,
    custom,
    first_integral_residual,
    hamiltonian_of,
    linear_map,
    linearize,
    load_field_spec,
    make_field,
    pushforward,
    quadratic_product,
    scalar_from_expr,
    tangency_residual,
    takens_flat,
)
from centerkit.linalg import spectrum
from conftest import disk_samples


def test_rotation_components():
    F = make_field({"type": "rotation", "b": 1})
    x, y = np.array([0.3, -0.2]), np.array([0.4, 0.9])
    f1, f2 = F(x, y)
    assert np.array_equal(f1, -y) and np.array_equal(f2, x)


def test_monomial_components():
    F = make_field({"type": "monomial_hamiltonian", "p": 1, "q": 2, "b": 1})
    x, y = 0.5, 0.7
    assert F(x, y)[0] == pytest.approx(-2 * y**3, abs=1e-15)
    assert F(x, y)[1] == pytest.approx(x, abs=1e-15)


def test_takens_nonflat_components():
    F = make_field({"type": "takens_nonflat", "delta": -1, "k": 1, "alpha": 0})
    x, y = 0.3, -0.6
    r2 = x * x + y * y
    f1, f2 = F(x, y)
    assert f1 == pytest.approx(-2 * np.pi * y - x * r2, abs=1e-14)
    assert f2 == pytest.approx(2 * np.pi * x - y * r2, abs=1e-14)


@pytest.mark.parametrize(
    "spec",
    [
        {"type": "rotation", "b": 0},
        {"type": "monomial_hamiltonian", "p": 0, "q": 1},
        {"type": "monomial_hamiltonian", "p": 1.5, "q": 1},
        {"type": "quadratic_product", "forms": [[[1, 0], [0, -1]]]},
        {"type": "quadratic_product", "forms": [[[1, 0], [0, 1]], [[2, 0], [0, 2]]]},
        {"type": "takens_nonflat", "delta": 2, "k": 1},
        {"type": "takens_nonflat", "delta": 1, "k": 0},
        {"type": "takens_flat", "beta": [0.0, 1.0]},
        {"type": "nonsense"},
        {"b": 1},
    ],
)
def test_invalid_specs(spec):
    with pytest.raises(InvalidSpec):
        make_field(spec)


def test_spec_file_round_trip(tmp_path):
    path = tmp_path / "f.json"
    spec = {"type": "takens_flat", "flat_x": {"c": 0.5, "poly": [[1, 0, 1.0]]}, "flat_y": {"c": 0.5, "poly": [[0, 1, 1.0]]}}
    path.write_text(json.dumps(spec))
    F = make_field(load_field_spec(path))
    assert F.params["flat_x"] == spec["flat_x"]
    with pytest.raises(InvalidSpec):
        load_field_spec(tmp_path / "missing.json")


def test_flat_part_formula():
    fp = FlatPart.from_spec({"c": 2.0, "poly": [[1, 1, 3.0]]})
    x, y = 0.4, -0.3
    assert fp(x, y) == pytest.approx(2.0 * np.exp(-1 / (x * x + y * y)) * 3 * x * y, rel=1e-14)
    assert fp(0.0, 0.0) == 0.0


@pytest.mark.parametrize("name,F", list(catalog().items()))
def test_catalog_vanishes_at_origin(name, F):
    f1, f2 = F(0.0, 0.0)
    assert f1 == 0.0 and f2 == 0.0


@pytest.mark.parametrize("name,F", list(catalog().items()))
def test_analytic_and_numeric_linearization_agree(name, F):
    assert np.max(np.abs(linearize(F) - linearize(F, numeric=True))) <= 1e-8


@pytest.mark.parametrize("name,F", list(catalog().items()))
def test_analytic_jacobian_matches_differences(name, F, rng):
    pts = disk_samples(rng, 30, 0.9)
    J = F.jacobian(pts[:, 0], pts[:, 1])
    h = 1e-6
    cols = []
    for dx, dy in ((h, 0.0), (0.0, h)):
        fp = np.array(F(pts[:, 0] + dx, pts[:, 1] + dy))
        fm = np.array(F(pts[:, 0] - dx, pts[:, 1] - dy))
        cols.append(((fp - fm) / (2 * h)).T)
    Jn = np.stack(cols, -1)
    assert np.max(np.abs(J - Jn)) <= 1e-7


def test_linearize_examples():
    assert np.array_equal(linearize(make_field({"type": "rotation", "b": 1})), [[0, -1], [1, 0]])
    assert np.array_equal(linearize(make_field({"type": "monomial", "p": 2, "q": 2})), np.zeros((2, 2)))
    assert np.array_equal(linearize(make_field({"type": "monomial", "p": 1, "q": 2})), [[0, 0], [1, 0]])


@pytest.mark.parametrize("name", ["rotation1", "rotation2", "monomial11"])
def test_tangency_exact(name):
    assert tangency_residual(catalog()[name]) <= 1e-12


def test_tangency_flags():
    cat = catalog()
    assert cat["takens_flat_radial"].tangent
    assert not cat["takens_nonflat"].tangent
    assert not make_field({"type": "custom", "F1": "-y + x/10", "F2": "x"}).tangent


@pytest.mark.parametrize("name,F", list(catalog().items()))
def test_spectrum_matches_center_type(name, F):
    ev = spectrum(linearize(F))
    elliptic = name in {"rotation1", "rotation2", "monomial11", "takens_flat_radial", "takens_flat_x", "takens_nonflat"}
    if elliptic:
        assert all(abs(z.real) < 1e-12 and abs(z.imag) > 0.1 for z in ev)
    else:
        assert any(abs(z) < 1e-12 for z in ev)


def test_hamiltonian_of_radial_quadratic():
    F = hamiltonian_of(scalar_from_expr("(x**2 + y**2)/2"))
    f1, f2 = F(0.3, 0.5)
    assert (f1, f2) == pytest.approx((-0.5, 0.3), abs=1e-15)


def test_hamiltonian_of_quartic():
    F = hamiltonian_of(scalar_from_expr("(x**4 + y**4)/4"))
    assert F(0.3, 0.5)[0] == pytest.approx(-0.125, abs=1e-15)
    assert F(0.3, 0.5)[1] == pytest.approx(0.027, abs=1e-15)


def test_hamiltonian_of_product_of_forms(rng):
    f = scalar_from_expr("(x**2 + y**2) * (x**2 + 2*y**2)")
    F = hamiltonian_of(f)
    pts = disk_samples(rng, 50)
    assert first_integral_residual(F, f, pts) <= 1e-14
    Q = quadratic_product([[[1, 0], [0, 1]], [[1, 0], [0, 2]]])
    assert np.allclose(np.array(Q(pts[:, 0], pts[:, 1])), np.array(F(pts[:, 0], pts[:, 1])), atol=1e-14)


def test_hamiltonian_needs_gradient():
    with pytest.raises(MissingGradient):
        hamiltonian_of(ScalarField(lambda x, y: x))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-3, 3), min_size=6, max_size=6))
def test_hamiltonian_residual_vanishes(c):
    expr = f"{c[0]}*x**2 + {c[1]}*x*y + {c[2]}*y**2 + {c[3]}*x**3 + {c[4]}*x*y**2 + {c[5]}*y**4"
    f = scalar_from_expr(expr)
    pts = disk_samples(np.random.default_rng(sum(c) + 100), 40)
    assert first_integral_residual(hamiltonian_of(f), f, pts) <= 1e-12


def test_first_integral_residual_examples(rng):
    F = make_field({"type": "rotation", "b": 1})
    pts = disk_samples(rng, 50)
    assert first_integral_residual(F, scalar_from_expr("x**2 + y**2"), pts) == 0.0
    assert first_integral_residual(F, scalar_from_expr("x"), pts) == pytest.approx(np.max(np.abs(pts[:, 1])))


def test_pushforward_identity(rng):
    F = catalog()["takens_flat_x"]
    ident = lambda x, y: (x, y)
    G = pushforward(F, ident, ident, lambda x, y: np.broadcast_to(np.eye(2), np.broadcast(x, y).shape + (2, 2)))
    pts = disk_samples(rng, 50)
    assert np.array_equal(np.array(G(pts[:, 0], pts[:, 1])), np.array(F(pts[:, 0], pts[:, 1])))


def test_pushforward_by_scaling_keeps_rotation(rng):
    F = make_field({"type": "rotation", "b": 1})
    G = pushforward(F, *linear_map(2 * np.eye(2)))
    pts = disk_samples(rng, 50)
    assert np.allclose(np.array(G(pts[:, 0], pts[:, 1])), np.array(F(pts[:, 0], pts[:, 1])), atol=1e-15)


def test_pushforward_linear_part_is_conjugated():
    F = custom("y + x**2", "y**2")
    H = np.array([[1.0, 1.0], [0.0, 1.0]])
    G = pushforward(F, *linear_map(H))
    A = linearize(F)
    assert np.array_equal(A, [[0, 1], [0, 0]])
    assert np.allclose(linearize(G), H @ A @ np.linalg.inv(H), atol=1e-8)
    assert np.allclose(linearize(G), [[0, 1], [0, 0]], atol=1e-8)


def test_custom_callable_field():
    F = custom(lambda x, y: (-y, x))
    assert F.tangent and F.jac is None
    assert np.allclose(linearize(F), [[0, -1], [1, 0]], atol=1e-10)


def test_takens_flat_default_is_rotation():
    F = takens_flat()
    assert F(0.3, 0.4)[0] == -0.4 and F(0.3, 0.4)[1] == 0.3
