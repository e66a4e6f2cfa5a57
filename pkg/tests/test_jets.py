import json
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centerkit.errors import DegeneratePoint, InvalidSpec, NotDivisible
from centerkit.fields import catalog, scalar_from_expr, takens_flat
from centerkit.jets import (
    HomogeneousPoly,
    TaylorTable,
    defect_matrix,
    divide_by_r2,
    kernel_dimension,
    radial_form,
    radial_relation_defect,
    radialize_series,
    rigidity_residual,
)

HP = HomogeneousPoly
X, Y, R2 = HP.x(), HP.y(), HP.r2()

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=50)


@st.composite
def polys(draw, max_degree=10):
    n = draw(st.integers(0, max_degree))
    return HP(n, tuple(draw(st.lists(fractions, min_size=n + 1, max_size=n + 1))))


def expansion(a, k):
    """a (x^2 + y^2)^k by the binomial theorem."""
    c = [Fraction(0)] * (2 * k + 1)
    for j in range(k + 1):
        c[2 * j] = Fraction(a) * comb(k, j)
    return HP(2 * k, tuple(c))


def test_construction_checks():
    with pytest.raises(ValueError):
        HP(2, (1, 2))
    with pytest.raises(ValueError):
        HP.from_terms(2, [(1, 2, 1)])
    p = HP.from_terms(2, [(2, 0, 1), (0, 2, "1/3")])
    assert p.terms() == {(2, 0): 1, (0, 2): Fraction(1, 3)}
    assert p.evaluate_exact(Fraction(1, 2), 3) == Fraction(1, 4) + 3
    assert p(0.5, 3.0) == pytest.approx(3.25)


def test_arithmetic():
    assert X * X + Y * Y == R2
    assert (X + Y) ** 2 == X * X + (X * Y).scale(2) + Y * Y
    assert (R2 - R2).is_zero()
    with pytest.raises(ValueError):
        X + R2


def test_defect_examples():
    assert radial_relation_defect(R2).is_zero()
    assert radial_relation_defect(X * Y) == X * X - Y * Y
    assert radial_relation_defect(HP(0, (1,))).is_zero()


def test_divide_examples():
    assert divide_by_r2(R2 ** 2) == R2
    assert divide_by_r2(R2) == HP(0, (1,))
    with pytest.raises(NotDivisible):
        divide_by_r2(X ** 3)
    with pytest.raises(NotDivisible):
        divide_by_r2(X * X - Y * Y)
    assert radial_relation_defect(X ** 3) == (X * X * Y).scale(-3)


def test_radial_form_examples():
    assert radial_form((R2 ** 3).scale(3)) == (3, 3)
    assert radial_form(X * X - Y * Y) is None
    assert radial_relation_defect(X * X - Y * Y) == (X * Y).scale(-4)
    assert radial_form(HP.zero(4)) == (0, 0)
    assert radial_form(HP(0, (Fraction(5, 7),))) == (Fraction(5, 7), 0)


@pytest.mark.parametrize("n", range(11))
def test_kernel_dimension(n):
    assert kernel_dimension(n) == (1 if n % 2 == 0 else 0)
    M = defect_matrix(n)
    assert all(isinstance(v, Fraction) for row in M for v in row)


def test_radial_form_expansion_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        a = Fraction(int(rng.integers(-50, 50)) or 1, int(rng.integers(1, 30)))
        k = int(rng.integers(0, 6))
        p = (R2 ** k).scale(a) if k else HP(0, (a,))
        assert p == expansion(a, k)
        assert radial_form(p) == (a, k)


@settings(max_examples=200)
@given(polys())
def test_euler_identity(p):
    assert p.euler_defect().is_zero()
    assert (X * p.diff_x() + Y * p.diff_y() if p.degree else HP.zero(0)) == p.scale(p.degree)


@settings(max_examples=150)
@given(polys(8))
def test_divide_round_trip(p):
    if radial_relation_defect(p).is_zero():
        assert divide_by_r2(p * R2) == p
    try:
        d = divide_by_r2(p)
    except NotDivisible:
        return
    assert R2 * d == p


@settings(max_examples=150)
@given(polys(9))
def test_relation_matches_radiality(p):
    radial = radial_form(p) is not None
    assert radial == radial_relation_defect(p).is_zero() or p.degree == 0


@settings(max_examples=100)
@given(fractions, st.integers(0, 5), polys(6))
def test_non_radial_perturbation_detected(a, k, p):
    base = expansion(a, k)
    if p.degree != base.degree or radial_relation_defect(p).is_zero():
        return
    assert radial_form(base + p) is None


# tables


def test_radialize_examples():
    T = TaylorTable.from_expr("1 + (x**2 + y**2) + (x**2 + y**2)**2/2", 4)
    res = radialize_series(T)
    assert res.ok and res.coefficients == [1, 1, Fraction(1, 2)]
    res = radialize_series(TaylorTable.from_expr("x", 3))
    assert not res.ok and res.failing_degree == 1
    res = radialize_series(TaylorTable(6))
    assert res.ok and res.coefficients == []


def test_radialize_recovers_coefficients():
    rng = np.random.default_rng(5)
    for _ in range(30):
        a = [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 9))) for _ in range(6)]
        T = TaylorTable.from_radial(a)
        while a and a[-1] == 0:
            a.pop()
        res = radialize_series(T)
        assert res.ok and res.coefficients == a


def test_radialize_rejects_odd_terms():
    rng = np.random.default_rng(6)
    for _ in range(20):
        a = [Fraction(int(rng.integers(1, 9))) for _ in range(5)]
        T = TaylorTable.from_radial(a, 9)
        d = int(rng.choice([1, 3, 5, 7, 9]))
        i = int(rng.integers(0, d + 1))
        T.polys[d] = T.polys[d] + HP.from_terms(d, [(i, d - i, Fraction(1, 3))])
        res = radialize_series(T)
        assert not res.ok and res.failing_degree == d and not res.defect.is_zero()


def test_radialize_rejects_even_non_radial():
    T = TaylorTable.from_expr("1 + x**2 + 2*y**2", 4)
    res = radialize_series(T)
    assert not res.ok and res.failing_degree == 2 and res.defect == (X * Y).scale(2)


def test_table_json_round_trip(tmp_path):
    T = TaylorTable.from_expr("1/3 + x*y - 7*y**3/2", 3)
    text = T.to_json()
    data = json.loads(text)
    assert data["max_degree"] == 3 and [0, 0, "1/3"] in data["terms"]
    assert TaylorTable.from_json(text).polys == T.polys
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"max_degree": 2, "terms": [[0, 0, "1"], [2, 0, "1/2"], [0, 2, "1/2"]]}))
    assert radialize_series(TaylorTable.load(path)).coefficients == [1, Fraction(1, 2)]


def test_table_errors(tmp_path):
    with pytest.raises(InvalidSpec):
        TaylorTable.from_json('{"terms": []}')
    with pytest.raises(InvalidSpec):
        TaylorTable.from_json('{"max_degree": 1, "terms": [[2, 0, "1"]]}')
    with pytest.raises(InvalidSpec):
        TaylorTable.load(tmp_path / "missing.json")


# rigidity


def test_rigidity_examples(rng):
    F = takens_flat()
    pts = rng.uniform(-0.8, 0.8, (50, 2))
    assert rigidity_residual(scalar_from_expr("x**2 + y**2"), F, pts) == 0.0
    assert rigidity_residual(scalar_from_expr("x"), F, pts) == pytest.approx(np.max(np.abs(pts[:, 1])))
    assert rigidity_residual(scalar_from_expr("exp(x**2 + y**2)"), F, pts) <= 1e-9


def test_rigidity_with_flat_parts(rng):
    F = catalog()["takens_flat_x"]
    pts = rng.uniform(-0.5, 0.5, (30, 2))
    assert rigidity_residual(scalar_from_expr("x**2 + y**2"), F, pts) > 0
    assert rigidity_residual(scalar_from_expr("x**2 + y**2"), F, [[0.0, 0.0]]) == 0.0


def test_rigidity_errors():
    with pytest.raises(InvalidSpec):
        rigidity_residual(scalar_from_expr("x"), catalog()["rotation1"], [[0.1, 0.1]])
    c = -np.e
    F = takens_flat(flat_x={"c": c, "poly": [[1, 0, 1.0]]}, flat_y={"c": c, "poly": [[0, 1, 1.0]]})
    # x + Xbar = x (1 - exp(1 - 1/r^2)) vanishes on the unit circle
    assert np.isfinite(rigidity_residual(scalar_from_expr("x*y"), F, [[0.3, 0.2]]))
    with pytest.raises(DegeneratePoint):
        rigidity_residual(scalar_from_expr("x*y"), F, [[0.6, 0.8]])
