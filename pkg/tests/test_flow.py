import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from centerkit.errors import Escape, NoReturn
from centerkit.fields import catalog, custom, make_field, rotation, scalar_from_expr, takens_flat
from centerkit.flow import (
    IntegratorConfig,
    classify_profile,
    flow,
    flow_many,
    kernel_residual,
    period,
    period_profile,
    shift_apply,
    shift_map,
)
from conftest import disk_samples

CAT = catalog()
HALVINGS = 0.5 * 2.0 ** -np.arange(7)


def test_quarter_turn():
    z = flow(rotation(1), (1.0, 0.0), math.pi / 2)
    assert np.allclose(z, (0.0, 1.0), atol=1e-8)


def test_zero_time_is_exact():
    z = np.array([0.123456789, -0.3])
    for F in CAT.values():
        assert np.array_equal(flow(F, z, 0.0), z)


def test_rotation_rate_two():
    assert np.allclose(flow(rotation(2), (0.5, 0.0), math.pi), (0.5, 0.0), atol=1e-8)


def test_closed_form_linear_flow(rng):
    F = rotation(1.5)
    pts = disk_samples(rng, 20)
    t = rng.uniform(-5, 5, 20)
    out = flow_many(F, pts, t)
    c, s = np.cos(1.5 * t), np.sin(1.5 * t)
    ref = np.column_stack([c * pts[:, 0] - s * pts[:, 1], s * pts[:, 0] + c * pts[:, 1]])
    assert np.max(np.abs(out - ref)) <= 1e-9


def test_escape_for_non_tangent_field():
    F = custom("x", "y")
    with pytest.raises(Escape):
        flow(F, (0.5, 0.0), 2.0)
    z = flow(F, (0.5, 0.0), 2.0, IntegratorConfig(escape_radius=None))
    assert z[0] == pytest.approx(0.5 * math.exp(2.0), rel=1e-9)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0)
    with pytest.raises(ValueError):
        IntegratorConfig(max_time=-1)


@pytest.mark.parametrize("name", ["rotation1", "monomial11", "monomial12", "takens_flat_radial", "takens_flat_x", "quadratic_product"])
def test_group_law(name, rng):
    F = CAT[name]
    cfg = IntegratorConfig(escape_radius=None)
    pts = disk_samples(rng, 6, 0.4)
    for s, t in ((3.0, -7.5), (-10.0, 10.0), (6.2, 2.9)):
        a = flow_many(F, flow_many(F, pts, s, cfg), t, cfg)
        b = flow_many(F, pts, s + t, cfg)
        assert np.max(np.abs(a - b)) <= 1e-7


@pytest.mark.parametrize("name", ["monomial11", "monomial12", "monomial22", "quadratic_product"])
def test_first_integral_preserved(name, rng):
    F = CAT[name]
    if "first_integral" in F.params:
        f = F.params["first_integral"]
    else:
        p, q, b = F.params["p"], F.params["q"], F.params["b"]
        f = scalar_from_expr(f"{b}*(x**{2 * p} + y**{2 * q})/2")
    pts = disk_samples(rng, 10, 0.6)
    out = flow_many(F, pts, 10.0, IntegratorConfig(escape_radius=None))
    assert np.max(np.abs(f(*out.T) - f(*pts.T))) <= 1e-7


# periods


def test_period_rotation():
    assert period(rotation(1), (0.3, 0.0)) == pytest.approx(2 * math.pi, abs=1e-8)


def test_period_rate_two():
    assert period(rotation(2), (0.5, 0.1)) == pytest.approx(math.pi, abs=1e-8)


def test_spiral_has_no_return():
    with pytest.raises(NoReturn):
        period(CAT["takens_nonflat"], (0.5, 0.0))


def test_origin_has_no_period():
    with pytest.raises(NoReturn):
        period(rotation(1), (0.0, 0.0))


def test_period_budget_exhausted():
    with pytest.raises(NoReturn):
        period(CAT["monomial22"], (0.01, 0.0), IntegratorConfig(max_time=100.0))


def test_negative_rotation_period():
    assert period(rotation(-3), (0.2, 0.2)) == pytest.approx(2 * math.pi / 3, abs=1e-9)


def test_period_of_monomial11_and_elliptic_field():
    assert period(CAT["monomial11"], (0.7, 0.0)) == pytest.approx(2 * math.pi, abs=1e-9)
    # Hamiltonian of x^2/2 + 2y^2: linear flow with frequency 2
    F = custom("-4*y", "x")
    assert period(F, (0.3, 0.0)) == pytest.approx(math.pi, abs=1e-9)


@pytest.mark.parametrize("name", ["monomial12", "monomial22", "quadratic_product", "takens_flat_radial"])
def test_period_constant_along_orbits(name, rng):
    F = CAT[name]
    cfg = IntegratorConfig(escape_radius=None, max_time=1e5)
    z = np.array([0.3, 0.1])
    base = period(F, z, cfg)
    for t in rng.uniform(0.0, base, 4):
        assert period(F, flow(F, z, t, cfg), cfg) == pytest.approx(base, abs=1e-6)


def test_period_matches_time_of_return():
    F = CAT["monomial12"]
    z = np.array([0.4, 0.0])
    T = period(F, z)
    assert np.allclose(flow(F, z, T, IntegratorConfig(escape_radius=None)), z, atol=1e-9)


def test_quartic_period_scaling():
    # f = (x^4 + y^4)/2 is homogeneous of degree 4, so theta(r) = theta(1) / r^2
    F = CAT["monomial22"]
    cfg = IntegratorConfig(escape_radius=None)
    t1 = period(F, (0.8, 0.0), cfg)
    t2 = period(F, (0.4, 0.0), cfg)
    assert t2 == pytest.approx(4 * t1, rel=1e-9)


# profiles


def test_profile_rotation_ptc():
    prof = period_profile(rotation(1), 0.0, HALVINGS)
    assert prof.verdict == "PTC"
    assert prof.limit == pytest.approx(2 * math.pi, abs=1e-9)
    assert np.allclose(prof.theta, 2 * math.pi, atol=1e-9)


def test_profile_monomial22_divergent():
    prof = period_profile(CAT["monomial22"], 0.0, 0.64 * 2.0 ** -np.arange(5))
    assert prof.verdict == "Divergent"
    th = np.array(prof.theta)
    assert np.all(np.diff(th) > 0) and th[-1] > 2 * th[0]


def test_profile_unperturbed_takens_flat_is_ptc():
    prof = period_profile(takens_flat(), 0.3, HALVINGS)
    assert prof.verdict == "PTC" and prof.limit == pytest.approx(2 * math.pi, abs=1e-9)


def test_profile_flat_perturbation_close_to_limit():
    prof = period_profile(CAT["takens_flat_radial"], 0.0, 0.2 * 2.0 ** -np.arange(5))
    assert prof.verdict == "PTC"
    for r, th in zip(prof.radii, prof.theta):
        assert abs(th - prof.limit) <= r**4


def test_profile_spiral_inconclusive():
    prof = period_profile(CAT["takens_nonflat"], 0.0, HALVINGS[:4])
    assert prof.verdict == "Inconclusive" and not any(prof.converged)
    assert all(math.isnan(t) for t in prof.theta)


def test_profile_radii_validated():
    with pytest.raises(ValueError):
        period_profile(rotation(1), 0.0, [0.1, 0.2])
    with pytest.raises(ValueError):
        period_profile(rotation(1), 0.0, [1.5, 0.2])


def test_profile_serialization():
    prof = period_profile(rotation(2), 0.0, [0.5, 0.25, 0.125])
    lines = prof.to_csv().strip().splitlines()
    assert lines[0] == "radius,theta,converged"
    r, th, ok = lines[1].split(",")
    assert float(r) == 0.5 and float(th) == prof.theta[0] and ok == "1"
    d = json.loads(prof.to_json())
    assert d["verdict"] == prof.verdict and len(d["theta"]) == 3


def test_classify_profile_rules():
    r = 0.5 * 2.0 ** -np.arange(6)
    assert classify_profile(r, [1.0, 2.0, 4.0, 8.0, 16.0, 32.0])[0] == "Divergent"
    assert classify_profile(r, [1.0, 1.05, 1.1, 1.15, 1.2, 1.25])[0] == "Inconclusive"
    verdict, limit, _ = classify_profile(r, 3.0 + r**2)
    assert verdict == "Inconclusive"  # steps larger than 1e-4 relative
    verdict, limit, _ = classify_profile(r, 3.0 + 1e-3 * r**2)
    assert verdict == "PTC" and limit == pytest.approx(3.0, abs=1e-12)
    assert classify_profile(r[:2], [1.0, 1.0])[0] == "Inconclusive"


@settings(max_examples=25, deadline=None)
@given(st.floats(0.25, 4.0), st.floats(0.0, 2 * math.pi))
def test_linear_period_property(b, ray):
    prof = period_profile(rotation(b), ray, [0.6, 0.3, 0.15])
    assert prof.verdict == "PTC"
    assert np.allclose(prof.theta, 2 * math.pi / b, atol=1e-8)


# shift maps


def test_shift_by_zero_is_identity():
    z = np.array([0.3, -0.2])
    assert np.array_equal(shift_apply(rotation(1), 0.0, z), z)


def test_shift_half_turn():
    z = np.array([0.3, -0.2])
    assert np.allclose(shift_apply(rotation(1), math.pi, z), -z, atol=1e-8)


def test_shift_by_period_returns(rng):
    pts = disk_samples(rng, 10)
    assert np.allclose(shift_apply(rotation(1), 2 * math.pi, pts), pts, atol=1e-7)


def test_shift_map_evaluator_matches_pointwise(rng):
    F = CAT["monomial12"]
    alpha = scalar_from_expr("0.3 + x*y")
    h = shift_map(F, alpha)
    pts = disk_samples(rng, 8, 0.5)
    u, v = h(pts[:, 0], pts[:, 1])
    for (x, y), a, b in zip(pts, u, v):
        assert np.allclose(flow(F, (x, y), 0.3 + x * y), (a, b), atol=1e-10)


def test_kernel_residual_examples(rng):
    pts = disk_samples(rng, 20, 0.9, 0.05)
    assert kernel_residual(rotation(1), 2 * math.pi, 1, pts) <= 1e-7
    assert kernel_residual(rotation(1), 2 * math.pi, 0, pts) == 0.0
    assert kernel_residual(rotation(2), math.pi, -2, pts) <= 1e-7
    assert kernel_residual(rotation(1), 1.0, 1, pts) > 0.01


def test_kernel_with_pointwise_periods(rng):
    F = CAT["takens_flat_radial"]
    pts = disk_samples(rng, 10, 0.5, 0.05)
    theta = np.array([period(F, p) for p in pts])
    assert np.ptp(theta) > 1e-4  # the period really varies
    for n in (-2, -1, 1, 2):
        assert kernel_residual(F, theta, n, pts) <= 1e-6
