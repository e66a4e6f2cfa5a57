"""Planar vector fields on the disk: the constructor catalog, linear parts,
Hamiltonian fields, pushforwards and first-integral residuals.

Every evaluator is vectorized: ``F(x, y)`` accepts scalars or arrays and
returns the pair ``(F1, F2)`` broadcast to the common shape.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InvalidSpec, MissingGradient

Pair = tuple[np.ndarray, np.ndarray]
Evaluator = Callable[[np.ndarray, np.ndarray], Pair]

TWO_PI = 2.0 * math.pi


def _stack_jac(a, b, c, d) -> np.ndarray:
    a, b, c, d = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c, d)))
    return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)


@dataclass(frozen=True)
class FlatPart:
    """``c * exp(-1/r^2) * sum(coeff * x^i * y^j)``, zero at the origin."""

    c: float
    terms: tuple = ((0, 0, 1.0),)

    @classmethod
    def from_spec(cls, spec) -> "FlatPart":
        if isinstance(spec, FlatPart):
            return spec
        if spec is None:
            return cls(0.0, ())
        terms = tuple((int(i), int(j), float(v)) for i, j, v in spec.get("poly", [[0, 0, 1.0]]))
        return cls(float(spec.get("c", 1.0)), terms)

    def to_spec(self) -> dict:
        return {"c": self.c, "poly": [list(t) for t in self.terms]}

    def _bump(self, x, y):
        s = x * x + y * y
        safe = np.where(s > 0, s, 1.0)
        e = np.where(s > 0, np.exp(-1.0 / safe), 0.0)
        # d/dx exp(-1/s) = exp(-1/s) * 2x / s^2
        de = np.where(s > 0, e * 2.0 / (safe * safe), 0.0)
        return e, de

    def _poly(self, x, y):
        p = np.zeros(np.broadcast(x, y).shape)
        px = np.zeros_like(p)
        py = np.zeros_like(p)
        for i, j, v in self.terms:
            p = p + v * x**i * y**j
            if i:
                px = px + v * i * x ** (i - 1) * y**j
            if j:
                py = py + v * j * x**i * y ** (j - 1)
        return p, px, py

    def __call__(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        if self.c == 0.0 or not self.terms:
            return np.zeros(np.broadcast(x, y).shape)
        e, _ = self._bump(x, y)
        p, _, _ = self._poly(x, y)
        return self.c * e * p

    def gradient(self, x, y) -> Pair:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        if self.c == 0.0 or not self.terms:
            return np.zeros(shape), np.zeros(shape)
        e, de = self._bump(x, y)
        p, px, py = self._poly(x, y)
        return self.c * (e * px + de * x * p), self.c * (e * py + de * y * p)


@dataclass
class ScalarField:
    """A function on the disk with optional gradient and Hessian evaluators."""

    func: Callable
    grad: Optional[Callable] = None
    hessian: Optional[Callable] = None
    name: str = "f"

    def __call__(self, x, y):
        return np.asarray(self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)

    def gradient(self, x, y) -> Pair:
        if self.grad is None:
            raise MissingGradient(f"scalar field {self.name!r} has no gradient")
        gx, gy = self.grad(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.broadcast_arrays(np.asarray(gx, dtype=float), np.asarray(gy, dtype=float))


def constant_scalar(c: float) -> ScalarField:
    zero = lambda x, y: np.zeros(np.broadcast(x, y).shape)
    return ScalarField(
        lambda x, y: np.full(np.broadcast(x, y).shape, float(c)),
        lambda x, y: (zero(x, y), zero(x, y)),
        lambda x, y: _stack_jac(zero(x, y), zero(x, y), zero(x, y), zero(x, y)),
        name=f"const({c})",
    )


def as_scalar(alpha) -> ScalarField:
    """Coerce a number, callable or ScalarField into a ScalarField."""
    if isinstance(alpha, ScalarField):
        return alpha
    if callable(alpha):
        return ScalarField(alpha, name=getattr(alpha, "__name__", "alpha"))
    return constant_scalar(float(alpha))


def scalar_from_expr(expr: str) -> ScalarField:
    """ScalarField from a sympy expression in ``x`` and ``y`` with exact derivatives."""
    import sympy as sp

    x, y = sp.symbols("x y", real=True)
    e = sp.sympify(expr, locals={"x": x, "y": y})
    fx, fy = sp.diff(e, x), sp.diff(e, y)
    lam = lambda ex: sp.lambdify((x, y), ex, "numpy")
    f, gx, gy = lam(e), lam(fx), lam(fy)
    hxx, hxy, hyy = lam(sp.diff(fx, x)), lam(sp.diff(fx, y)), lam(sp.diff(fy, y))

    def func(a, b):
        return np.broadcast_to(np.asarray(f(a, b), dtype=float), np.broadcast(a, b).shape)

    def grad(a, b):
        shape = np.broadcast(a, b).shape
        return np.broadcast_to(gx(a, b), shape).astype(float), np.broadcast_to(gy(a, b), shape).astype(float)

    def hess(a, b):
        return _stack_jac(hxx(a, b), hxy(a, b), hxy(a, b), hyy(a, b))

    return ScalarField(func, grad, hess, name=str(expr))


@dataclass
class PlanarField:
    """A vector field F = F1 d/dx + F2 d/dy on the disk.

    ``polar`` is an optional closed form (phi, rho) -> (B_phi, B_rho) of the
    polar lift, valid on all of rho >= 0; ``flat_x``/``flat_y`` hold the flat
    parts of a Takens-flat field.
    """

    func: Evaluator
    jac: Optional[Callable] = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    polar: Optional[Evaluator] = None
    flat_x: Optional[Callable] = None
    flat_y: Optional[Callable] = None
    tangent: bool = field(init=False, default=False)

    def __post_init__(self):
        self.tangent = tangency_residual(self) <= 1e-12 * max(1.0, self._scale())

    def _scale(self) -> float:
        t = np.linspace(0.0, TWO_PI, 64, endpoint=False)
        f1, f2 = self(np.cos(t), np.sin(t))
        return float(np.max(np.hypot(f1, f2)))

    def __call__(self, x, y) -> Pair:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        f1, f2 = self.func(x, y)
        shape = np.broadcast(x, y).shape
        return (np.broadcast_to(np.asarray(f1, dtype=float), shape), np.broadcast_to(np.asarray(f2, dtype=float), shape))

    def jacobian(self, x, y) -> np.ndarray:
        if self.jac is None:
            raise MissingGradient(f"{self.kind} field carries no analytic Jacobian")
        return np.asarray(self.jac(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)

    @property
    def is_takens_flat(self) -> bool:
        return self.flat_x is not None and self.flat_y is not None


def tangency_residual(F: PlanarField, n: int = 64) -> float:
    """max |<F(z), z>| over n points of the unit circle."""
    t = np.linspace(0.0, TWO_PI, n, endpoint=False)
    x, y = np.cos(t), np.sin(t)
    f1, f2 = F(x, y)
    return float(np.max(np.abs(f1 * x + f2 * y)))


# ---------------------------------------------------------------------------
# constructors


def rotation(b: float = 1.0) -> PlanarField:
    """F = -b y d/dx + b x d/dy."""
    b = float(b)
    if b == 0.0 or not math.isfinite(b):
        raise InvalidSpec("rotation needs a nonzero finite rate b")
    return PlanarField(
        lambda x, y: (-b * y, b * x),
        jac=lambda x, y: _stack_jac(0.0 * x, -b + 0.0 * y, b + 0.0 * x, 0.0 * y),
        kind="rotation",
        params={"b": b},
        polar=lambda phi, rho: (np.full(np.broadcast(phi, rho).shape, b), np.zeros(np.broadcast(phi, rho).shape)),
    )


def monomial_hamiltonian(p: int = 1, q: int = 1, b: float = 1.0) -> PlanarField:
    """Hamiltonian field of (b/2)(x^{2p} + y^{2q}): -b q y^{2q-1} d/dx + b p x^{2p-1} d/dy."""
    if int(p) != p or int(q) != q or p < 1 or q < 1:
        raise InvalidSpec("monomial_hamiltonian needs integers p, q >= 1")
    p, q, b = int(p), int(q), float(b)
    if b == 0.0:
        raise InvalidSpec("monomial_hamiltonian needs b != 0")

    def func(x, y):
        return -b * q * y ** (2 * q - 1), b * p * x ** (2 * p - 1)

    def jac(x, y):
        return _stack_jac(0.0 * x, -b * q * (2 * q - 1) * y ** (2 * q - 2), b * p * (2 * p - 1) * x ** (2 * p - 2), 0.0 * y)

    def polar(phi, rho):
        c, s = np.cos(phi), np.sin(phi)
        bphi = b * (q * rho ** (2 * q - 2) * s ** (2 * q) + p * rho ** (2 * p - 2) * c ** (2 * p))
        brho = b * (p * rho ** (2 * p - 1) * c ** (2 * p - 1) * s - q * rho ** (2 * q - 1) * s ** (2 * q - 1) * c)
        return bphi, brho

    return PlanarField(func, jac, "monomial_hamiltonian", {"p": p, "q": q, "b": b}, polar=polar)


def _check_forms(forms) -> list[np.ndarray]:
    mats = []
    for M in forms:
        M = np.asarray(M, dtype=float)
        if M.shape != (2, 2) or not np.all(np.isfinite(M)):
            raise InvalidSpec("each quadratic form is a finite 2x2 matrix")
        if abs(M[0, 1] - M[1, 0]) > 1e-12 * max(1.0, np.abs(M).max()):
            raise InvalidSpec("quadratic form matrices must be symmetric")
        # leading minors
        if not (M[0, 0] > 0 and np.linalg.det(M) > 0):
            raise InvalidSpec(f"quadratic form {M.tolist()} is not positive definite")
        mats.append(M)
    if not mats:
        raise InvalidSpec("quadratic_product needs at least one form")
    probes = [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([1.0, 1.0])]
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            ratios = [float(v @ mats[i] @ v) / float(v @ mats[j] @ v) for v in probes]
            if max(ratios) - min(ratios) <= 1e-12 * max(ratios):
                raise InvalidSpec(f"forms {i} and {j} are proportional")
    return mats


def quadratic_product(forms: Sequence) -> PlanarField:
    """Hamiltonian field of f = Q_1 ... Q_n with Q_i(z) = z^T M_i z positive definite."""
    mats = _check_forms(forms)
    n = len(mats)

    def parts(x, y):
        qs, gs = [], []
        for M in mats:
            qs.append(M[0, 0] * x * x + 2 * M[0, 1] * x * y + M[1, 1] * y * y)
            gs.append((2 * (M[0, 0] * x + M[0, 1] * y), 2 * (M[0, 1] * x + M[1, 1] * y)))
        return qs, gs

    def prod_except(qs, skip):
        out = 1.0
        for k, qv in enumerate(qs):
            if k not in skip:
                out = out * qv
        return out

    def grad_f(x, y):
        qs, gs = parts(x, y)
        fx = sum(prod_except(qs, {i}) * gs[i][0] for i in range(n))
        fy = sum(prod_except(qs, {i}) * gs[i][1] for i in range(n))
        return fx, fy

    def func(x, y):
        fx, fy = grad_f(x, y)
        return -fy, fx

    def jac(x, y):
        qs, gs = parts(x, y)
        hxx = hxy = hyy = 0.0
        for i in range(n):
            Mi = mats[i]
            rest = prod_except(qs, {i})
            hxx = hxx + 2 * Mi[0, 0] * rest
            hxy = hxy + 2 * Mi[0, 1] * rest
            hyy = hyy + 2 * Mi[1, 1] * rest
            for j in range(n):
                if j == i:
                    continue
                rest2 = prod_except(qs, {i, j})
                hxx = hxx + gs[i][0] * gs[j][0] * rest2
                hxy = hxy + gs[i][0] * gs[j][1] * rest2
                hyy = hyy + gs[i][1] * gs[j][1] * rest2
        return _stack_jac(-hxy, -hyy, hxx, hxy)

    degree = 2 * n - 1

    def polar(phi, rho):
        c, s = np.cos(phi), np.sin(phi)
        f1, f2 = func(c, s)
        return rho ** (degree - 1) * (-s * f1 + c * f2), rho**degree * (c * f1 + s * f2)

    def f(x, y):
        return prod_except(parts(x, y)[0], set())

    F = PlanarField(func, jac, "quadratic_product", {"forms": [M.tolist() for M in mats]}, polar=polar)
    F.params["first_integral"] = ScalarField(f, grad_f, name="Q1...Qn")
    return F


def _beta(coeffs) -> tuple[Callable, Callable, list]:
    if callable(coeffs):
        raise InvalidSpec("beta must be given as polynomial coefficients in t = x^2 + y^2")
    coeffs = [float(c) for c in (coeffs if coeffs is not None else [1.0])]
    if not coeffs or coeffs[0] == 0.0:
        raise InvalidSpec("beta(0) must be nonzero")
    dcoeffs = npoly.polyder(coeffs) if len(coeffs) > 1 else [0.0]
    return (lambda t: npoly.polyval(t, coeffs)), (lambda t: npoly.polyval(t, dcoeffs)), coeffs


def _flat_evaluator(spec):
    if spec is None or isinstance(spec, dict) or isinstance(spec, FlatPart):
        return FlatPart.from_spec(spec)
    if callable(spec):
        return spec
    raise InvalidSpec(f"cannot interpret flat part {spec!r}")


def takens_flat(beta=None, flat_x=None, flat_y=None) -> PlanarField:
    """beta(x^2+y^2) * (-(y + Ybar) d/dx + (x + Xbar) d/dy) with Xbar, Ybar flat at O.

    ``beta`` is a coefficient list in t = x^2 + y^2 (default [1]); flat parts are
    FlatPart specs ``{"c": c, "poly": [[i, j, coeff], ...]}`` or plain evaluators.
    """
    bfun, dbfun, bco = _beta(beta)
    X = _flat_evaluator(flat_x)
    Y = _flat_evaluator(flat_y)

    def func(x, y):
        bt = bfun(x * x + y * y)
        return -bt * (y + Y(x, y)), bt * (x + X(x, y))

    jac = None
    if hasattr(X, "gradient") and hasattr(Y, "gradient"):

        def jac(x, y):
            t = x * x + y * y
            bt, dbt = bfun(t), dbfun(t)
            g1, g2 = -(y + Y(x, y)), x + X(x, y)
            yx, yy = Y.gradient(x, y)
            xx, xy = X.gradient(x, y)
            return _stack_jac(
                bt * (-yx) + g1 * dbt * 2 * x,
                bt * (-1.0 - yy) + g1 * dbt * 2 * y,
                bt * (1.0 + xx) + g2 * dbt * 2 * x,
                bt * xy + g2 * dbt * 2 * y,
            )

    def polar(phi, rho):
        c, s = np.cos(phi), np.sin(phi)
        x, y = rho * c, rho * s
        bt = bfun(rho * rho)
        xb, yb = X(x, y), Y(x, y)
        safe = np.where(rho > 0, rho, 1.0)
        ang = np.where(rho > 0, (c * xb + s * yb) / safe, 0.0)
        return bt * (1.0 + ang), bt * (s * xb - c * yb)

    params = {"beta": bco}
    if isinstance(X, FlatPart):
        params["flat_x"] = X.to_spec()
    if isinstance(Y, FlatPart):
        params["flat_y"] = Y.to_spec()
    return PlanarField(func, jac, "takens_flat", params, polar=polar, flat_x=X, flat_y=Y)


def takens_nonflat(delta: int = -1, k: int = 1, alpha: float = 0.0, beta=None) -> PlanarField:
    """beta * [2 pi (-y d/dx + x d/dy) + (delta r^{2k} + alpha r^{4k})(x d/dx + y d/dy)]."""
    if delta not in (-1, 1):
        raise InvalidSpec("delta must be +1 or -1")
    if int(k) != k or k < 1:
        raise InvalidSpec("k must be a positive integer")
    k, alpha = int(k), float(alpha)
    bfun, dbfun, bco = _beta(beta)

    def g(s):
        return delta * s**k + alpha * s ** (2 * k)

    def dg(s):
        return delta * k * s ** (k - 1) + 2 * k * alpha * s ** (2 * k - 1)

    def func(x, y):
        s = x * x + y * y
        bt = bfun(s)
        return bt * (-TWO_PI * y + g(s) * x), bt * (TWO_PI * x + g(s) * y)

    def jac(x, y):
        s = x * x + y * y
        bt, dbt = bfun(s), dbfun(s)
        g1, g2 = -TWO_PI * y + g(s) * x, TWO_PI * x + g(s) * y
        return _stack_jac(
            bt * (g(s) + 2 * x * x * dg(s)) + g1 * dbt * 2 * x,
            bt * (-TWO_PI + 2 * x * y * dg(s)) + g1 * dbt * 2 * y,
            bt * (TWO_PI + 2 * x * y * dg(s)) + g2 * dbt * 2 * x,
            bt * (g(s) + 2 * y * y * dg(s)) + g2 * dbt * 2 * y,
        )

    def polar(phi, rho):
        bt = bfun(rho * rho) + 0.0 * phi
        return bt * TWO_PI, bt * rho ** (2 * k + 1) * (delta + alpha * rho ** (2 * k))

    return PlanarField(func, jac, "takens_nonflat", {"delta": delta, "k": k, "alpha": alpha, "beta": bco}, polar=polar)


def custom(F1, F2=None, jac=None) -> PlanarField:
    """Field from sympy expressions (strings) or from a vectorized callable ``F1(x, y) -> (F1, F2)``."""
    if isinstance(F1, str):
        import sympy as sp

        x, y = sp.symbols("x y", real=True)
        e1 = sp.sympify(F1, locals={"x": x, "y": y})
        e2 = sp.sympify(F2, locals={"x": x, "y": y})
        f1, f2 = sp.lambdify((x, y), e1, "numpy"), sp.lambdify((x, y), e2, "numpy")
        d = [sp.lambdify((x, y), sp.diff(e, v), "numpy") for e in (e1, e2) for v in (x, y)]

        def func(a, b):
            return f1(a, b) + 0.0 * a + 0.0 * b, f2(a, b) + 0.0 * a + 0.0 * b

        def jac(a, b):
            z = 0.0 * a + 0.0 * b
            return _stack_jac(*(di(a, b) + z for di in d))

        return PlanarField(func, jac, "custom", {"F1": str(F1), "F2": str(F2)})
    if not callable(F1):
        raise InvalidSpec("custom fields need expressions or a callable")
    return PlanarField(F1, jac, "custom", {})


_CONSTRUCTORS = {
    "rotation": lambda s: rotation(s.get("b", 1.0)),
    "monomial_hamiltonian": lambda s: monomial_hamiltonian(s.get("p", 1), s.get("q", 1), s.get("b", 1.0)),
    "quadratic_product": lambda s: quadratic_product(s["forms"]),
    "takens_flat": lambda s: takens_flat(s.get("beta"), s.get("flat_x"), s.get("flat_y")),
    "takens_nonflat": lambda s: takens_nonflat(s.get("delta", -1), s.get("k", 1), s.get("alpha", 0.0), s.get("beta")),
    "custom": lambda s: custom(s["F1"], s.get("F2"), s.get("jac")),
}
_ALIASES = {"monomial": "monomial_hamiltonian"}


def make_field(spec) -> PlanarField:
    """Build a field from a FieldSpec mapping ``{"type": ..., parameters...}``."""
    if isinstance(spec, PlanarField):
        return spec
    if not isinstance(spec, dict) or "type" not in spec:
        raise InvalidSpec("a field spec is a mapping with a 'type' key")
    kind = _ALIASES.get(spec["type"], spec["type"])
    if kind not in _CONSTRUCTORS:
        raise InvalidSpec(f"unknown field type {spec['type']!r}")
    try:
        return _CONSTRUCTORS[kind](spec)
    except InvalidSpec:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidSpec(f"bad {kind} spec: {exc}") from exc


def load_field_spec(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidSpec(f"cannot read field spec {path}: {exc}") from exc


def catalog() -> dict[str, PlanarField]:
    """Named fields used throughout the tests and the CLI demos."""
    return {
        "rotation1": rotation(1.0),
        "rotation2": rotation(2.0),
        "monomial11": monomial_hamiltonian(1, 1, 1.0),
        "monomial12": monomial_hamiltonian(1, 2, 1.0),
        "monomial22": monomial_hamiltonian(2, 2, 1.0),
        "quadratic_product": quadratic_product([[[1, 0], [0, 1]], [[1, 0], [0, 2]]]),
        "takens_flat_radial": takens_flat(flat_x={"c": 0.5, "poly": [[1, 0, 1.0]]}, flat_y={"c": 0.5, "poly": [[0, 1, 1.0]]}),
        "takens_flat_x": takens_flat(flat_x={"c": 0.5, "poly": [[1, 0, 1.0]]}, flat_y={"c": 0.5, "poly": [[1, 0, 1.0]]}),
        "takens_nonflat": takens_nonflat(-1, 1, 0.0),
    }


# ---------------------------------------------------------------------------
# operations


def linearize(F: PlanarField, h: float = 1e-4, numeric: bool = False) -> np.ndarray:
    """Linear part of F at the origin.

    Uses the analytic Jacobian when present (unless ``numeric``), otherwise
    central differences with one Richardson level (steps h and h/2).
    """
    if F.jac is not None and not numeric:
        return np.array(F.jacobian(0.0, 0.0), dtype=float)

    def central(step):
        cols = []
        for ex, ey in ((step, 0.0), (0.0, step)):
            fp = np.array(F(ex, ey))
            fm = np.array(F(-ex, -ey))
            cols.append((fp - fm) / (2.0 * step))
        return np.column_stack(cols)

    d1, d2 = central(h), central(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def hamiltonian_of(f: ScalarField) -> PlanarField:
    """F = -f_y d/dx + f_x d/dy."""
    if f.grad is None:
        raise MissingGradient(f"scalar field {f.name!r} has no gradient")

    def func(x, y):
        fx, fy = f.gradient(x, y)
        return -fy, fx

    jac = None
    if f.hessian is not None:

        def jac(x, y):
            Hs = np.asarray(f.hessian(x, y), dtype=float)
            return _stack_jac(-Hs[..., 1, 0], -Hs[..., 1, 1], Hs[..., 0, 0], Hs[..., 0, 1])

    F = PlanarField(func, jac, "hamiltonian", {"f": f.name})
    F.params["first_integral"] = f
    return F


def pushforward(F: PlanarField, g: Evaluator, g_inv: Evaluator, Jg: Callable) -> PlanarField:
    """(g_* F)(z) = Jg(g^-1 z) F(g^-1 z). ``Jg`` returns arrays of shape (..., 2, 2)."""

    def func(x, y):
        u, v = g_inv(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        f1, f2 = F(u, v)
        J = np.asarray(Jg(np.asarray(u, dtype=float), np.asarray(v, dtype=float)), dtype=float)
        return J[..., 0, 0] * f1 + J[..., 0, 1] * f2, J[..., 1, 0] * f1 + J[..., 1, 1] * f2

    return PlanarField(func, None, "pushforward", {"base": F.kind})


def linear_map(H) -> tuple[Evaluator, Evaluator, Callable]:
    """(g, g_inv, Jg) for the linear map z -> H z."""
    H = np.asarray(H, dtype=float)
    Hi = np.linalg.inv(H)

    def apply(M):
        return lambda x, y: (M[0, 0] * x + M[0, 1] * y, M[1, 0] * x + M[1, 1] * y)

    return apply(H), apply(Hi), lambda x, y: np.broadcast_to(H, np.broadcast(x, y).shape + (2, 2))


def first_integral_residual(F: PlanarField, f: ScalarField, samples) -> float:
    """max over samples of |F1 f_x + F2 f_y|."""
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    f1, f2 = F(pts[:, 0], pts[:, 1])
    fx, fy = f.gradient(pts[:, 0], pts[:, 1])
    return float(np.max(np.abs(f1 * fx + f2 * fy)))
