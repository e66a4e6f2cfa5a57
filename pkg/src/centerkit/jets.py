"""Exact arithmetic on bivariate homogeneous polynomials and Taylor tables.

A homogeneous polynomial p of degree n satisfies x p_y = y p_x exactly when
it is a multiple of (x^2 + y^2)^(n/2). These routines check that relation
and decide whether a Taylor table is the jet of a function of x^2 + y^2.
Everything is rational; no floating point is used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DegeneratePoint, InvalidSpec, NotDivisible
from .linalg import rank


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass(frozen=True)
class HomogeneousPoly:
    """sum_i coeffs[i] x^i y^(degree - i) with exact rational coefficients."""

    degree: int
    coeffs: tuple

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be non-negative")
        if len(self.coeffs) != self.degree + 1:
            raise ValueError("a degree-n polynomial carries n + 1 coefficients")
        object.__setattr__(self, "coeffs", tuple(_frac(c) for c in self.coeffs))

    # construction

    @classmethod
    def zero(cls, degree: int) -> "HomogeneousPoly":
        return cls(degree, (0,) * (degree + 1))

    @classmethod
    def from_terms(cls, degree: int, terms: Iterable) -> "HomogeneousPoly":
        """From (i, j, coeff) triples meaning coeff * x^i * y^j; i + j must equal ``degree``."""
        c = [Fraction(0)] * (degree + 1)
        for i, j, v in terms:
            if i < 0 or j < 0 or i + j != degree:
                raise ValueError(f"term x^{i} y^{j} does not have degree {degree}")
            c[i] += _frac(v)
        return cls(degree, tuple(c))

    @classmethod
    def r2(cls) -> "HomogeneousPoly":
        return cls(2, (1, 0, 1))

    @classmethod
    def x(cls) -> "HomogeneousPoly":
        return cls(1, (0, 1))

    @classmethod
    def y(cls) -> "HomogeneousPoly":
        return cls(1, (1, 0))

    # inspection

    def terms(self) -> dict:
        """{(i, j): coeff} for the nonzero coefficients of x^i y^j."""
        return {(i, self.degree - i): c for i, c in enumerate(self.coeffs) if c != 0}

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def __call__(self, x, y):
        n = self.degree
        return sum(float(c) * np.asarray(x, dtype=float) ** i * np.asarray(y, dtype=float) ** (n - i) for i, c in enumerate(self.coeffs))

    def evaluate_exact(self, x, y) -> Fraction:
        x, y = _frac(x), _frac(y)
        return sum((c * x**i * y ** (self.degree - i) for i, c in enumerate(self.coeffs)), Fraction(0))

    def __str__(self) -> str:
        parts = []
        for (i, j), c in sorted(self.terms().items(), reverse=True):
            mono = "*".join(s for s in (f"x^{i}" if i > 1 else ("x" if i == 1 else ""), f"y^{j}" if j > 1 else ("y" if j == 1 else "")) if s)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts) if parts else "0"

    # arithmetic

    def __add__(self, other: "HomogeneousPoly") -> "HomogeneousPoly":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if other.degree != self.degree:
            raise ValueError("cannot add homogeneous polynomials of different degrees")
        return HomogeneousPoly(self.degree, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "HomogeneousPoly":
        return HomogeneousPoly(self.degree, tuple(-c for c in self.coeffs))

    def __sub__(self, other: "HomogeneousPoly") -> "HomogeneousPoly":
        return self + (-other)

    def scale(self, a) -> "HomogeneousPoly":
        a = _frac(a)
        return HomogeneousPoly(self.degree, tuple(a * c for c in self.coeffs))

    def __mul__(self, other) -> "HomogeneousPoly":
        if not isinstance(other, HomogeneousPoly):
            return self.scale(other)
        n = self.degree + other.degree
        c = [Fraction(0)] * (n + 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for k, b in enumerate(other.coeffs):
                c[i + k] += a * b
        return HomogeneousPoly(n, tuple(c))

    __rmul__ = scale

    def __pow__(self, k: int) -> "HomogeneousPoly":
        out = HomogeneousPoly(0, (1,))
        for _ in range(int(k)):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomogeneousPoly):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return self.degree == other.degree and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.degree, self.coeffs))

    def diff_x(self) -> "HomogeneousPoly":
        if self.degree == 0:
            return HomogeneousPoly.zero(0)
        return HomogeneousPoly(self.degree - 1, tuple(i * self.coeffs[i] for i in range(1, self.degree + 1)))

    def diff_y(self) -> "HomogeneousPoly":
        n = self.degree
        if n == 0:
            return HomogeneousPoly.zero(0)
        return HomogeneousPoly(n - 1, tuple((n - i) * self.coeffs[i] for i in range(n)))

    def euler_defect(self) -> "HomogeneousPoly":
        """n p - (x p_x + y p_y); identically zero for homogeneous p."""
        if self.degree == 0:
            return HomogeneousPoly.zero(0)
        return self.scale(self.degree) - (HomogeneousPoly.x() * self.diff_x() + HomogeneousPoly.y() * self.diff_y())


def radial_relation_defect(p: HomogeneousPoly) -> HomogeneousPoly:
    """x p_y - y p_x, a polynomial of the same degree as p."""
    if p.degree == 0:
        return HomogeneousPoly.zero(0)
    return HomogeneousPoly.x() * p.diff_y() - HomogeneousPoly.y() * p.diff_x()


def divide_by_r2(p: HomogeneousPoly) -> HomogeneousPoly:
    """q with p = (x^2 + y^2) q, obtained as q = p_x / (n x)."""
    n = p.degree
    if n < 2 and not (n == 0 and p.is_zero()):
        raise NotDivisible(f"degree {n} polynomial {p} is not a multiple of x^2 + y^2")
    if p.is_zero():
        return HomogeneousPoly.zero(max(n - 2, 0))
    if n % 2 or not radial_relation_defect(p).is_zero():
        raise NotDivisible(f"{p} does not satisfy x p_y = y p_x")
    px = p.diff_x()
    if px.coeffs[0] != 0:
        raise NotDivisible(f"p_x of {p} is not divisible by x")
    q = HomogeneousPoly(n - 2, tuple(c / n for c in px.coeffs[1:]))
    if HomogeneousPoly.r2() * q != p:
        raise NotDivisible(f"{p} is not (x^2 + y^2) times {q}")
    return q


def radial_form(p: HomogeneousPoly) -> Optional[tuple[Fraction, int]]:
    """(a, k) with p = a (x^2 + y^2)^k, (0, 0) for p = 0, None when p is not radial."""
    if p.is_zero():
        return Fraction(0), 0
    q, k = p, 0
    while q.degree > 0:
        try:
            q = divide_by_r2(q)
        except NotDivisible:
            return None
        k += 1
    return q.coeffs[0], k


def defect_matrix(n: int) -> list:
    """Exact matrix of p -> x p_y - y p_x on the basis x^i y^(n-i), i = 0..n."""
    cols = []
    for i in range(n + 1):
        e = HomogeneousPoly(n, tuple(1 if k == i else 0 for k in range(n + 1)))
        cols.append(radial_relation_defect(e).coeffs if n > 0 else (Fraction(0),))
    return [[cols[j][i] for j in range(n + 1)] for i in range(n + 1)]


def kernel_dimension(n: int) -> int:
    """Dimension of the kernel of the defect map in degree n, by exact elimination."""
    if n == 0:
        return 1
    return n + 1 - rank(defect_matrix(n))


@dataclass
class TaylorTable:
    """Homogeneous parts p_0, ..., p_N of a jet at the origin."""

    max_degree: int
    polys: list = field(default_factory=list)

    def __post_init__(self):
        if not self.polys:
            self.polys = [HomogeneousPoly.zero(d) for d in range(self.max_degree + 1)]
        if len(self.polys) != self.max_degree + 1:
            raise ValueError("a table holds one polynomial per degree 0..max_degree")
        for d, p in enumerate(self.polys):
            if p.degree != d:
                raise ValueError(f"entry {d} has degree {p.degree}")

    @classmethod
    def from_terms(cls, max_degree: int, terms: Iterable) -> "TaylorTable":
        buckets: dict = {d: [] for d in range(max_degree + 1)}
        for i, j, v in terms:
            i, j = int(i), int(j)
            if i < 0 or j < 0 or i + j > max_degree:
                raise ValueError(f"term x^{i} y^{j} exceeds max_degree {max_degree}")
            buckets[i + j].append((i, j, _frac(v)))
        return cls(max_degree, [HomogeneousPoly.from_terms(d, buckets[d]) for d in range(max_degree + 1)])

    @classmethod
    def from_json(cls, text: str) -> "TaylorTable":
        try:
            data = json.loads(text)
            return cls.from_terms(int(data["max_degree"]), data.get("terms", []))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise InvalidSpec(f"bad Taylor table: {exc}") from exc

    @classmethod
    def load(cls, path) -> "TaylorTable":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidSpec(f"cannot read Taylor table {path}: {exc}") from exc
        return cls.from_json(text)

    @classmethod
    def from_radial(cls, a: Sequence, max_degree: Optional[int] = None) -> "TaylorTable":
        """Jet of g(x^2 + y^2) for g(t) = sum a_i t^i."""
        n = 2 * (len(a) - 1) if max_degree is None else int(max_degree)
        n = max(n, 0)
        polys = [HomogeneousPoly.zero(d) for d in range(n + 1)]
        for i, ai in enumerate(a):
            if 2 * i <= n:
                polys[2 * i] = HomogeneousPoly.r2() ** i * _frac(ai)
        return cls(n, polys)

    @classmethod
    def from_expr(cls, expr: str, max_degree: int) -> "TaylorTable":
        """Truncated jet of a polynomial expression in x and y with rational coefficients."""
        import sympy as sp

        x, y = sp.symbols("x y")
        poly = sp.Poly(sp.expand(sp.sympify(expr, locals={"x": x, "y": y})), x, y)
        terms = []
        for (i, j), c in poly.terms():
            if i + j <= max_degree:
                c = sp.Rational(c)
                terms.append((i, j, Fraction(int(c.p), int(c.q))))
        return cls.from_terms(max_degree, terms)

    def to_json(self) -> str:
        terms = [[i, j, str(c)] for p in self.polys for (i, j), c in sorted(p.terms().items())]
        return json.dumps({"max_degree": self.max_degree, "terms": terms})


@dataclass
class RadializeResult:
    ok: bool
    coefficients: list
    failing_degree: Optional[int] = None
    defect: Optional[HomogeneousPoly] = None


def radialize_series(T: TaylorTable) -> RadializeResult:
    """a_i with p_{2i} = a_i (x^2 + y^2)^i and vanishing odd parts, or the first failing degree."""
    a = []
    for d, p in enumerate(T.polys):
        form = None if d % 2 else radial_form(p)
        if d % 2 and p.is_zero():
            continue
        if form is None:
            return RadializeResult(False, a, d, radial_relation_defect(p))
        a.append(form[0])
    while a and a[-1] == 0:
        a.pop()
    return RadializeResult(True, a)


def rigidity_residual(f, F, samples) -> float:
    """max |f_y (x + Xbar) - f_x (y + Ybar)| over samples for a Takens-flat field F.

    Zero residual means grad f = nu (x + Xbar, y + Ybar) for a scalar nu.
    """
    if not F.is_takens_flat:
        raise InvalidSpec("rigidity_residual needs a field carrying flat parts Xbar, Ybar")
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    u = x + F.flat_x(x, y)
    v = y + F.flat_y(x, y)
    at_origin = (x == 0) & (y == 0)
    degenerate = (np.abs(u) < 1e-12) & (np.abs(v) < 1e-12) & ~at_origin
    if np.any(degenerate):
        i = int(np.argmax(degenerate))
        raise DegeneratePoint(f"x + Xbar and y + Ybar both vanish at {pts[i].tolist()}")
    fx, fy = f.gradient(x, y)
    res = np.where(at_origin, 0.0, np.abs(fy * u - fx * v))
    return float(np.max(res)) if res.size else 0.0
