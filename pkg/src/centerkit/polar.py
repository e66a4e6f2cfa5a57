"""Polar blow-up of the disk: P(phi, rho) = (rho cos phi, rho sin phi).

Vector fields and origin-preserving maps lift through P to the half-plane
H = {rho >= 0}, where they are 2 pi periodic (fields) or 2 pi equivariant
(maps) in phi. Functions flat on the boundary rho = 0 descend back to the disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import JetNotScalar, NotFlat, NotOriginPreserving, NotZInvariant, OriginHasNoAngle
from .fields import PlanarField, ScalarField

TWO_PI = 2.0 * math.pi
RHO_EPS = 1e-8

PROBE_PHI = TWO_PI * np.arange(32) / 32.0
PROBE_RHO = 0.5 * 2.0 ** -np.arange(8)


def probe_grid() -> tuple[np.ndarray, np.ndarray]:
    """The fixed 32 x 8 (phi, rho) grid used for every grid check."""
    return np.meshgrid(PROBE_PHI, PROBE_RHO, indexing="ij")


def polar_point(phi, rho):
    phi = np.asarray(phi, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be non-negative")
    return rho * np.cos(phi), rho * np.sin(phi)


def unpolar(z, branch_hint: float = 0.0):
    """(phi, rho) with phi the representative of arg z nearest ``branch_hint``."""
    x, y = (float(v) for v in z)
    if x == 0.0 and y == 0.0:
        raise OriginHasNoAngle("the origin has no polar angle")
    phi = math.atan2(y, x)
    phi += TWO_PI * round((branch_hint - phi) / TWO_PI)
    return phi, math.hypot(x, y)


@dataclass
class PolarField:
    """B = B_phi d/dphi + B_rho d/drho on the half-plane."""

    phi_component: Callable
    rho_component: Callable
    period_2pi: bool = True
    source: str = ""

    def __call__(self, phi, rho):
        phi = np.asarray(phi, dtype=float)
        rho = np.asarray(rho, dtype=float)
        shape = np.broadcast(phi, rho).shape
        a = np.broadcast_to(np.asarray(self.phi_component(phi, rho), dtype=float), shape)
        b = np.broadcast_to(np.asarray(self.rho_component(phi, rho), dtype=float), shape)
        return a, b

    def z_invariance_defect(self) -> float:
        phi, rho = probe_grid()
        a0, b0 = self(phi, rho)
        a1, b1 = self(phi + TWO_PI, rho)
        return float(max(np.max(np.abs(a1 - a0)), np.max(np.abs(b1 - b0))))

    def boundary_defect(self) -> float:
        """max |B_rho(phi, 0)| over the probe angles."""
        _, b = self(PROBE_PHI, np.zeros_like(PROBE_PHI))
        return float(np.max(np.abs(b)))


def _generic_lift(F: PlanarField):
    def both(phi, rho):
        c, s = np.cos(phi), np.sin(phi)
        f1, f2 = F(rho * c, rho * s)
        return (-s * f1 + c * f2), (c * f1 + s * f2)

    def components(phi, rho):
        phi, rho = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(rho, dtype=float))
        at0 = rho <= 0.0
        r = np.where(at0, RHO_EPS, rho)
        num, brho = both(phi, r)
        return num / r, brho

    return components


def lift_field(F: PlanarField) -> PolarField:
    """Polar expression of F.

    B_phi = (-sin phi F1 + cos phi F2) / rho and B_rho = cos phi F1 + sin phi F2,
    using the constructor's closed form when one exists. Without it the
    boundary rho = 0 is evaluated at rho = 1e-8.
    """
    if F.polar is not None:
        closed = F.polar
        return PolarField(lambda p, r: closed(p, r)[0], lambda p, r: closed(p, r)[1], True, F.kind)
    comp = _generic_lift(F)
    return PolarField(lambda p, r: comp(p, r)[0], lambda p, r: comp(p, r)[1], True, F.kind)


def lift_field_generic(F: PlanarField) -> PolarField:
    """The lift computed from F's Cartesian components only, ignoring closed forms."""
    comp = _generic_lift(F)
    return PolarField(lambda p, r: comp(p, r)[0], lambda p, r: comp(p, r)[1], True, F.kind)


# ---------------------------------------------------------------------------
# maps


@dataclass
class LiftedMap:
    """(phi, rho) -> (phi_map, rho_map), a lift of a disk map through P."""

    phi_map: Callable
    rho_map: Callable
    equivariant: bool = True
    tau: float = 1.0

    def __call__(self, phi, rho):
        return np.asarray(self.phi_map(phi, rho), dtype=float), np.asarray(self.rho_map(phi, rho), dtype=float)

    def equivariance_defect(self) -> float:
        phi, rho = probe_grid()
        p0, r0 = self(phi, rho)
        p1, r1 = self(phi + TWO_PI, rho)
        return float(max(np.max(np.abs(p1 - p0 - TWO_PI)), np.max(np.abs(r1 - r0))))

    def boundary_defect(self) -> float:
        p, r = self(PROBE_PHI, np.zeros_like(PROBE_PHI))
        return float(max(np.max(np.abs(p - PROBE_PHI)), np.max(np.abs(r))))


def map_jacobian_at_origin(h: Callable, step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of h at O with one Richardson level."""

    def central(s):
        cols = []
        for ex, ey in ((s, 0.0), (0.0, s)):
            hp = np.array(h(np.float64(ex), np.float64(ey)), dtype=float)
            hm = np.array(h(np.float64(-ex), np.float64(-ey)), dtype=float)
            cols.append((hp - hm) / (2.0 * s))
        return np.column_stack(cols)

    return (4.0 * central(step / 2.0) - central(step)) / 3.0


def check_origin_fixed(h: Callable, tol: float = 1e-12) -> None:
    u, v = h(np.float64(0.0), np.float64(0.0))
    if math.hypot(float(u), float(v)) > tol:
        raise NotOriginPreserving(f"h(O) = ({float(u)}, {float(v)}) is not the origin")


def scalar_jet(h: Callable, tau: Optional[float] = None, tol: float = 1e-6) -> float:
    """tau > 0 with J(h, O) = tau * id, estimated by finite differences when not given."""
    J = map_jacobian_at_origin(h)
    t = float(np.trace(J) / 2.0) if tau is None else float(tau)
    if not t > 0 or np.max(np.abs(J - t * np.eye(2))) > tol * max(1.0, abs(t)):
        raise JetNotScalar(f"1-jet of h at O is {J.round(9).tolist()}, not a positive multiple of the identity")
    return t


def lift_map(h: Callable, tau: Optional[float] = None) -> LiftedMap:
    """The Z-equivariant lift of h fixing the boundary of H.

    rho_map = |h(P(phi, rho))| and phi_map = phi + Gamma(P(phi, rho)), where
    Gamma is the continuous argument of h(z)/z vanishing at O.
    """
    from .shift import gamma_decompose

    check_origin_fixed(h)
    t = scalar_jet(h, tau)
    dec = gamma_decompose(h, t)

    def phi_map(phi, rho):
        x, y = polar_point(phi, rho)
        return np.asarray(phi, dtype=float) + dec.Gamma(x, y)

    def rho_map(phi, rho):
        x, y = polar_point(phi, rho)
        u, v = h(x, y)
        return np.hypot(u, v)

    return LiftedMap(phi_map, rho_map, True, t)


def _hadamard_parts(h: Callable, jac: Callable, tau: float, x, y, nodes: int = 24):
    """alpha_i, beta_i with h = tau z + x (alpha_1, beta_1) + y (alpha_2, beta_2)."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    Jx = np.asarray(jac(t * x, y + 0.0 * t), dtype=float)
    Jy = np.asarray(jac(0.0 * t + 0.0 * x, t * y), dtype=float)
    a1 = np.sum(w * Jx[..., 0, 0], -1) - tau
    b1 = np.sum(w * Jx[..., 1, 0], -1)
    a2 = np.sum(w * Jy[..., 0, 1], -1)
    b2 = np.sum(w * Jy[..., 1, 1], -1) - tau
    return a1, a2, b1, b2


def lift_map_chart(h: Callable, phi0: float, jac: Callable, tau: float = 1.0) -> LiftedMap:
    """Local lift of h near (phi0, 0) built from the arctangent chart formula.

    Valid on a strip around phi0 where the lifted angle stays within pi/2 of
    phi0; used to cross-check ``lift_map`` on chart overlaps.
    """

    def parts(phi, rho):
        phi = np.asarray(phi, dtype=float)
        rho = np.asarray(rho, dtype=float)
        c, s = np.cos(phi), np.sin(phi)
        a1, a2, b1, b2 = _hadamard_parts(h, jac, tau, rho * c, rho * s)
        A = c * a1 + s * a2
        B = c * b1 + s * b2
        A1 = A * math.cos(phi0) + B * math.sin(phi0)
        B1 = B * math.cos(phi0) - A * math.sin(phi0)
        num = tau * np.sin(phi - phi0) + B1
        den = tau * np.cos(phi - phi0) + A1
        return phi, rho, num, den

    def phi_map(phi, rho):
        _, _, num, den = parts(phi, rho)
        return phi0 + np.arctan(num / den)

    def rho_map(phi, rho):
        phi, rho, num, den = parts(phi, rho)
        return rho * den / np.cos(np.arctan(num / den))

    return LiftedMap(phi_map, rho_map, False, tau)


# ---------------------------------------------------------------------------
# flat functions


def flatness_order(g, orders: Sequence[int], radii: Sequence[float] = tuple(PROBE_RHO), atol: float = 0.0) -> dict:
    """Per order k: whether sup_{|z|=r} |g| <= C r^k on every radius.

    C is fitted at the largest radius; 16 angular samples per circle.
    ``atol`` is an absolute floor for functions that carry rounding noise.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) >= 0) or radii[0] > 0.5 or radii[-1] <= 0:
        raise ValueError("radii must be decreasing in (0, 0.5]")
    ang = TWO_PI * np.arange(16) / 16.0
    sups = []
    for r in radii:
        vals = np.asarray(g(r * np.cos(ang), r * np.sin(ang)), dtype=float)
        sups.append(float(np.max(np.abs(vals))))
    sups = np.array(sups)
    out = {}
    for k in orders:
        C = sups[0] / radii[0] ** k
        bound = C * radii**k * (1.0 + 1e-9) + atol
        out[int(k)] = bool(np.all(sups[1:] <= bound[1:]))
    return out


def descend_flat(a_lifted: Callable, flatness_checked: bool = False, orders: Sequence[int] = (1, 2, 3, 4)) -> ScalarField:
    """The function a on the disk with a(P(phi, rho)) = a_lifted(phi, rho)."""
    phi, rho = probe_grid()
    v0 = np.asarray(a_lifted(phi, rho), dtype=float)
    v1 = np.asarray(a_lifted(phi + TWO_PI, rho), dtype=float)
    defect = float(np.max(np.abs(v1 - v0)))
    if defect > 1e-9:
        raise NotZInvariant(f"lifted function changes by {defect:.3g} under phi -> phi + 2 pi")
    at_origin = float(np.asarray(a_lifted(0.0, 0.0), dtype=float))

    def a(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        val = np.asarray(a_lifted(np.arctan2(y, x), r), dtype=float)
        return np.where(r > 0, val, at_origin)

    g = ScalarField(a, name="descended")
    if flatness_checked:
        res = flatness_order(g, orders)
        if not all(res.values()):
            raise NotFlat(f"descended function fails flatness orders {[k for k, ok in res.items() if not ok]}")
    return g
