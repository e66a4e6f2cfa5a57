"""Shift functions of orbit-preserving maps.

A map h preserving the orbits of a PTC field F is a shift map: h(z) =
Psi(z, sigma(z)). The pipeline here pins the linear part of h to a flow time
omega, then turns the continuous argument Gamma of h(z) / z into a time of
flight along each orbit. For fields
given in normalized polar form the same function is available as an explicit
quadrature of 1 / (1 + Phi_bar).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import (
    JetNotScalar,
    NotInFamily,
    NotOrbitPreserving,
    NotPTC,
    OrientationReversing,
    SingularIntegrand,
    StepFailure,
    VanishingImage,
)
from .fields import PlanarField, ScalarField, as_scalar, linearize
from .flow import DEFAULT_CONFIG, IntegratorConfig, PeriodProfile, flow_many, period_profile
from .linalg import jacobi_classify, normal_form_basis
from .polar import LiftedMap, PolarField, check_origin_fixed, lift_field, map_jacobian_at_origin

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# h(z) = z gamma(z)


@dataclass
class GammaDecomposition:
    """h(z) = z * gamma(z) with Gamma a continuous argument of gamma, Gamma(O) = 0."""

    gamma: Callable
    Gamma: Callable
    tau: float


def _as_complex_map(h: Callable):
    def hc(z: np.ndarray) -> np.ndarray:
        u, v = h(z.real, z.imag)
        return np.asarray(u, dtype=float) + 1j * np.asarray(v, dtype=float)

    return hc


def gamma_decompose(h: Callable, tau: float, samples: int = 16, max_samples: int = 4096) -> GammaDecomposition:
    """Split h(z) = z gamma(z) for a map with h(O) = O and 1-jet tau * id.

    Gamma is unwrapped along the segment from O to z, starting with 16 points
    and doubling until consecutive argument jumps stay below pi / 4.
    """
    tau = float(tau)
    if not tau > 0:
        raise JetNotScalar("tau must be positive")
    check_origin_fixed(h)
    J = map_jacobian_at_origin(h)
    if np.max(np.abs(J - tau * np.eye(2))) > 1e-6 * max(1.0, tau):
        raise JetNotScalar(f"1-jet of h at O is {J.round(9).tolist()}, not {tau} * id")
    hc = _as_complex_map(h)

    def gamma(x, y):
        z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
        nz = z != 0
        safe = np.where(nz, z, 1.0)
        g = np.where(nz, hc(safe) / safe, tau + 0j)
        if np.any(nz & (np.abs(g) == 0.0)):
            raise VanishingImage("h sends a nonzero point to the origin")
        return g

    def Gamma(x, y):
        z = np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)
        shape = z.shape
        zf = z.ravel()
        n = samples
        while True:
            s = np.arange(1, n + 1) / n
            seg = zf[:, None] * s[None, :]
            g = gamma(seg.real, seg.imag)
            scale = np.max(np.abs(g), axis=1, keepdims=True)
            if np.any(np.abs(g) <= 1e-14 * scale):
                raise VanishingImage("gamma vanishes on a radial segment")
            ang = np.angle(g)
            steps = np.diff(np.concatenate([np.zeros((zf.size, 1)), ang], axis=1), axis=1)
            wrapped = (steps + math.pi) % TWO_PI - math.pi
            if np.all(np.abs(wrapped) < math.pi / 4) or n >= max_samples:
                break
            n *= 2
        out = np.sum(wrapped, axis=1)
        return out.reshape(shape)

    return GammaDecomposition(gamma, Gamma, tau)


# ---------------------------------------------------------------------------
# omega


def omega_extract(h: Callable, F: PlanarField, cfg: IntegratorConfig = DEFAULT_CONFIG, tol: float = 1e-6):
    """(omega, h1) with J(h, O) = J(Psi_omega, O) and h1 = Psi_{-omega} o h.

    omega is read off on the principal branch, so the identity gives 0.
    """
    A = linearize(F)
    J = map_jacobian_at_origin(h)
    S, N = normal_form_basis(A)
    Hn = np.linalg.solve(S, J @ S)
    jc = jacobi_classify(Hn, N, tol)
    if jc.family in ("reflection", "mixed+-", "mixed-+"):
        raise OrientationReversing(f"1-jet of h lies in the {jc.family} family")
    if not jc.in_flow_family:
        raise NotInFamily(f"1-jet of h lies in the {jc.family} family, which no flow map reaches")
    omega = float(jc.omega)
    if np.max(np.abs(expm(omega * A) - J)) > 10 * tol * max(1.0, float(np.abs(J).max())):
        raise NotInFamily("1-jet of h differs from the linear flow at the extracted time")
    if omega == 0.0:
        return 0.0, h

    def h1(x, y):
        u, v = h(x, y)
        u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
        pts = np.column_stack([u.ravel(), v.ravel()])
        out = flow_many(F, pts, -omega, cfg)
        return out[:, 0].reshape(u.shape), out[:, 1].reshape(u.shape)

    return omega, h1


# ---------------------------------------------------------------------------
# quadrature

# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1] (nonnegative half).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1:7:2] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[9:15:2] = _WG[2::-1]


def _gk15(f: Callable, a: float, b: float):
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    vals = np.asarray(f(c + h * KRONROD_NODES), dtype=float)
    k = h * float(vals @ KRONROD_WEIGHTS)
    g = h * float(vals @ GAUSS_WEIGHTS)
    return k, abs(k - g)


def gauss_kronrod(f: Callable, a: float, b: float, tol: float = 1e-10, max_intervals: int = 2000) -> float:
    """Adaptive G7/K15 quadrature of a vectorized f over [a, b] to absolute ``tol``.

    The interval with the largest error estimate is bisected until the summed
    estimate is below ``tol``.
    """
    if a == b:
        return 0.0
    val, err = _gk15(f, a, b)
    pieces = [(err, a, b, val)]
    total_err = err
    while total_err > tol and len(pieces) < max_intervals:
        i = max(range(len(pieces)), key=lambda j: pieces[j][0])
        e, lo, hi, v = pieces.pop(i)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        pieces += [(e1, lo, mid, v1), (e2, mid, hi, v2)]
        total_err = sum(p[0] for p in pieces)
    return float(sum(p[3] for p in pieces))


def _guarded(Phi_bar: Callable, rho: float, numerator: Callable):
    def integrand(s):
        d = 1.0 + np.asarray(Phi_bar(s, rho), dtype=float) * np.ones_like(s)
        if np.any(d <= 0):
            raise SingularIntegrand(f"1 + Phi_bar <= 0 at rho={rho}")
        return numerator(s, d) / d

    return integrand


def period_integral(Phi_bar: Callable, rho: float, phi: float = 0.0, tol: float = 1e-10) -> float:
    """Integral of 1 / (1 + Phi_bar(s, rho)) over s in [phi, phi + 2 pi]."""
    f = _guarded(Phi_bar, rho, lambda s, d: np.ones_like(d))
    return gauss_kronrod(f, phi, phi + TWO_PI, tol)


def sigma_from_lift(Phi_bar: Callable, lifted: LiftedMap, grid, tol: float = 1e-10):
    """sigma~ and its flat part xi_phi on a list of (phi, rho) points.

    sigma~ is the integral of 1 / (1 + Phi_bar(s, rho)) from phi to the lifted
    angle Phi~(phi, rho); xi_phi = -integral of Phi_bar / (1 + Phi_bar) over the
    same segment, so sigma~ = (Phi~ - phi) + xi_phi.
    """
    pts = np.asarray(grid, dtype=float).reshape(-1, 2)
    sig = np.empty(len(pts))
    xi = np.empty(len(pts))
    for i, (phi, rho) in enumerate(pts):
        end = float(lifted.phi_map(phi, rho))
        one = _guarded(Phi_bar, rho, lambda s, d: np.ones_like(d))
        flat = _guarded(Phi_bar, rho, lambda s, d: 1.0 - d)
        sig[i] = gauss_kronrod(one, phi, end, tol)
        xi[i] = gauss_kronrod(flat, phi, end, tol)
    return sig, xi


# ---------------------------------------------------------------------------
# recovery


@dataclass
class ShiftGrid:
    """Recovered shift function on sample points with per-point flow residuals."""

    points: np.ndarray
    sigma: np.ndarray
    residuals: np.ndarray
    omega: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "sigma", "residual"])
        for (x, y), s, r in zip(self.points, self.sigma, self.residuals):
            w.writerow([f"{x:.17g}", f"{y:.17g}", f"{s:.17g}", f"{r:.17g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "points": np.asarray(self.points).tolist(),
                "sigma": np.asarray(self.sigma).tolist(),
                "residuals": np.asarray(self.residuals).tolist(),
                "residual": self.residual,
                "omega": self.omega,
                "notes": self.notes,
            },
            indent=2,
        )


DEFAULT_PROFILE_RADII = tuple(0.5 * 2.0 ** -np.arange(7))


def _time_of_flight(B: PolarField, phi0: np.ndarray, rho0: np.ndarray, advance: np.ndarray, cfg: IntegratorConfig):
    """Time and end radius for orbits whose lifted angle advances by ``advance``.

    The angle is the independent variable: phi = phi0 + u * advance, u in [0, 1].
    """
    m = len(phi0)
    times = np.zeros(m)
    rho_end = rho0.copy()
    move = advance != 0.0
    if not np.any(move):
        return times, rho_end
    p0, r0, d = phi0[move], rho0[move], advance[move]
    k = len(p0)
    orient = np.sign(B(p0, r0)[0])

    def rhs(u, state):
        rho = state[k:]
        a, b = B(p0 + u * d, rho)
        if np.any(a * orient <= 0):
            raise StepFailure("angular velocity changes sign along an orbit")
        return np.concatenate([d / a, d * b / a])

    sol = solve_ivp(rhs, (0.0, 1.0), np.concatenate([np.zeros(k), r0]), **cfg.solver_kwargs())
    if sol.status == -1:
        raise StepFailure(sol.message)
    times[move] = sol.y[:k, -1]
    rho_end[move] = sol.y[k:, -1]
    return times, rho_end


def recover_shift(
    F: PlanarField,
    h: Callable,
    samples,
    cfg: IntegratorConfig = DEFAULT_CONFIG,
    first_integral: Optional[ScalarField] = None,
    profile: Optional[PeriodProfile] = None,
    orbit_tol: float = 1e-5,
) -> ShiftGrid:
    """sigma with Psi(z, sigma(z)) = h(z) on every sample, on the canonical branch.

    The branch is the one whose value at O is the omega of ``omega_extract``;
    identity-like maps therefore get sigma = 0 rather than a period multiple.
    """
    if profile is None:
        profile = period_profile(F, 0.0, DEFAULT_PROFILE_RADII, cfg)
    if profile.verdict != "PTC":
        raise NotPTC(f"period profile verdict is {profile.verdict}")
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    try:
        check_origin_fixed(h, tol=1e-9)
    except Exception as exc:
        raise NotOrbitPreserving(str(exc)) from exc
    hx, hy = h(pts[:, 0], pts[:, 1])
    hz = np.column_stack([np.asarray(hx, dtype=float), np.asarray(hy, dtype=float)])
    fi = first_integral if first_integral is not None else F.params.get("first_integral")
    if fi is not None:
        drift = np.abs(fi(hz[:, 0], hz[:, 1]) - fi(pts[:, 0], pts[:, 1]))
        if np.max(drift) > 1e-7:
            raise NotOrbitPreserving(f"first integral changes by {np.max(drift):.3g} under h")
    try:
        omega, h1 = omega_extract(h, F, cfg)
    except (NotInFamily, OrientationReversing) as exc:
        raise NotOrbitPreserving(f"linear part of h is not a flow map: {exc}") from exc
    dec = gamma_decompose(h1, 1.0)
    advance = dec.Gamma(pts[:, 0], pts[:, 1])
    rho0 = np.hypot(pts[:, 0], pts[:, 1])
    nz = rho0 > 0
    phi0 = np.arctan2(pts[:, 1], pts[:, 0])
    B = lift_field(F)
    sigma = np.full(len(pts), omega)
    t1, rho_end = _time_of_flight(B, phi0[nz], rho0[nz], advance[nz], cfg)
    sigma[nz] += t1
    h1x, h1y = h1(pts[nz, 0], pts[nz, 1])
    target = np.hypot(h1x, h1y)
    mismatch = np.abs(rho_end - target)
    if mismatch.size and np.max(mismatch) > orbit_tol:
        raise NotOrbitPreserving(f"h moves a point off its orbit by {np.max(mismatch):.3g}")
    landed = flow_many(F, pts, sigma, cfg)
    residuals = np.hypot(*(landed - hz).T)
    return ShiftGrid(pts, sigma, residuals, omega)


def gamma_set_membership(F: PlanarField, alpha, samples, margin: float = 1e-12, step: float = 1e-6) -> bool:
    """True iff the derivative of alpha along F exceeds -1 at every sample."""
    a = as_scalar(alpha)
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    f1, f2 = F(x, y)
    if a.grad is not None:
        ax, ay = a.gradient(x, y)
        lie = f1 * ax + f2 * ay
    else:
        lie = (a(x + step * f1, y + step * f2) - a(x - step * f1, y - step * f2)) / (2 * step)
    return bool(np.all(lie > -1.0 + margin))
