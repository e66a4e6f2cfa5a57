"""Flow integration, periods via the polar lift, period profiles and shift maps.

The integrator is scipy's DOP853 (an embedded 8(5,3) Runge-Kutta pair with
dense output). Periods are measured as the time the lifted angle needs to
advance by one full turn, which is unambiguous near a topological center.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import Escape, NoReturn, StepFailure
from .fields import PlanarField, ScalarField, as_scalar
from .polar import PolarField, lift_field

TWO_PI = 2.0 * math.pi


@dataclass
class IntegratorConfig:
    """Tolerances and budgets shared by every integration.

    ``escape_radius`` bounds the disk orbits may visit (None disables the
    check); ``closure_tol`` is the relative radial mismatch allowed when an
    orbit returns to its starting ray.
    """

    rel_tol: float = 1e-11
    abs_tol: float = 1e-12
    max_step: float = math.inf
    max_time: float = 1e4
    escape_radius: Optional[float] = 1.0
    closure_tol: float = 1e-6
    method: str = "DOP853"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("integrator tolerances must be positive")
        if not self.max_time > 0:
            raise ValueError("max_time must be positive")
        if self.max_step <= 0:
            raise ValueError("max_step must be positive")

    def solver_kwargs(self) -> dict:
        return {"method": self.method, "rtol": self.rel_tol, "atol": self.abs_tol, "max_step": self.max_step}


DEFAULT_CONFIG = IntegratorConfig()


def _escape_event(radius: float, n_points: int):
    limit = radius * (1.0 + 1e-6)

    def event(_, u):
        zz = u.reshape(n_points, 2)
        return limit - float(np.max(np.hypot(zz[:, 0], zz[:, 1])))

    event.terminal = True
    event.direction = -1
    return event


def flow_many(F: PlanarField, points, times, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Psi(z_i, t_i) for every row z_i of ``points``.

    All points are advanced together in a rescaled clock s in [0, 1] with
    dz_i/ds = t_i F(z_i); the error control covers every component.
    """
    pts = np.array(points, dtype=float).reshape(-1, 2)
    ts = np.broadcast_to(np.asarray(times, dtype=float), (pts.shape[0],)).copy()
    out = pts.copy()
    move = ts != 0.0
    if not np.any(move):
        return out
    z0 = pts[move]
    tm = ts[move]
    m = z0.shape[0]
    if cfg.escape_radius is not None and np.max(np.hypot(z0[:, 0], z0[:, 1])) > cfg.escape_radius * (1.0 + 1e-6):
        raise Escape("starting point lies outside the escape radius")

    def rhs(_, u):
        zz = u.reshape(m, 2)
        f1, f2 = F(zz[:, 0], zz[:, 1])
        return np.column_stack([tm * f1, tm * f2]).ravel()

    kwargs = cfg.solver_kwargs()
    kwargs["max_step"] = cfg.max_step / max(float(np.max(np.abs(tm))), 1e-300) if math.isfinite(cfg.max_step) else math.inf
    events = [_escape_event(cfg.escape_radius, m)] if cfg.escape_radius is not None else None
    sol = solve_ivp(rhs, (0.0, 1.0), z0.ravel(), events=events, **kwargs)
    if sol.status == -1:
        raise StepFailure(sol.message)
    if sol.status == 1:
        raise Escape(f"trajectory left the disk of radius {cfg.escape_radius}")
    out[move] = sol.y[:, -1].reshape(m, 2)
    return out


def flow(F: PlanarField, z, t: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Psi(z, t)."""
    z = np.asarray(z, dtype=float).reshape(2)
    if t == 0.0:
        return z.copy()
    return flow_many(F, z[None, :], [t], cfg)[0]


def flow_polar(B: PolarField, w, t: float, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Flow of a field on the half-plane starting at w = (phi, rho)."""
    w = np.asarray(w, dtype=float).reshape(2)
    if t == 0.0:
        return w.copy()

    def rhs(_, u):
        a, b = B(u[0], u[1])
        return [float(a), float(b)]

    sol = solve_ivp(rhs, (0.0, t), w, **cfg.solver_kwargs())
    if sol.status == -1:
        raise StepFailure(sol.message)
    return sol.y[:, -1]


# ---------------------------------------------------------------------------
# periods


def period(F: PlanarField, z, cfg: IntegratorConfig = DEFAULT_CONFIG, lifted: Optional[PolarField] = None) -> float:
    """Smallest T > 0 with Psi(z, T) = z, measured on the polar lift.

    The lifted angle is integrated until it has advanced by 2 pi, the crossing
    time is located on the dense output and polished with Newton steps using
    dphi/dt = B_phi. NoReturn is raised when the angle stalls, the time budget
    runs out, or the orbit comes back to a different radius.
    """
    x, y = (float(v) for v in np.asarray(z, dtype=float).reshape(2))
    rho0 = math.hypot(x, y)
    if rho0 == 0.0:
        raise NoReturn("the origin is a singular point")
    phi0 = math.atan2(y, x)
    B = lifted if lifted is not None else lift_field(F)
    a0, _ = B(phi0, rho0)
    if float(a0) == 0.0:
        raise NoReturn("the angular velocity vanishes at the starting point")
    sign = 1.0 if float(a0) > 0 else -1.0
    target = phi0 + sign * TWO_PI

    def rhs(_, u):
        a, b = B(u[0], u[1])
        return [float(a), float(b)]

    def turned(_, u):
        return sign * (u[0] - target)

    turned.terminal = True
    turned.direction = 1

    def stalled(_, u):
        return sign * float(B(u[0], u[1])[0])

    stalled.terminal = True
    stalled.direction = -1

    def collapsed(_, u):
        return u[1]

    collapsed.terminal = True
    collapsed.direction = -1

    sol = solve_ivp(rhs, (0.0, cfg.max_time), [phi0, rho0], events=[turned, stalled, collapsed], dense_output=True, **cfg.solver_kwargs())
    if sol.status == -1:
        raise StepFailure(sol.message)
    if sol.status == 0:
        raise NoReturn(f"no full turn within max_time={cfg.max_time}")
    if len(sol.t_events[0]) == 0:
        raise NoReturn("angular advance stalled before completing a turn")
    T = float(sol.t_events[0][0])
    for _ in range(3):
        phi, rho = sol.sol(T)
        rate = float(B(phi, rho)[0])
        step = (phi - target) / rate
        T -= step
        if abs(step) <= 1e-16 * max(1.0, T):
            break
    phi, rho = sol.sol(T)
    if abs(rho - rho0) > cfg.closure_tol * rho0:
        raise NoReturn(f"orbit returns at radius {rho:.12g} instead of {rho0:.12g}; it is not closed")
    return T


@dataclass
class PeriodProfile:
    """Sampled periods along a ray and the resulting verdict.

    ``theta`` holds NaN where the orbit did not return; ``verdict`` is one of
    PTC, Divergent or Inconclusive, with ``limit`` the extrapolated period at
    the origin for PTC profiles.
    """

    ray_angle: float
    radii: list
    theta: list
    converged: list
    verdict: str = "Inconclusive"
    limit: Optional[float] = None
    notes: list = field(default_factory=list)

    @property
    def valid(self) -> tuple[np.ndarray, np.ndarray]:
        r = np.asarray(self.radii, dtype=float)
        th = np.asarray(self.theta, dtype=float)
        ok = np.asarray(self.converged, dtype=bool)
        return r[ok], th[ok]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["radius", "theta", "converged"])
        for r, th, ok in zip(self.radii, self.theta, self.converged):
            w.writerow([f"{r:.17g}", f"{th:.17g}", int(bool(ok))])
        return buf.getvalue()

    def to_json(self) -> str:
        d = asdict(self)
        d["theta"] = [None if not math.isfinite(v) else v for v in self.theta]
        return json.dumps(d, indent=2)


PTC_RELATIVE_STEP = 1e-4
DIVERGENCE_MARGIN = 1.1


def _richardson_limit(r: np.ndarray, th: np.ndarray) -> float:
    """Extrapolate theta to r = 0 from the two smallest radii assuming an r^2 leading term."""
    r1, r2 = r[-2], r[-1]
    t1, t2 = th[-2], th[-1]
    return float((t2 * r1**2 - t1 * r2**2) / (r1**2 - r2**2))


def classify_profile(radii, theta) -> tuple[str, Optional[float], list]:
    """Verdict for periods sampled at decreasing radii (NaN entries are skipped)."""
    r = np.asarray(radii, dtype=float)
    th = np.asarray(theta, dtype=float)
    ok = np.isfinite(th)
    r, th = r[ok], th[ok]
    notes = []
    if th.size < 3:
        notes.append("fewer than 3 returning orbits")
        return "Inconclusive", None, notes
    tail = min(5, th.size)
    last = th[-tail:]
    steps = np.abs(np.diff(th[-min(4, th.size):]))
    if np.all(steps < PTC_RELATIVE_STEP * th[-min(4, th.size) + 1:]):
        L = _richardson_limit(r, th)
        if math.isfinite(L) and L > 0:
            dev = np.abs(last - L)
            floor = 1e-9 * L
            if np.all(dev[1:] <= dev[:-1] + floor):
                return "PTC", L, notes
            notes.append("successive periods settle but do not approach the extrapolated limit")
    if th.size >= 4:
        ratios = th[-3:] / th[-4:-1]
        increasing = np.all(np.diff(last) > 0)
        if np.all(ratios >= DIVERGENCE_MARGIN) and increasing and th[-1] > 2.0 * th[0]:
            return "Divergent", None, notes
    notes.append("neither Cauchy nor growing by the divergence margin")
    return "Inconclusive", None, notes


def period_profile(F: PlanarField, ray_angle: float, radii: Sequence[float], cfg: IntegratorConfig = DEFAULT_CONFIG) -> PeriodProfile:
    """Periods along the ray at ``ray_angle`` and the PTC / Divergent verdict."""
    r = np.asarray(radii, dtype=float)
    if r.ndim != 1 or r.size == 0 or np.any(r <= 0) or np.any(r > 1.0 + 1e-12) or np.any(np.diff(r) >= 0):
        raise ValueError("radii must be a strictly decreasing list in (0, 1]")
    B = lift_field(F)
    theta, conv, notes = [], [], []
    c, s = math.cos(ray_angle), math.sin(ray_angle)
    for ri in r:
        try:
            theta.append(period(F, (ri * c, ri * s), cfg, lifted=B))
            conv.append(True)
        except NoReturn as exc:
            theta.append(math.nan)
            conv.append(False)
            notes.append(f"r={ri:.6g}: {exc}")
    verdict, limit, vnotes = classify_profile(r, theta)
    return PeriodProfile(float(ray_angle), r.tolist(), theta, conv, verdict, limit, notes + vnotes)


# ---------------------------------------------------------------------------
# shift maps


def shift_apply(F: PlanarField, alpha, z, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Sh(alpha)(z) = Psi(z, alpha(z)); ``z`` may be one point or an (N, 2) array."""
    a = as_scalar(alpha)
    pts = np.asarray(z, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 2)
    out = flow_many(F, pts, a(pts[:, 0], pts[:, 1]), cfg)
    return out[0] if single else out


def shift_map(F: PlanarField, alpha, cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Sh(alpha) as a vectorized map evaluator (x, y) -> (u, v)."""
    a = as_scalar(alpha)

    def h(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        pts = np.column_stack([x.ravel(), y.ravel()])
        out = flow_many(F, pts, a(pts[:, 0], pts[:, 1]), cfg)
        return out[:, 0].reshape(x.shape), out[:, 1].reshape(x.shape)

    return h


def kernel_residual(F: PlanarField, mu, n: int, samples, cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """max over samples of |Psi(z, n mu(z)) - z|."""
    if n == 0:
        return 0.0
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    if isinstance(mu, (ScalarField,)) or callable(mu) or np.isscalar(mu):
        m = as_scalar(mu)(pts[:, 0], pts[:, 1])
    else:
        m = np.asarray(mu, dtype=float)
    out = flow_many(F, pts, n * m, cfg)
    return float(np.max(np.hypot(*(out - pts).T)))
