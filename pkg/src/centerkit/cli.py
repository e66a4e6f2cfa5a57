"""Command line entry point: ``centerkit {classify,period,lift,shift,jets}``.

Exit codes: 0 success or PTC, 1 input error, 2 negative verdict
(Divergent, not orbit preserving, non-radial jet), 3 inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import CenterKitError, InvalidSpec, NotOrbitPreserving, NotPTC
from .fields import PlanarField, as_scalar, linearize, load_field_spec, make_field, scalar_from_expr
from .flow import IntegratorConfig, period, period_profile, shift_map
from .jets import TaylorTable, radialize_series
from .linalg import spectrum
from .polar import descend_flat, flatness_order, lift_field
from .shift import period_integral, recover_shift

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE, EXIT_INCONCLUSIVE = 0, 1, 2, 3
DEFAULT_RADII = tuple(0.5 * 2.0 ** -np.arange(7))


def report_tolerance() -> float:
    raw = os.environ.get("CENTERKIT_TOL")
    if raw is None:
        return 1e-9
    try:
        tol = float(raw)
    except ValueError as exc:
        raise InvalidSpec(f"CENTERKIT_TOL={raw!r} is not a number") from exc
    if not tol > 0:
        raise InvalidSpec("CENTERKIT_TOL must be positive")
    return tol


@dataclass
class RunReport:
    command: str
    inputs: dict
    outputs: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, default=_jsonable))


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    return str(v)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _parse_radii(text: Optional[str]) -> np.ndarray:
    if not text:
        return np.array(DEFAULT_RADII)
    try:
        r = np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError as exc:
        raise InvalidSpec(f"cannot parse radii {text!r}") from exc
    if r.size == 0 or np.any(r <= 0) or np.any(r > 1) or np.any(np.diff(r) >= 0):
        raise InvalidSpec("radii must be strictly decreasing values in (0, 1]")
    return r


def _load_field(path: str) -> tuple[dict, PlanarField]:
    spec = load_field_spec(path)
    return spec, make_field(spec)


def _config(args) -> IntegratorConfig:
    return IntegratorConfig(max_time=args.max_time)


def linear_case(A: np.ndarray, tol: float = 1e-9) -> str:
    """Which of the three TC linear parts A is, up to a linear change of coordinates."""
    scale = float(np.abs(A).max())
    if scale <= tol:
        return "3 (zero matrix)"
    tr = A[0, 0] + A[1, 1]
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if abs(tr) <= tol * scale and det > tol * scale * scale:
        return "1 (purely imaginary nonzero eigenvalues)"
    if abs(tr) <= tol * scale and abs(det) <= tol * scale * scale:
        return "2 (nonzero nilpotent)"
    return "none (linear part is not that of a topological center)"


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> tuple[int, RunReport]:
    spec, F = _load_field(args.field)
    rep = RunReport("classify", {"field": spec})
    A = linearize(F)
    eig = spectrum(A)
    case = linear_case(A)
    print(f"linear part: {A.tolist()}")
    print("spectrum: " + ", ".join(f"{z.real:.12g}{z.imag:+.12g}i" for z in eig))
    print(f"linear case: {case}")
    rep.verdicts.update({"linear_part": A.tolist(), "spectrum": [[z.real, z.imag] for z in eig], "case": case})
    code = EXIT_OK
    if args.period_scan:
        prof = period_profile(F, args.ray, _parse_radii(args.radii), _config(args))
        no_return = int(sum(not c for c in prof.converged))
        limit = f"({prof.limit:.12g})" if prof.limit is not None else ""
        print(f"period verdict: {prof.verdict}{limit}")
        print(f"orbits without return: {no_return} of {len(prof.radii)}")
        rep.verdicts.update({"period_verdict": prof.verdict, "period_limit": prof.limit, "no_return": no_return})
        code = {"PTC": EXIT_OK, "Divergent": EXIT_NEGATIVE}.get(prof.verdict, EXIT_INCONCLUSIVE)
    return code, rep


def cmd_period(args) -> tuple[int, RunReport]:
    spec, F = _load_field(args.field)
    radii = _parse_radii(args.radii)
    rep = RunReport("period", {"field": spec, "ray": args.ray, "radii": radii.tolist()})
    prof = period_profile(F, args.ray, radii, _config(args))
    rows = [[_fmt(r), _fmt(t), int(c)] for r, t, c in zip(prof.radii, prof.theta, prof.converged)]
    header = ["radius", "theta", "converged"]
    if args.integral:
        B = lift_field(F)
        header += ["integral", "discrepancy"]
        disc = []
        for row, r, t in zip(rows, prof.radii, prof.theta):
            value = period_integral(lambda s, rho: np.asarray(B(s, rho)[0]) - 1.0, r, args.ray)
            d = abs(value - t) if math.isfinite(t) else math.nan
            disc.append(d)
            row += [_fmt(value), _fmt(d)]
        finite = [d for d in disc if math.isfinite(d)]
        rep.verdicts["max_discrepancy"] = max(finite) if finite else None
        circle = np.linspace(0.0, 2 * math.pi, 64, endpoint=False)
        drift = max(float(np.max(np.abs(B(circle, r)[1]))) for r in prof.radii)
        if drift > 1e-12:
            rep.verdicts["integral_note"] = "B_rho does not vanish; the integral ignores radial drift"
    _emit_csv(args.out, header, rows, rep)
    print(f"period verdict: {prof.verdict}" + (f"({prof.limit:.12g})" if prof.limit is not None else ""))
    if "max_discrepancy" in rep.verdicts:
        print(f"max discrepancy against the period integral: {rep.verdicts['max_discrepancy']}")
    rep.verdicts.update({"period_verdict": prof.verdict, "period_limit": prof.limit})
    return EXIT_OK, rep


def _parse_grid(text: Optional[str]) -> tuple[np.ndarray, np.ndarray]:
    if not text:
        return 2 * math.pi * np.arange(32) / 32.0, 0.5 * 2.0 ** -np.arange(8)
    try:
        nphi, nrho = (int(t) for t in text.split(","))
    except ValueError as exc:
        raise InvalidSpec(f"grid must be 'nphi,nrho', got {text!r}") from exc
    if nphi < 1 or nrho < 1:
        raise InvalidSpec("grid sizes must be positive")
    return 2 * math.pi * np.arange(nphi) / nphi, 0.5 * 2.0 ** -np.arange(nrho)


def cmd_lift(args) -> tuple[int, RunReport]:
    spec, F = _load_field(args.field)
    phis, rhos = _parse_grid(args.grid)
    rep = RunReport("lift", {"field": spec, "grid": [len(phis), len(rhos)]})
    if not F.tangent:
        print("warning: the field is not tangent to the unit circle", file=sys.stderr)
        rep.verdicts["tangency_warning"] = True
    B = lift_field(F)
    P, R = np.meshgrid(phis, rhos, indexing="ij")
    bphi, brho = B(P, R)
    rows = [[_fmt(p), _fmt(r), _fmt(a), _fmt(b)] for p, r, a, b in zip(P.ravel(), R.ravel(), bphi.ravel(), brho.ravel())]
    _emit_csv(args.out, ["phi", "rho", "B_phi", "B_rho"], rows, rep)
    c = float(B(0.0, 0.0)[0])
    orders = list(range(1, 7))
    ang = descend_flat(lambda p, r: B(p, r)[0] - c)
    rad = descend_flat(lambda p, r: B(p, r)[1])
    flat_phi = flatness_order(ang, orders)
    flat_rho = flatness_order(rad, orders)
    print(f"B_phi at the boundary: {c:.12g}")
    print("flatness of B_phi - c: " + " ".join(f"{k}:{'pass' if ok else 'fail'}" for k, ok in flat_phi.items()))
    print("flatness of B_rho:     " + " ".join(f"{k}:{'pass' if ok else 'fail'}" for k, ok in flat_rho.items()))
    rep.verdicts.update({"boundary_rate": c, "flat_phi": flat_phi, "flat_rho": flat_rho})
    return EXIT_OK, rep


def _alpha_from_spec(spec) -> object:
    if isinstance(spec, (int, float)):
        return float(spec)
    if "const" in spec:
        return float(spec["const"])
    if "expr" in spec:
        return scalar_from_expr(spec["expr"])
    raise InvalidSpec(f"cannot interpret shift function {spec!r}")


def build_map(spec: dict, F: PlanarField, cfg: IntegratorConfig):
    """Map evaluator (x, y) -> (u, v) from a map spec."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise InvalidSpec("a map spec is a mapping with a 'type' key")
    kind = spec["type"]
    if kind == "flow-by":
        return shift_map(F, _alpha_from_spec(spec.get("alpha", 0.0)), cfg)
    if kind == "rotation-by":
        a = float(spec["angle"])
        c, s = math.cos(a), math.sin(a)
        return lambda x, y: (c * np.asarray(x) - s * np.asarray(y), s * np.asarray(x) + c * np.asarray(y))
    if kind == "translate":
        dx, dy = float(spec.get("dx", 0.0)), float(spec.get("dy", 0.0))
        return lambda x, y: (np.asarray(x, dtype=float) + dx, np.asarray(y, dtype=float) + dy)
    if kind == "compose":
        maps = [build_map(m, F, cfg) for m in spec.get("maps", [])]
        if not maps:
            raise InvalidSpec("compose needs at least one map")

        def composed(x, y):
            for m in maps:
                x, y = m(x, y)
            return x, y

        return composed
    raise InvalidSpec(f"unknown map type {kind!r}")


def _samples(n: int, radius: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
    a = rng.uniform(0.0, 2 * math.pi, n)
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


def cmd_shift(args) -> tuple[int, RunReport]:
    spec, F = _load_field(args.field)
    try:
        mspec = json.loads(Path(args.map).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidSpec(f"cannot read map spec {args.map}: {exc}") from exc
    cfg = _config(args)
    h = build_map(mspec, F, cfg)
    pts = _samples(args.samples, args.sample_radius, args.seed)
    rep = RunReport("shift", {"field": spec, "map": mspec, "samples": args.samples, "seed": args.seed})
    tol = report_tolerance()
    try:
        grid = recover_shift(F, h, pts, cfg)
    except (NotOrbitPreserving, NotPTC) as exc:
        print(f"{type(exc).__name__}: {exc}")
        rep.verdicts["error"] = type(exc).__name__
        rep.verdicts["message"] = str(exc)
        return EXIT_NEGATIVE, rep
    _emit_csv(args.out, ["x", "y", "sigma", "residual"],
              [[_fmt(x), _fmt(y), _fmt(s), _fmt(r)] for (x, y), s, r in zip(grid.points, grid.sigma, grid.residuals)], rep)
    print(f"omega: {grid.omega:.12g}")
    print(f"sigma range: [{grid.sigma.min():.12g}, {grid.sigma.max():.12g}]")
    print(f"max residual: {grid.residual:.3g} (tolerance {tol:g})")
    rep.verdicts.update({"omega": grid.omega, "residual": grid.residual, "residual_ok": grid.residual <= tol})
    if mspec.get("type") == "flow-by":
        alpha = as_scalar(_alpha_from_spec(mspec.get("alpha", 0.0)))
        theta = np.array([period(F, p, cfg) if np.hypot(*p) > 0 else math.nan for p in grid.points])
        n = np.round((alpha(grid.points[:, 0], grid.points[:, 1]) - grid.sigma) / theta)
        ns = sorted({int(v) for v in n if math.isfinite(v)})
        if ns and ns != [0]:
            print(f"kernel note: sigma = alpha - n*theta with n in {ns}")
        rep.verdicts["kernel_n"] = ns
    return (EXIT_OK if grid.residual <= tol else EXIT_INCONCLUSIVE), rep


def cmd_jets(args) -> tuple[int, RunReport]:
    table = TaylorTable.load(args.table)
    rep = RunReport("jets", {"table": args.table, "max_degree": table.max_degree})
    res = radialize_series(table)
    if res.ok:
        print("radial: a = (" + ", ".join(str(a) for a in res.coefficients) + ")")
        rep.verdicts.update({"radial": True, "a": [str(a) for a in res.coefficients]})
        return EXIT_OK, rep
    print(f"not radial: first failure at degree {res.failing_degree}; defect x p_y - y p_x = {res.defect}")
    rep.verdicts.update({"radial": False, "failing_degree": res.failing_degree, "defect": str(res.defect)})
    return EXIT_NEGATIVE, rep


def _emit_csv(path: Optional[str], header: list, rows: list, rep: RunReport) -> None:
    if path is None:
        out = sys.stdout
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    rep.outputs.append(str(path))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="seed for sample generation")
    common.add_argument("--report", help="write a JSON run report to this path")
    common.add_argument("--max-time", type=float, default=IntegratorConfig.max_time, help="time budget per orbit")

    p = argparse.ArgumentParser(prog="centerkit", description="Topological centers, periods and shift functions.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="linear part, spectrum and period verdict")
    c.add_argument("field")
    c.add_argument("--period-scan", action="store_true")
    c.add_argument("--ray", type=float, default=0.0)
    c.add_argument("--radii")

    q = sub.add_parser("period", parents=[common], help="period function along a ray")
    q.add_argument("field")
    q.add_argument("--ray", type=float, default=0.0)
    q.add_argument("--radii", help="comma separated, strictly decreasing")
    q.add_argument("--out")
    q.add_argument("--integral", action="store_true", help="compare against the polar period integral")

    l = sub.add_parser("lift", parents=[common], help="polar lift on a grid")
    l.add_argument("field")
    l.add_argument("--grid", help="'nphi,nrho'")
    l.add_argument("--out")

    s = sub.add_parser("shift", parents=[common], help="recover the shift function of a map")
    s.add_argument("field")
    s.add_argument("map")
    s.add_argument("--samples", type=int, default=50)
    s.add_argument("--sample-radius", type=float, default=0.5)
    s.add_argument("--out")

    j = sub.add_parser("jets", parents=[common], help="radial structure of a Taylor table")
    j.add_argument("table")
    return p


COMMANDS = {"classify": cmd_classify, "period": cmd_period, "lift": cmd_lift, "shift": cmd_shift, "jets": cmd_jets}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    start = time.perf_counter()
    try:
        code, rep = COMMANDS[args.command](args)
    except (InvalidSpec, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CenterKitError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    rep.wall_time = time.perf_counter() - start
    if args.report:
        rep.outputs.append(str(args.report))
        rep.write(args.report)
    return code


if __name__ == "__main__":
    sys.exit(main())
