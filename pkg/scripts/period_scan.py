"""Period profiles for every catalog field, written as one CSV per field.

    python scripts/period_scan.py --out results/periods
"""

import argparse
from pathlib import Path

import numpy as np

from centerkit.fields import catalog
from centerkit.flow import IntegratorConfig, period_profile


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/periods")
    ap.add_argument("--ray", type=float, default=0.0)
    ap.add_argument("--halvings", type=int, default=7, help="radii 0.64 * 2^-i for i < halvings")
    ap.add_argument("--max-time", type=float, default=1e6)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    radii = 0.64 * 2.0 ** -np.arange(args.halvings)
    cfg = IntegratorConfig(max_time=args.max_time, escape_radius=None)
    for name, F in catalog().items():
        prof = period_profile(F, args.ray, radii, cfg)
        (out / f"{name}.csv").write_text(prof.to_csv())
        valid = [t for t in prof.theta if np.isfinite(t)]
        last = f"{valid[-1]:.6g}" if valid else "none"
        print(f"{name:20s} {prof.verdict:12s} last theta {last}")


if __name__ == "__main__":
    main()
