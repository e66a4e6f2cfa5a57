"""Random shift functions pushed through Sh and recovered again.

    python scripts/shift_roundtrip.py --cases 50 --seed 7
"""

import argparse
import time

import numpy as np

from centerkit.fields import catalog, scalar_from_expr
from centerkit.flow import period_profile, shift_map
from centerkit.shift import gamma_set_membership, recover_shift

FIELDS = {"rotation1": 0.8, "takens_flat_x": 0.2, "takens_flat_radial": 0.5}


def random_alpha(rng, F, pts):
    a0, c1, c2, k = rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), int(rng.integers(1, 4))
    amp = 0.5
    while True:
        alpha = scalar_from_expr(f"{a0} + {amp}*({c1}*sin({k}*x) + {c2}*x*y)")
        if gamma_set_membership(F, alpha, pts, margin=0.1):
            return alpha
        amp /= 2


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cases", type=int, default=50)
    ap.add_argument("--samples", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cat = catalog()
    profiles = {n: period_profile(cat[n], 0.0, 0.2 * 2.0 ** -np.arange(5)) for n in FIELDS}
    names = list(FIELDS)
    t0 = time.perf_counter()
    print("case,field,max_error,residual")
    for i in range(args.cases):
        name = names[i % len(names)]
        F = cat[name]
        r = FIELDS[name] * np.sqrt(rng.uniform(0, 1, args.samples))
        a = rng.uniform(0, 2 * np.pi, args.samples)
        pts = np.column_stack([r * np.cos(a), r * np.sin(a)])
        alpha = random_alpha(rng, F, pts)
        grid = recover_shift(F, shift_map(F, alpha), pts, profile=profiles[name])
        err = np.max(np.abs(grid.sigma - alpha(pts[:, 0], pts[:, 1])))
        print(f"{i},{name},{err:.3e},{grid.residual:.3e}")
    print(f"# {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
