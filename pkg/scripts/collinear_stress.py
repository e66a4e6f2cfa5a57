"""Stress test of the collinear-maps classification on random conjugate pairs.

    python scripts/collinear_stress.py --pairs 1000
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from centerkit.linalg import collinear_classify  # noqa: E402
from generators import case_a1, case_rank_one  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=9)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print("case,n,max_residual,misclassified")
    for case in ("A1", "A2", "A3"):
        for n in (2, 3):
            worst, wrong = 0.0, 0
            for _ in range(args.pairs):
                if case == "A1":
                    A, B, H, _ = case_a1(rng, n)
                else:
                    A, B, H = case_rank_one(rng, n, nilpotent=case == "A3")
                rep = collinear_classify(A, B, H)
                worst = max(worst, rep.commutation_residual())
                wrong += rep.case != case
            print(f"{case},{n},{worst:.3e},{wrong}")


if __name__ == "__main__":
    main()
