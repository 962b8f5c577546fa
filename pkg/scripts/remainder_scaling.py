"""Scaling of the non-dominant remainder along the sine-Gordon family.

Solves the family, then prints ||v_perp||_{L2 L2} and the largest non-dominant
sup norm against alpha, with the local log-log slopes.

    python scripts/remainder_scaling.py --eps 0.2 0.1 0.05 0.025
"""
import argparse
import math

from breather_lab.model import make_model
from breather_lab.modes import dominant_split, rescaled_mode_sup
from breather_lab.solver import continue_family


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    ap.add_argument("--h", type=float, default=0.1)
    args = ap.parse_args()
    from breather_lab.grid import Grid
    fam = continue_family(make_model("sine_gordon"), sorted(args.eps, reverse=True),
                          grid_factory=lambda e: Grid.for_amplitude(e, h=args.h))
    prev = None
    print(f"{'eps':>7} {'alpha':>9} {'perp_L2L2':>11} {'slope':>6} {'sup_n!=1':>11} {'slope':>6}")
    for s in fam:
        if not s.converged:
            print(f"{s.eps:7.3f}  not converged: {s.message}")
            continue
        perp = dominant_split(s.stack, s.alpha).perp_L2L2
        sup = rescaled_mode_sup(s.stack, s.alpha, exclude=1)
        sl = ("", "")
        if prev:
            la = math.log(prev[0] / s.alpha)
            sl = (f"{math.log(prev[1] / perp) / la:6.2f}", f"{math.log(prev[2] / sup) / la:6.2f}")
        print(f"{s.eps:7.3f} {s.alpha:9.4f} {perp:11.4e} {sl[0]:>6} {sup:11.4e} {sl[1]:>6}")
        prev = (s.alpha, perp, sup)


if __name__ == "__main__":
    main()
