"""Dependence of a solved breather on the domain size and boundary closure.

    python scripts/boundary_sensitivity.py --model gaussian --eps 0.14
"""
import argparse

from breather_lab.model import make_model
from breather_lab.solver import NewtonConfig, boundary_sensitivity


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="sine_gordon")
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--L", type=float, nargs="*", default=None, help="half-lengths to try")
    ap.add_argument("--max-iter", type=int, default=30)
    args = ap.parse_args()
    cfg = NewtonConfig(max_iter=args.max_iter)
    if args.model not in ("sine_gordon", "gaussian", "cubic", "zero"):
        cfg = NewtonConfig(max_iter=args.max_iter, gauge=("centroid", "zero_b_fundamental"))
    rows = boundary_sensitivity(make_model(args.model), args.eps, cfg, args.L)
    print(f"{'boundary':>9} {'L':>8} {'conv':>5} {'residual':>10} {'alpha':>9} {'osc_sup':>10}")
    for r in rows:
        print(f"{r['boundary']:>9} {r['L']:8.1f} {str(r['converged']):>5} {r['residual']:10.3e} "
              f"{r['alpha']:9.4f} {r['oscillatory_sup']:10.3e}")


if __name__ == "__main__":
    main()
