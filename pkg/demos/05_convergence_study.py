"""Run a small convergence study and print the error/order table.

Uses the generic convergence driver on a compact spec (one order, two mesh
families, three step counts) with outputs written next to this script.
The full benchmark reproduction on the reference grid is the CLI command

    subdiff reproduce-tables --paper-exact

Run from the repository root:

    python3 demos/05_convergence_study.py
"""
from pathlib import Path

from subdiff import ExperimentSpec, compute_orders, run_convergence


def main():
    out_dir = Path(__file__).parent / "out" / "convergence"
    spec = ExperimentSpec(
        alphas=(0.5,),
        families=("graded:r=2/alpha", "rvariable"),
        step_counts=(20, 40, 80),
        space="d1:1024",
        horizon=1.0,
        backend="closed",
        out_dir=str(out_dir),
    )
    report = run_convergence(spec)

    print(f"alpha=0.5, families {', '.join(f.label for f in spec.families)}\n")
    print(f"{'family':<14s} {'K':>4s} {'max L2 error':>14s} {'order':>7s}")
    for family in spec.families:
        errors = report.max_errors(0.5, family.label)
        orders = compute_orders(errors, spec.step_counts)
        for i, num_steps in enumerate(spec.step_counts):
            order_txt = f"{orders[i - 1]:.3f}" if i else ""
            print(f"{family.label:<14s} {num_steps:>4d} {errors[i]:>14.4e} {order_txt:>7s}")
        print()

    print(f"CSV and JSON written under {out_dir}")


if __name__ == "__main__":
    main()
