"""Build time meshes and certify their step-ratio admissibility.

Shows the two rules the certifier enforces: every step ratio must exceed
rho_star strictly, and a ratio below eta caps how fast the next step may
grow.  Run from the repository root:

    python3 demos/01_mesh_certification.py
"""
import numpy as np

from subdiff import (
    TimeMesh,
    admissibility_thresholds,
    certify_mesh,
    make_graded_mesh,
    make_r_variable_mesh,
    make_uniform_mesh,
    pair_ratio_bound,
)


def show(name, mesh):
    report = certify_mesh(mesh)
    tag = "admissible" if report.satisfied else f"VIOLATION at ratio #{report.first_violation}"
    print(f"  {name:<28s} K={mesh.num_steps:<4d} min margin "
          f"{float(np.min(report.per_step_margin)):+.4f}  -> {tag}")
    return report


def main():
    rho_star, eta = admissibility_thresholds()
    print(f"thresholds: rho_star = {rho_star:.12f}, eta = {eta:.12f}\n")

    print("standard constructions on [0, 1]:")
    show("uniform", make_uniform_mesh(1.0, 64))
    show("graded r=2", make_graded_mesh(1.0, 64, 2.0))
    show("graded r=4 (steep)", make_graded_mesh(1.0, 64, 4.0))
    show("node-dependent (alpha=0.5)", make_r_variable_mesh(1.0, 64, 0.5))

    print("\nhand-built ratio sequences (first step 1):")
    def from_ratios(ratios):
        steps = np.cumprod(np.concatenate([[1.0], ratios]))
        return TimeMesh(np.concatenate([[0.0], np.cumsum(steps)]))

    # a single ratio below rho_star is an immediate violation
    show("ratio 0.2 < rho_star", from_ratios([1.0, 0.2, 1.0]))

    # a ratio in (rho_star, eta) caps its successor
    cap = pair_ratio_bound(0.36)
    print(f"  after a ratio of 0.36 the next ratio may be at most {cap:.6f}")
    show("0.36 then 0.37 (inside cap)", from_ratios([0.36, 0.37]))
    show("0.36 then 0.38 (over cap)", from_ratios([0.36, 0.38]))

    # ratios at or above eta never constrain the successor
    show("eta then 3.0", from_ratios([eta, 3.0]))


if __name__ == "__main__":
    main()
