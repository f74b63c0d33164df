"""Solve a subdiffusion problem and inspect the error history.

Marches the manufactured problem (exact solution t^alpha sin x, which has
the characteristic weak singularity at t=0) on a uniform and on a graded
mesh at the same step count, showing why grading matters.  Run from the
repository root:

    python3 demos/04_solve_subdiffusion.py
"""
from subdiff import (
    discrete_norms,
    make_graded_mesh,
    make_uniform_mesh,
    manufactured_problem_1d,
    solve,
)


def main():
    alpha = 0.5
    problem = manufactured_problem_1d(alpha, intervals=2048)
    print(f"problem: {problem.name}, alpha={alpha}, "
          f"{problem.space.intervals} spatial intervals\n")

    for name, mesh in [
        ("uniform", make_uniform_mesh(1.0, 80)),
        ("graded r=2/alpha", make_graded_mesh(1.0, 80, 2.0 / alpha)),
    ]:
        state = solve(problem, mesh, backend="closed")
        norms = discrete_norms(state)
        print(f"{name:<18s} K={mesh.num_steps}: "
              f"max L2 error {norms.max_l2_error:.4e} "
              f"at level {norms.argmax_level}, "
              f"final H1 seminorm {float(state.h1_seminorm[-1]):.6f}")

    print("\nthe graded mesh concentrates steps near t=0 where the exact")
    print("solution has unbounded derivative, cutting the error by orders")
    print("of magnitude at identical cost")


if __name__ == "__main__":
    main()
