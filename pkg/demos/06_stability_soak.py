"""Long-horizon energy-stability soak.

Marches to horizon 50 on a graded-head/uniform-tail mesh with bounded-
variation forcing and checks that the H1 seminorm trajectory plateaus
(late-window maximum within 1% of the early-window maximum); repeats with
zero forcing, where the trajectory must decay monotonically.  Run from the
repository root:

    python3 demos/06_stability_soak.py
"""
from subdiff import run_stability_soak


def main():
    alpha = 0.5
    forced = run_stability_soak(alpha, num_steps=240, split_steps=48)
    print(f"forced run   (alpha={alpha}, T={forced.horizon}, K={forced.num_steps}):")
    print(f"  H1 max over early levels {forced.max_first_window:.6e}")
    print(f"  H1 max over late levels  {forced.max_second_window:.6e}")
    print(f"  growth ratio {forced.growth_ratio:.6f} "
          f"(plateau cap {forced.plateau_factor}) -> "
          f"{'PASS' if forced.plateau_ok else 'FAIL'}")

    decay = run_stability_soak(alpha, num_steps=240, split_steps=48, zero_source=True)
    print(f"\nzero-source run:")
    print(f"  H1 nonincreasing: {decay.h1_nonincreasing}")
    print(f"  L2 nonincreasing: {decay.l2_nonincreasing}")
    print(f"  overall verdict:  {'PASS' if decay.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
