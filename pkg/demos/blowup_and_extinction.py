"""Chase a solution into its singularity, then drive one to zero.

Superlinear growth D^gamma u = u^2 blows up in finite time; the march
follows it until the step collapses, fits (T_b - t)^{-beta} on the
final decades, and compares against the one-term theory.  The
sublinear sink D^gamma u = -1/u reaches zero in finite time; the
discrete signature is the corrector equation losing its positive
root, and the report brackets the touch time.

Run:  python3 demos/blowup_and_extinction.py
"""

import math

import numpy as np

from fracode import FracProblem, detect_blowup, detect_extinction


def main():
    prob = FracProblem.power_law(0.5, 1.0, 2.0, 1.0, 1.0)
    rep = detect_blowup(prob)
    print("blow-up: gamma = 0.5, p = 2, A = 1, u0 = 1")
    print(f"  T_b estimate       {rep.Tb_estimate:.8f}")
    print(f"  refinement drift   {rep.refinement_drift:.2e}")
    print(f"  exponent fit       {rep.exponent_fit:.6f}   theory {rep.theory_exponent}")
    print(f"  constant fit       {rep.constant_fit:.6f}   theory {rep.theory_constant:.6f}")
    print(f"  (theory constant is 1/sqrt(pi) = {1.0 / math.sqrt(math.pi):.6f} here)")
    print(f"  path reached u = {rep.path.values[-1]:.3e} over {rep.path.values.size} nodes")

    prob = FracProblem.power_law(0.5, -1.0, -1.0, 1.0, 1.0)
    rep = detect_extinction(prob)
    print("\nextinction: gamma = 0.5, p = -1, A = -1, u0 = 1")
    print(f"  touch time         {rep.touch_time:.8f}")
    print(f"  upper bound        {rep.upper_bound_time:.8f}  (= pi/4 for this data)")
    print(f"  final value        {rep.path.values[-1]:.3e}")
    dec = bool(np.all(np.diff(rep.path.values) < 0))
    print(f"  strictly decreasing: {dec}")


if __name__ == "__main__":
    main()
