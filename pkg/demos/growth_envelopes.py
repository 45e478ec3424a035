"""Sandwich the sublinear-growth solution between closed-form envelopes.

For D^gamma u = A u^p with A > 0 and 0 < p < 1 the solution grows like
a * t^{gamma/(1-p)}; an explicit subsolution and supersolution of the
same shape bracket it for all time.  This script solves the canonical
case gamma = 0.5, p = 0.5 (where the growth is exactly linear and
a = pi/4), checks the bracket nodewise to T = 50, and fits the far
field exponent on a geometric mesh out to t = 1000.

Run:  python3 demos/growth_envelopes.py
"""

import numpy as np

from fracode import (
    FracProblem,
    Mesh,
    default_grading,
    eval_envelope,
    fit_power,
    solve,
    subsolution_params,
    supersolution_params,
)


def main():
    gamma, A, p, u0 = 0.5, 1.0, 0.5, 1.0
    a, t0 = subsolution_params(A, p, gamma, u0)
    print(f"growth: gamma = {gamma}, p = {p}  ->  u ~ a t^{{gamma/(1-p)}}")
    print(f"  exponent gamma/(1-p) = {gamma / (1.0 - p)}")
    print(f"  a = {a!r}  (pi/4 = {np.pi / 4!r})")
    print(f"  subsolution active from t0 = {t0:.4f}")

    params = supersolution_params(A, p, gamma, u0)
    mesh = Mesh.graded(50.0, 2048, default_grading(gamma))
    path = solve(FracProblem.power_law(gamma, A, p, u0, 50.0), mesh)
    lo = eval_envelope(params, "sub", mesh.nodes)
    hi = eval_envelope(params, "super", mesh.nodes)
    scale = np.maximum(1.0, np.abs(path.values))
    print(f"  min (u - sub)/scale   = {((path.values - lo) / scale).min():.3e}")
    print(f"  min (super - u)/scale = {((hi - path.values) / scale).min():.3e}")
    print(f"  u(50) = {path.values[-1]:.4f}, super(50) = {hi[-1]:.4f}")

    far = solve(
        FracProblem.power_law(gamma, A, p, u0, 1000.0),
        Mesh.geometric(1000.0, 4096, 1e-3),
    )
    fit = fit_power(far, (100.0, 1000.0))
    print(f"  far-field fit over [100, 1000]: exponent {fit.exponent:.5f}, "
          f"constant {fit.constant:.5f}")


if __name__ == "__main__":
    main()
