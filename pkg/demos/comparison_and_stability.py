"""Order preservation and initial-value stability, checked numerically.

Two runs of the same equation started at u10 <= u20 must never cross,
and the normalized gap y = (u2 - u1)/(u20 - u10) must stay positive
and under the Mittag-Leffler envelope E_gamma(L Gamma(gamma) t^gamma).
A seeded corpus of random right-hand sides (clipped polynomials in t
and u, optionally wrapped in sin or exp) tries to break both claims;
the resolvent check closes the loop on the kernel identities the
stability bound rests on.

Run:  python3 demos/comparison_and_stability.py
"""

from fracode import (
    check_comparison,
    check_resolvent,
    corpus_problems,
    run_corpus,
    stability_experiment,
)


def main():
    # one hand-picked pair first: bistable drift, twin starts
    rep = check_comparison("u - u^3", 0.6, 0.2, 0.9, T=2.0, n=512)
    print("comparison, f = u - u^3, starts 0.2 <= 0.9, T = 2")
    print(f"  min margin  {rep.min_margin:.4e}")
    print(f"  violations  {rep.violations}")

    st = stability_experiment("u - u^3", 0.6, 0.2, 0.9, T=2.0, n=512)
    print(f"  min y       {st.min_y:.4f}   sup y {st.sup_ratio:.4f}")
    print(f"  envelope ok {st.ml_envelope_ok}   eq residual {st.eq_residual:.2e}")

    # the seeded corpus: same seed, same problems, every run
    probs = corpus_problems(trials=5)
    print("\nfirst five corpus right-hand sides:")
    for prob in probs:
        print(f"  [{prob.index}] gamma={prob.gamma}  {prob.rhs[:60]}...")

    rep = run_corpus(trials=25, n=192)
    print(f"\ncorpus (25 trials, n = 192):")
    print(f"  violations     {rep.comparison.violations}")
    print(f"  min margin     {rep.comparison.min_margin:.4e}")
    print(f"  min y          {rep.min_y:.4e}")
    print(f"  envelopes ok   {rep.all_envelopes_ok}")

    chk = check_resolvent(1.0, 0.5, 1.0, 2048)
    print(f"\nresolvent, lam = 1, gamma = 0.5, n = 2048:")
    print(f"  equation residual   {chk.max_residual:.2e}")
    print(f"  survival identity   {chk.ml_identity_dev:.2e}")
    print(f"  min r               {chk.min_r:.6f} (must stay positive)")


if __name__ == "__main__":
    main()
