"""fracode: solve and verify scalar fractional-order initial value problems.

The package solves D^g u = f(t, u) for order g in (0, 1) through the
equivalent weakly singular Volterra equation, evaluates the special
functions its closed-form solutions are built from, fits the power-law
asymptotics (blow-up, decay, sublinear growth), constructs sub- and
super-solution envelopes, and property-checks comparison, stability and
resolvent identities on randomized problem corpora.
"""

from fracode.asymptotics import (
    AsymptoticFit,
    EnvelopeParams,
    blowup_constant_theory,
    eval_envelope,
    fit_power,
    subsolution_params,
    supersolution_params,
)
from fracode.expressions import (
    EvalError,
    Expr,
    ExprError,
    ParseError,
    evaluate,
    lipschitz_probe,
    match_power_law,
    parse,
    to_str,
)
from fracode.fracops import (
    Mesh,
    SampledFn,
    caputo_l1,
    default_grading,
    frac_integral,
    group_roundtrip,
    power_weighted_integral,
)
from fracode.solver import (
    BlowupReport,
    ExtinctionReport,
    FracProblem,
    NonBlowupError,
    PathStatus,
    SolutionPath,
    SolverOptions,
    StepCollapseError,
    detect_blowup,
    detect_extinction,
    solve,
)
from fracode.specfun import (
    AccuracyLossError,
    MLQuery,
    PoleError,
    ResolventQuery,
    beta_fn,
    gamma_fn,
    log_gamma,
    mittag_leffler,
    mittag_leffler_with_error,
    power_kernel,
    resolvent,
    rgamma,
)
from fracode.verify import (
    CORPUS_SEED,
    ComparisonReport,
    CorpusProblem,
    CorpusReport,
    ResolventCheck,
    StabilityReport,
    TrialRecord,
    check_comparison,
    check_resolvent,
    check_subsupersolution,
    corpus_problems,
    max_principle_defect,
    run_corpus,
    stability_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyLossError",
    "AsymptoticFit",
    "BlowupReport",
    "CORPUS_SEED",
    "ComparisonReport",
    "CorpusProblem",
    "CorpusReport",
    "EnvelopeParams",
    "EvalError",
    "Expr",
    "ExprError",
    "ExtinctionReport",
    "FracProblem",
    "MLQuery",
    "Mesh",
    "NonBlowupError",
    "ParseError",
    "PathStatus",
    "PoleError",
    "ResolventCheck",
    "ResolventQuery",
    "SampledFn",
    "SolutionPath",
    "SolverOptions",
    "StabilityReport",
    "StepCollapseError",
    "TrialRecord",
    "beta_fn",
    "blowup_constant_theory",
    "caputo_l1",
    "check_comparison",
    "check_resolvent",
    "check_subsupersolution",
    "corpus_problems",
    "default_grading",
    "detect_blowup",
    "detect_extinction",
    "eval_envelope",
    "evaluate",
    "fit_power",
    "frac_integral",
    "gamma_fn",
    "group_roundtrip",
    "lipschitz_probe",
    "log_gamma",
    "match_power_law",
    "max_principle_defect",
    "mittag_leffler",
    "mittag_leffler_with_error",
    "parse",
    "power_kernel",
    "power_weighted_integral",
    "resolvent",
    "rgamma",
    "run_corpus",
    "solve",
    "stability_experiment",
    "subsolution_params",
    "supersolution_params",
    "to_str",
    "__version__",
]
