"""Vector-certificate feedback toolkit.

Thin python surface over the native core: monotone gain calculus with the
cyclic small-gain check, the exact scalar-inequality interval solver,
certificate verification and pointwise feedback synthesis, and the
stirred-tank reaction-network application with simulation.
"""

try:  # installed layout: the extension sits inside the package
    from ._vclf import (  # type: ignore[attr-defined]  # noqa: F401
        DilutionFeedback,
        FeedbackLaw,
        FnClass,
        GainMatrix,
        MonotoneFn,
        Network,
        Problem,
        bump,
        check_small_gain,
        dmax_bound,
        feasible_interval,
        regularize_gains,
        __version__,
    )
except ImportError:  # development layout: extension on PYTHONPATH from the build tree
    from _vclf import (  # noqa: F401
        DilutionFeedback,
        FeedbackLaw,
        FnClass,
        GainMatrix,
        MonotoneFn,
        Network,
        Problem,
        bump,
        check_small_gain,
        dmax_bound,
        feasible_interval,
        regularize_gains,
        __version__,
    )

__all__ = [
    "DilutionFeedback",
    "FeedbackLaw",
    "FnClass",
    "GainMatrix",
    "MonotoneFn",
    "Network",
    "Problem",
    "bump",
    "check_small_gain",
    "dmax_bound",
    "feasible_interval",
    "regularize_gains",
    "__version__",
]
