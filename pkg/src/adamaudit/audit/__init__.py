"""Trajectory auditing: margin ledgers, per-run checks, and report types."""

from .ledger import (
    HOLD,
    SKIP,
    VIOLATED,
    STATUS_NAMES,
    CheckSeries,
    AuditLedger,
    LedgerError,
    LedgerSequenceError,
    extend_ledger,
)
from .checks import (
    AuditReport,
    run_standard_audit,
    run_deep_audit,
    check_stepsize_ratio,
    check_momentum_ratio,
    check_sum_bounds,
    check_y_identity,
    check_proxy_gaps,
    check_smooth_relations,
    check_descent_decomposition,
    check_event_bounds,
    check_probabilistic,
    ProbabilisticReport,
)
from .sequences import (
    check_sequence_lemmas,
    SequenceReport,
    azuma_mc,
    AzumaReport,
    geometric_tail_sum,
)
from .constants import (
    SmoothConstants,
    GeneralizedConstants,
    ConstantsOverflow,
    compute_theory_constants,
    ratio_drift_cap,
    momentum_over_denom_cap,
)

__all__ = [
    "HOLD",
    "SKIP",
    "VIOLATED",
    "STATUS_NAMES",
    "CheckSeries",
    "AuditLedger",
    "LedgerError",
    "LedgerSequenceError",
    "extend_ledger",
    "AuditReport",
    "run_standard_audit",
    "run_deep_audit",
    "check_stepsize_ratio",
    "check_momentum_ratio",
    "check_sum_bounds",
    "check_y_identity",
    "check_proxy_gaps",
    "check_smooth_relations",
    "check_descent_decomposition",
    "check_event_bounds",
    "check_probabilistic",
    "ProbabilisticReport",
    "check_sequence_lemmas",
    "SequenceReport",
    "azuma_mc",
    "AzumaReport",
    "geometric_tail_sum",
    "SmoothConstants",
    "GeneralizedConstants",
    "ConstantsOverflow",
    "compute_theory_constants",
    "ratio_drift_cap",
    "momentum_over_denom_cap",
]
