"""Audited Adam: the update rule, noise laws, and margin checks in one place.

The package splits into:

* :mod:`adamaudit.optimizer` — the bias-corrected update rule as pure
  state transitions, plus its heavy-ball rewriting;
* :mod:`adamaudit.problems` — benchmark objectives with smoothness
  certificates (global Lipschitz or gradient-dependent curvature);
* :mod:`adamaudit.noise` — admissible stochastic-gradient noise laws with
  an exponential-moment self-test;
* :mod:`adamaudit.audit` — the trajectory ledger, per-step margin checks,
  scalar sequence bounds, and closed-form budget constants;
* :mod:`adamaudit.harness` — run orchestration, rate sweeps, CSV/JSON
  output, and the command-line interface.
"""

from . import audit, harness, noise, optimizer, problems
from .optimizer import AdamState, HyperParams, step

__version__ = "0.1.0"

__all__ = [
    "audit",
    "harness",
    "noise",
    "optimizer",
    "problems",
    "AdamState",
    "HyperParams",
    "step",
    "__version__",
]
