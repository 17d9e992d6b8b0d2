"""Joins error series with bound envelopes into a machine-readable verdict.

Each check yields a record {name, status, slack, first_violation_k,
tolerance}; status is "pass", "fail" or "inapplicable" (with the gating
reason in the record).  The global status fails iff an applicable check
fails.  Exit-code contract: 0 all pass, 1 any fail, 2 usage error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import EnvelopeSeries, InapplicableError, TheoremConstants, \
    asymptotic_limits, lower_step, upper_step
from .engine import ErrorSeries

EXACT_TOL = 1e-10
DEFAULT_SE_MULT = 4.0
DEFAULT_TAIL_FRACTION = 0.2
MIN_TAIL_POINTS = 50


class VerifyUsageError(ValueError):
    """Malformed or inconsistent verification inputs."""


@dataclass
class CheckRecord:
    name: str
    status: str  # pass | fail | inapplicable
    slack: Optional[float] = None
    first_violation_k: Optional[int] = None
    tolerance: Optional[float] = None
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name, "status": self.status, "slack": self.slack,
            "first_violation_k": self.first_violation_k,
            "tolerance": self.tolerance, "reason": self.reason,
        }


@dataclass
class VerificationReport:
    checks: list[CheckRecord] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "fail" if any(c.status == "fail" for c in self.checks) else "pass"

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "pass" else 1

    def to_json(self) -> str:
        ordered = sorted(self.checks, key=lambda c: c.status != "fail")
        return json.dumps(
            {"checks": [c.to_dict() for c in ordered], "status": self.status},
            indent=2, sort_keys=False) + "\n"


def check_bracketing(series: ErrorSeries, env: EnvelopeSeries,
                     se_mult: float = DEFAULT_SE_MULT,
                     max_violation_fraction: float = 0.0,
                     name: str = "bracketing") -> CheckRecord:
    """r_hat must sit inside [lower, upper] after SE inflation.

    ``max_violation_fraction`` is the tolerated share of violating
    iterations (Monte-Carlo flaky budget); 0 demands containment at
    every k.
    """
    if len(series) != len(env):
        raise VerifyUsageError(
            f"series length {len(series)} != envelope length {len(env)}")
    r = series.r_hat
    if series.exact:
        lo = env.lower - EXACT_TOL
        hi = env.upper + EXACT_TOL
        tol = EXACT_TOL
    else:
        lo = env.lower - se_mult * series.std_err
        hi = env.upper + se_mult * series.std_err
        tol = se_mult
    below = np.maximum(lo - r, 0.0)
    above = np.where(np.isfinite(env.upper), np.maximum(r - hi, 0.0), 0.0)
    violation = np.maximum(below, above)
    bad = np.nonzero(violation > 0)[0]
    frac = bad.size / max(len(series), 1)
    ok = frac <= max_violation_fraction
    slack = float(np.min(np.minimum(r - lo, np.where(np.isfinite(hi), hi - r, np.inf))))
    return CheckRecord(
        name=name, status="pass" if ok else "fail", slack=slack,
        first_violation_k=int(bad[0]) if bad.size else None, tolerance=tol)


def check_asymptotics(series: ErrorSeries, c: TheoremConstants,
                      tail_fraction: float = DEFAULT_TAIL_FRACTION,
                      se_mult: float = DEFAULT_SE_MULT,
                      name: str = "asymptotics") -> CheckRecord:
    """Tail average must clear z0^2 and (when available) the limsup cap."""
    n = len(series)
    tail = max(int(math.floor(n * tail_fraction)), 1)
    if tail < MIN_TAIL_POINTS:
        raise VerifyUsageError(
            f"tail window has {tail} points; need >= {MIN_TAIL_POINTS}")
    r = series.r_hat[n - tail:]
    avg = float(np.mean(r))
    if series.exact:
        pooled = 0.0
    else:
        pooled = float(np.sqrt(np.sum(series.std_err[n - tail:] ** 2)) / tail)
    z0_sq = c.z0 ** 2
    if not c.flags.small_eta:
        return CheckRecord(name=name, status="inapplicable",
                           reason="small-eta condition fails: z* > z0")
    deficit = z0_sq - (avg + se_mult * pooled)
    slack = -deficit
    status = "pass" if deficit <= 0 else "fail"
    if status == "pass" and c.C4 is not None:
        _, limsup = asymptotic_limits(c)
        excess = (avg - se_mult * pooled) - limsup
        slack = min(slack, -excess)
        if excess > 0:
            status = "fail"
    return CheckRecord(name=name, status=status, slack=slack,
                       tolerance=se_mult)


def check_recursion(series: ErrorSeries, c: TheoremConstants,
                    name: str = "one-step-recursion") -> CheckRecord:
    """Exact series must satisfy both one-step inequalities everywhere."""
    if not series.exact:
        raise VerifyUsageError(
            "recursion check needs an exact series; Monte-Carlo noise can "
            "falsify an inequality that holds in expectation")
    if not c.flags.one_step:
        return CheckRecord(name=name, status="inapplicable",
                           reason="eta >= 1 / lambda_max_0")
    r = series.r_hat
    worst = 0.0
    first = None
    has_upper = c.lambda_min is not None and bool(c.flags.strongly_convex)
    for k in range(len(r) - 1):
        v = lower_step(float(r[k]), c) - float(r[k + 1])
        if has_upper:
            v = max(v, float(r[k + 1]) - upper_step(float(r[k]), c))
        if v > worst:
            worst = v
            if v > EXACT_TOL and first is None:
                first = k
    ok = worst <= EXACT_TOL
    return CheckRecord(name=name, status="pass" if ok else "fail",
                       slack=-worst, first_violation_k=first,
                       tolerance=EXACT_TOL)


def report(checks: list[CheckRecord]) -> VerificationReport:
    if not checks:
        raise VerifyUsageError("no checks to aggregate")
    return VerificationReport(checks=list(checks))
