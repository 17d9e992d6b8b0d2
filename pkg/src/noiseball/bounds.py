"""One-step and long-horizon bounds on the expected squared SGD error.

Everything here is driven by five problem constants (lambda_max_0,
per-component smoothness RMS Lambda, optional strong-convexity modulus
lambda_min, noise level D0) plus the step size eta and the deterministic
initial error R_0.

The one-step maps bracket R_{k+1} in terms of R_k:

    lower_step(R) = (1 - 2 eta lambda_max_0) R - 2 eta^2 Lambda D0 sqrt(R)
                    + eta^2 D0^2
    upper_step(R) = (1 - 2 eta lambda_min + eta^2 Phi^2) R
                    + 2 eta^2 Lambda D0 sqrt(R) + eta^2 D0^2

with Phi^2 = Lambda^2 + lambda_max_0^2 - lambda_min^2.  The upper map
needs strong convexity; the lower map only needs smoothness, which is
why non-convex problems still get an asymptotic floor z0^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .constants import ProblemConstants


class BoundsError(ValueError):
    """Inadmissible step size or misuse of a bound formula."""


class InapplicableError(BoundsError):
    """The requested bound does not apply (missing hypothesis)."""


@dataclass(frozen=True)
class AdmissibilityFlags:
    """Step-size conditions gating each family of bounds."""

    one_step: bool          # eta < 1 / lambda_max_0
    strongly_convex: Optional[bool]  # eta < lambda_min / (Lambda^2 + lambda_max_0^2)
    asymptotic_floor: bool  # eta < 1 / (2 lambda_max_0)
    small_eta: bool         # eta^2 Lambda D0 / (1 - 2 eta lambda_max_0) <= z0

    def to_dict(self) -> dict:
        return {
            "one_step": self.one_step,
            "strongly_convex": self.strongly_convex,
            "asymptotic_floor": self.asymptotic_floor,
            "small_eta": self.small_eta,
        }


@dataclass(frozen=True)
class TheoremConstants:
    """eta-dependent derived quantities for one problem."""

    eta: float
    D0: float
    Lambda: float
    lambda_max_0: float
    lambda_min: Optional[float]
    Phi: float
    alpha: Optional[float]
    z0: float
    z_star: float
    flags: AdmissibilityFlags
    # completed by the strong-convexity ledger (needs R_0)
    R0: Optional[float] = None
    C0: Optional[float] = None
    C1: Optional[float] = None
    C2: Optional[float] = None
    C3: Optional[float] = None
    C4: Optional[float] = None
    beta: Optional[float] = None
    K0: Optional[int] = None

    def to_dict(self) -> dict:
        out = {
            "eta": self.eta, "D0": self.D0, "Lambda": self.Lambda,
            "lambda_max_0": self.lambda_max_0, "lambda_min": self.lambda_min,
            "Phi": self.Phi, "alpha": self.alpha, "z0": self.z0,
            "z0_sq": self.z0 ** 2, "z_star": self.z_star,
            "admissible": self.flags.to_dict(),
        }
        for name in ("R0", "C0", "C1", "C2", "C3", "C4", "beta", "K0"):
            out[name] = getattr(self, name)
        return out


def derive_constants(pc: ProblemConstants, eta: float) -> TheoremConstants:
    """All eta-dependent constants except the R_0-dependent ledger."""
    if eta <= 0:
        raise BoundsError("eta must be positive")
    lam0, lam_min = pc.lambda_max_0, pc.lambda_min
    Lam, D0 = pc.Lambda, pc.D0
    phi_sq = Lam ** 2 + lam0 ** 2 - (lam_min ** 2 if lam_min is not None else 0.0)
    alpha = None
    if lam_min is not None:
        alpha = 1.0 - 2.0 * eta * lam_min + eta ** 2 * phi_sq
    z0 = z0_root(eta, Lam, D0, lam0)
    one_minus = 1.0 - 2.0 * eta * lam0
    z_star = (eta ** 2 * Lam * D0 / one_minus) if one_minus > 0 else math.inf
    flags = AdmissibilityFlags(
        one_step=eta < 1.0 / lam0,
        strongly_convex=(eta < lam_min / (Lam ** 2 + lam0 ** 2)
                         if lam_min is not None else None),
        asymptotic_floor=eta < 1.0 / (2.0 * lam0),
        small_eta=z_star <= z0,
    )
    return TheoremConstants(
        eta=eta, D0=D0, Lambda=Lam, lambda_max_0=lam0, lambda_min=lam_min,
        Phi=math.sqrt(phi_sq), alpha=alpha, z0=z0, z_star=z_star, flags=flags,
    )


def admissibility(c: TheoremConstants) -> AdmissibilityFlags:
    return c.flags


def constants_from_dict(d: dict) -> TheoremConstants:
    """Rebuild derived constants from a serialized ledger (to_dict output)."""
    try:
        pc = ProblemConstants(
            lambda_max_0=float(d["lambda_max_0"]),
            lambda_max_j=np.array([]),
            Lambda=float(d["Lambda"]),
            lambda_min=None if d["lambda_min"] is None else float(d["lambda_min"]),
            D0=float(d["D0"]),
            theta_dagger=np.array([]),
        )
        eta = float(d["eta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BoundsError(f"malformed constants JSON: {exc}") from exc
    c = derive_constants(pc, eta)
    R0 = d.get("R0")
    if R0 is not None and c.lambda_min is not None and c.flags.strongly_convex:
        c = theorem32_ledger(c, float(R0))
    return c


# ---------------------------------------------------------------------------
# one-step maps


def lower_step(R: float, c: TheoremConstants) -> float:
    """Guaranteed floor for R_{k+1} given R_k = R (smoothness only)."""
    if R < 0:
        raise BoundsError("R must be nonnegative")
    eta = c.eta
    return ((1.0 - 2.0 * eta * c.lambda_max_0) * R
            - 2.0 * eta ** 2 * c.Lambda * c.D0 * math.sqrt(R)
            + eta ** 2 * c.D0 ** 2)


def upper_step(R: float, c: TheoremConstants) -> float:
    """Guaranteed cap for R_{k+1} given R_k = R (needs strong convexity)."""
    if R < 0:
        raise BoundsError("R must be nonnegative")
    if c.lambda_min is None:
        raise InapplicableError("upper one-step bound needs strong convexity")
    eta = c.eta
    return (c.alpha * R
            + 2.0 * eta ** 2 * c.Lambda * c.D0 * math.sqrt(R)
            + eta ** 2 * c.D0 ** 2)


# ---------------------------------------------------------------------------
# roots and asymptotic limits


def z0_root(eta: float, Lambda: float, D0: float, lambda_max_0: float) -> float:
    """Positive root of h1(z) = 2 lambda_max_0 z^2 + 2 eta Lambda D0 z - eta D0^2."""
    disc = 4.0 * eta ** 2 * Lambda ** 2 * D0 ** 2 + 8.0 * eta * lambda_max_0 * D0 ** 2
    return (-2.0 * eta * Lambda * D0 + math.sqrt(disc)) / (4.0 * lambda_max_0)


def h1(z: float, c: TheoremConstants) -> float:
    return (2.0 * c.lambda_max_0 * z ** 2
            + 2.0 * c.eta * c.Lambda * c.D0 * z
            - c.eta * c.D0 ** 2)


def h2(z: float, c: TheoremConstants) -> float:
    """lower_step expressed in the sqrt(R) variable: h2(sqrt(R)) = lower_step(R)."""
    return ((1.0 - 2.0 * c.eta * c.lambda_max_0) * z ** 2
            - 2.0 * c.eta ** 2 * c.Lambda * c.D0 * z
            + c.eta ** 2 * c.D0 ** 2)


def z0_bisect(c: TheoremConstants, tol: float = 1e-12) -> float:
    """Positive root of h1 by bisection; cross-check for the closed form."""
    if c.D0 == 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while h1(hi, c) < 0.0:
        hi *= 2.0
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if h1(mid, c) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def refined_asymptotics(c: TheoremConstants) -> tuple[float, float]:
    """(liminf, limsup) refinements; liminf equals z0^2 by construction."""
    if not c.flags.small_eta:
        raise InapplicableError("small-eta condition fails: z* > z0")
    if c.lambda_min is None:
        raise InapplicableError("refined limsup needs strong convexity")
    eta, Lam, D0 = c.eta, c.Lambda, c.D0
    phi_sq = c.Phi ** 2
    num = (2.0 * eta * Lam * D0
           + math.sqrt(max(4.0 * eta ** 2 * (Lam ** 2 * D0 ** 2 - phi_sq * D0 ** 2)
                           + 8.0 * eta * D0 ** 2 * c.lambda_min, 0.0)))
    limsup = (num / (4.0 * c.lambda_min - 2.0 * eta * phi_sq)) ** 2
    return c.z0 ** 2, limsup


def asymptotic_limits(c: TheoremConstants) -> tuple[float, float]:
    """(liminf, limsup) from the strong-convexity ledger (needs C4)."""
    if c.C4 is None:
        raise BoundsError("ledger incomplete: call theorem32_ledger first")
    eta, D0, Lam = c.eta, c.D0, c.Lambda
    tail = 2.0 * math.sqrt(c.C4) * eta ** 1.5 * Lam * D0
    limsup = (eta * D0 ** 2 + tail) / (2.0 * c.lambda_min - eta * c.Phi ** 2)
    liminf = max((eta * D0 ** 2 - tail) / (2.0 * c.lambda_max_0), 0.0)
    return liminf, limsup


# ---------------------------------------------------------------------------
# strong-convexity ledger and closed-form envelopes


def theorem32_ledger(c: TheoremConstants, R0: float) -> TheoremConstants:
    """Fill in C0..C4, beta and the burn-in horizon K0."""
    if c.lambda_min is None or not c.flags.strongly_convex:
        raise BoundsError(
            "inadmissible: requires lambda_min and "
            "eta < lambda_min / (Lambda^2 + lambda_max_0^2)")
    if R0 < 0:
        raise BoundsError("R0 must be nonnegative")
    eta, D0, Lam = c.eta, c.D0, c.Lambda
    denom = 2.0 * c.lambda_min - eta * c.Phi ** 2
    C0 = ((eta * Lam * D0
           + math.sqrt(eta ** 2 * Lam ** 2 * D0 ** 2 + eta * D0 ** 2 * denom))
          / denom)
    C1 = max(R0, C0 ** 2)
    root = math.sqrt(C1 + (D0 ** 2 + 0.5) * eta ** 2)
    C2 = (2.0 * Lam * D0 * root + D0 ** 2) / denom
    C3 = (-2.0 * Lam * D0 * root + D0 ** 2) / (2.0 * c.lambda_max_0)
    C4 = R0 + C2
    beta = 2.0 * eta ** 2 * Lam * D0 * root + eta ** 2 * D0 ** 2
    K0 = math.ceil(math.log(eta) / math.log(1.0 - eta * c.lambda_min))
    return replace(c, R0=R0, C0=C0, C1=C1, C2=C2, C3=C3, C4=C4, beta=beta, K0=K0)


@dataclass(frozen=True)
class EnvelopeSeries:
    """Per-iteration certified bracket [lower_k, upper_k] for R_k."""

    lower: np.ndarray
    upper: np.ndarray  # +inf where no upper bound applies
    mode: str          # "recursive-propagated" | "closed-form" | "one-step-anchored"
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.lower)


def closed_form_envelopes(c: TheoremConstants, K: int) -> EnvelopeSeries:
    """Two-regime geometric envelopes of the strong-convexity analysis.

    Below the burn-in horizon K0 the envelopes decay geometrically from
    R_0 with offsets C2 eta / C3 eta; from K0 on they are re-anchored at
    the certified cap R_{K0} <= C4 eta with the asymptotic tail offsets.
    The switch at K0 is deliberately discontinuous; both one-sided values
    live in ``meta``.
    """
    if c.K0 is None:
        raise BoundsError("ledger incomplete: call theorem32_ledger first")
    eta, R0 = c.eta, c.R0
    contr = 1.0 - 2.0 * eta * c.lambda_max_0
    liminf_tail, limsup_tail = asymptotic_limits(c)
    ks = np.arange(K + 1)
    upper = np.where(
        ks < c.K0,
        c.alpha ** ks * R0 + c.C2 * eta,
        c.alpha ** np.maximum(ks - c.K0, 0) * c.C4 * eta + limsup_tail,
    )
    lower = np.where(
        ks < c.K0,
        contr ** ks * R0 + c.C3 * eta,
        liminf_tail,
    )
    lower = np.maximum(lower, 0.0)
    meta = {
        "K0": c.K0,
        "upper_at_K0_small_k": c.alpha ** c.K0 * R0 + c.C2 * eta,
        "upper_at_K0_large_k": c.C4 * eta + limsup_tail,
    }
    return EnvelopeSeries(lower=lower, upper=upper, mode="closed-form", meta=meta)


def propagated_envelopes(c: TheoremConstants, R0: float, K: int) -> EnvelopeSeries:
    """Interval propagation of the one-step maps.

    The upper map is increasing in R, so U_{k+1} = upper_step(U_k) is
    sound.  The lower map is not monotone (in sqrt(R) it is a quadratic
    with vertex at z*), so L_{k+1} takes the minimum of the map over the
    whole certified interval [L_k, U_k].
    """
    if not c.flags.one_step:
        raise BoundsError("inadmissible: requires eta < 1 / lambda_max_0")
    if R0 < 0:
        raise BoundsError("R0 must be nonnegative")
    has_upper = c.lambda_min is not None and c.flags.strongly_convex
    lower = np.empty(K + 1)
    upper = np.full(K + 1, math.inf)
    lower[0] = R0
    if has_upper:
        upper[0] = R0
    L, U = R0, R0 if has_upper else math.inf
    a = 1.0 - 2.0 * c.eta * c.lambda_max_0  # quadratic coefficient of h2
    for k in range(1, K + 1):
        lo_sqrt = math.sqrt(L)
        hi_sqrt = math.sqrt(U) if math.isfinite(U) else math.inf
        candidates = [h2(lo_sqrt, c)]
        if math.isfinite(hi_sqrt):
            candidates.append(h2(hi_sqrt, c))
        elif a <= 0.0:
            candidates.append(-math.inf)  # concave tail: no finite floor
        if a > 0.0 and lo_sqrt <= c.z_star <= hi_sqrt:
            candidates.append(h2(c.z_star, c))
        L = max(min(candidates), 0.0)
        if has_upper:
            U = upper_step(U, c)
        lower[k] = L
        upper[k] = U
    return EnvelopeSeries(lower=lower, upper=upper, mode="recursive-propagated")


def one_step_bounds(r_hat: np.ndarray, c: TheoremConstants) -> EnvelopeSeries:
    """Bracket for R_{k+1} anchored at the empirical estimate of R_k.

    Entry 0 is the degenerate bracket [r_hat_0, r_hat_0]; entry k >= 1 is
    [lower_step(r_hat_{k-1}), upper_step(r_hat_{k-1})], the upper side
    +inf without strong convexity.
    """
    r_hat = np.asarray(r_hat, dtype=float)
    if r_hat.size == 0:
        raise BoundsError("empty series")
    n = r_hat.size
    lower = np.empty(n)
    upper = np.full(n, math.inf)
    lower[0] = upper[0] = r_hat[0]
    has_upper = c.lambda_min is not None
    for k in range(1, n):
        R = max(float(r_hat[k - 1]), 0.0)
        lower[k] = max(lower_step(R, c), 0.0)
        if has_upper:
            upper[k] = upper_step(R, c)
    return EnvelopeSeries(lower=lower, upper=upper, mode="one-step-anchored")


# ---------------------------------------------------------------------------
# threshold behavior of exact series


@dataclass(frozen=True)
class ThresholdReport:
    """Monotonicity/threshold properties of an exact error sequence."""

    above_min_floor: bool        # R_k > min(R_0, z0^2) for all k >= 1
    increasing_below: bool       # R_k < z0^2 implies R_{k+1} > R_k
    absorbing_above: bool        # once >= z0^2, stays >= z0^2
    first_crossing: Optional[int]
    first_violation: Optional[int]

    @property
    def all_pass(self) -> bool:
        return self.above_min_floor and self.increasing_below and self.absorbing_above


def theorem34_classify(R: np.ndarray, c: TheoremConstants,
                       tol: float = 1e-12) -> ThresholdReport:
    """Check the threshold properties on an exact series."""
    if not c.flags.small_eta:
        raise InapplicableError("small-eta condition fails: z* > z0")
    R = np.asarray(R, dtype=float)
    z0_sq = c.z0 ** 2
    floor = min(float(R[0]), z0_sq)
    first_violation = None

    above = True
    for k in range(1, R.size):
        if not R[k] > floor - tol:
            above = False
            first_violation = first_violation or k
            break

    increasing = True
    for k in range(R.size - 1):
        if R[k] < z0_sq - tol and not R[k + 1] > R[k] - tol:
            increasing = False
            first_violation = first_violation or k
            break

    crossing = None
    absorbing = True
    for k in range(R.size):
        if crossing is None:
            if R[k] >= z0_sq - tol:
                crossing = k
        elif not R[k] >= z0_sq - tol:
            absorbing = False
            first_violation = first_violation or k
            break

    return ThresholdReport(
        above_min_floor=above, increasing_below=increasing,
        absorbing_above=absorbing, first_crossing=crossing,
        first_violation=first_violation,
    )
