"""Problem-level constants: smoothness, strong convexity, D0, Lambda.

For the built-in families the constants are analytic:

* linear regression: lambda_max_j = x_j^T x_j, lambda_max_0 and
  lambda_min are the extreme eigenvalues of X X^T / J;
* logistic regression (unit L2 weight): lambda_max_j = |x_j|^2 + 1,
  lambda_max_0 = 1 + mean |x_j|^2, lambda_min = 1;
* piecewise quartic: sup |f''| over the line, attained at the right
  junction (= 54); non-convex, so no lambda_min.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problems import FiniteSumProblem, ProblemError, solve_optimum

OPT_GRAD_TOL = 1e-8


@dataclass(frozen=True)
class ProblemConstants:
    lambda_max_0: float
    lambda_max_j: np.ndarray
    Lambda: float
    lambda_min: Optional[float]
    D0: float
    theta_dagger: np.ndarray

    def to_dict(self) -> dict:
        return {
            "lambda_max_0": self.lambda_max_0,
            "lambda_max_j": [float(v) for v in self.lambda_max_j],
            "Lambda": self.Lambda,
            "lambda_min": self.lambda_min,
            "D0": self.D0,
            "theta_dagger": [float(v) for v in self.theta_dagger],
        }


def extreme_eigs(M: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[float, float]:
    """(smallest, largest) eigenvalue of a symmetric matrix, d <= 64.

    Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
    below ``tol`` (relative to the matrix norm); deterministic and gives
    both extremes at once.
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ProblemError("matrix must be square")
    if A.shape[0] > 64:
        raise ProblemError("Jacobi eigensolver supports d <= 64")
    if not np.allclose(A, A.T, atol=1e-12):
        raise ProblemError("matrix must be symmetric")
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0]), float(A[0, 0])
    scale = max(float(np.linalg.norm(A)), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(max(float(np.sum(A * A) - np.sum(np.diag(A) ** 2)), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                # apply the rotation to rows/columns p and q in place
                row_p, row_q = A[p].copy(), A[q].copy()
                A[p] = c * row_p - s * row_q
                A[q] = s * row_p + c * row_q
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
    evals = np.sort(np.diag(A))
    return float(evals[0]), float(evals[-1])


def component_smoothness(problem: FiniteSumProblem) -> np.ndarray:
    X = problem.data.get("X")
    if problem.kind == "linreg":
        return np.sum(X * X, axis=0)
    if problem.kind == "logistic":
        return np.sum(X * X, axis=0) + 1.0
    if problem.kind == "quartic":
        return np.array([_quartic_curvature_sup(), _quartic_curvature_sup()])
    raise ProblemError(
        f"no analytic smoothness constants for problem kind {problem.kind!r}")


def global_smoothness(problem: FiniteSumProblem) -> float:
    X = problem.data.get("X")
    if problem.kind == "linreg":
        return extreme_eigs(X @ X.T / problem.J)[1]
    if problem.kind == "logistic":
        return 1.0 + float(np.mean(np.sum(X * X, axis=0)))
    if problem.kind == "quartic":
        return _quartic_curvature_sup()
    raise ProblemError(
        f"no analytic smoothness constant for problem kind {problem.kind!r}")


def strong_convexity(problem: FiniteSumProblem) -> Optional[float]:
    if problem.kind == "linreg":
        X = problem.data["X"]
        return extreme_eigs(X @ X.T / problem.J)[0]
    if problem.kind == "logistic":
        return 1.0
    if problem.kind == "quartic":
        return None  # f''(-1/6) = -7/3 < 0
    raise ProblemError(
        f"no analytic convexity constant for problem kind {problem.kind!r}")


def compute_D0(problem: FiniteSumProblem, theta_dagger: np.ndarray) -> float:
    """Root-mean-square component gradient norm at the optimum."""
    theta_dagger = np.asarray(theta_dagger, dtype=float)
    g = problem.grad_full(theta_dagger)
    if np.linalg.norm(g) > OPT_GRAD_TOL:
        raise ProblemError(
            f"theta is not an optimum: |grad f| = {np.linalg.norm(g):.3e} > {OPT_GRAD_TOL}")
    acc = 0.0
    for j in range(problem.J):
        acc += float(np.sum(problem.grad_component(j, theta_dagger) ** 2))
    return math.sqrt(acc / problem.J)


def problem_constants(problem: FiniteSumProblem) -> ProblemConstants:
    theta_dagger = solve_optimum(problem)
    lam_j = component_smoothness(problem)
    return ProblemConstants(
        lambda_max_0=global_smoothness(problem),
        lambda_max_j=lam_j,
        Lambda=math.sqrt(float(np.mean(lam_j ** 2))),
        lambda_min=strong_convexity(problem),
        D0=compute_D0(problem, theta_dagger),
        theta_dagger=theta_dagger,
    )


def _quartic_curvature_sup() -> float:
    # |12 t^2 + 4 t - 2| on [-2, 2]: candidates are the endpoints and the
    # vertex t = -1/6; the linear tails outside contribute 0.
    return max(abs(12.0 * t * t + 4.0 * t - 2.0) for t in (-2.0, -1.0 / 6.0, 2.0))
