"""Finite-sum objectives: f(theta) = (1/J) sum_j f_j(theta).

Built-in families: least-squares linear regression, L2-regularized
logistic regression, and a one-dimensional piecewise quartic with two
local minima.  Each family carries analytic component gradients and
enough structure for the constants module to derive smoothness and
convexity certificates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .rng import Rng

GRAD_TOL = 1e-8


class ProblemError(ValueError):
    """Invalid problem construction or usage."""


def sigmoid(x: float) -> float:
    # branch avoids overflow in exp for large |x|
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class FiniteSumProblem:
    """A finite-sum objective with J components on R^d.

    ``grad_component`` maps (j, theta) -> d-vector with 0-based j.
    ``grad_component_batch`` (optional) maps (indices[M], Theta[d, M]) ->
    gradients [d, M] for lockstep simulation.  ``kind`` tags the built-in
    families so the simulation backends can pick a fast kernel.
    """

    J: int
    d: int
    grad_component: Callable[[int, np.ndarray], np.ndarray]
    value_component: Optional[Callable[[int, np.ndarray], float]] = None
    theta_dagger: Optional[np.ndarray] = None
    kind: str = "custom"
    data: dict = field(default_factory=dict)
    grad_component_batch: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.J < 1 or self.d < 1:
            raise ProblemError("J and d must be >= 1")

    def grad_full(self, theta: np.ndarray) -> np.ndarray:
        """Mean of component gradients."""
        theta = np.asarray(theta, dtype=float)
        g = np.zeros(self.d)
        for j in range(self.J):
            g += self.grad_component(j, theta)
        return g / self.J

    def check_index(self, j: int) -> None:
        if not 0 <= j < self.J:
            raise ProblemError(f"component index {j} out of range [0, {self.J})")


# ---------------------------------------------------------------------------
# linear regression


def linear_regression(X: np.ndarray, y: np.ndarray) -> FiniteSumProblem:
    """Least squares: f_j = 0.5 (x_j^T theta - y_j)^2, X of shape (d, J)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[1] != y.shape[0]:
        raise ProblemError("X must be (d, J) with y of length J")
    d, J = X.shape
    gram = X @ X.T
    evals = np.linalg.eigvalsh(gram)
    if evals[0] <= 1e-12 * max(evals[-1], 1e-300):
        raise ProblemError("X X^T is (numerically) rank deficient")
    theta_dagger = np.linalg.solve(gram, X @ y)

    def grad(j: int, theta: np.ndarray) -> np.ndarray:
        x = X[:, j]
        return x * (x @ theta - y[j])

    def grad_batch(idx: np.ndarray, Theta: np.ndarray) -> np.ndarray:
        Xg = X[:, idx]
        r = np.einsum("im,im->m", Xg, Theta) - y[idx]
        return Xg * r

    def value(j: int, theta: np.ndarray) -> float:
        return 0.5 * (X[:, j] @ theta - y[j]) ** 2

    return FiniteSumProblem(
        J=J, d=d, grad_component=grad, value_component=value,
        theta_dagger=theta_dagger, kind="linreg",
        data={"X": X, "y": y}, grad_component_batch=grad_batch,
    )


@dataclass(frozen=True)
class SyntheticLinRegConfig:
    """Recipe for a random unit-sphere-feature regression dataset."""

    J: int
    d: int
    theta_star: np.ndarray
    noise_std: float
    seed: int

    def __post_init__(self):
        if self.noise_std < 0:
            raise ProblemError("noise_std must be >= 0")


def generate_linreg_dataset(config: SyntheticLinRegConfig) -> FiniteSumProblem:
    """Gaussian features normalized to the unit sphere, Gaussian label noise.

    Deterministic given the seed: features first (2 normals per draw,
    redrawn on a zero-norm vector), then one noise normal per label.
    """
    rng = Rng(config.seed)
    theta_star = np.asarray(config.theta_star, dtype=float)
    X = np.empty((config.d, config.J))
    for j in range(config.J):
        while True:
            v = rng.normal(config.d)
            nrm = np.linalg.norm(v)
            if nrm > 0.0:
                break
        X[:, j] = v / nrm
    eps = np.array([rng.normal_pair()[0] for _ in range(config.J)])
    y = X.T @ theta_star + config.noise_std * eps
    prob = linear_regression(X, y)
    prob.data["theta_star"] = theta_star
    return prob


# ---------------------------------------------------------------------------
# logistic regression


def logistic_regression(X: np.ndarray, y: np.ndarray) -> FiniteSumProblem:
    """L2-regularized logistic loss (unit weight), labels in {0, 1}."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[1] != y.shape[0]:
        raise ProblemError("X must be (d, J) with y of length J")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ProblemError("labels must be exactly 0 or 1")
    d, J = X.shape

    def grad(j: int, theta: np.ndarray) -> np.ndarray:
        x = X[:, j]
        return (sigmoid(float(x @ theta)) - y[j]) * x + theta

    def grad_batch(idx: np.ndarray, Theta: np.ndarray) -> np.ndarray:
        Xg = X[:, idx]
        s = np.einsum("im,im->m", Xg, Theta)
        p = np.where(s >= 0, 1.0 / (1.0 + np.exp(-np.abs(s))),
                     np.exp(-np.abs(s)) / (1.0 + np.exp(-np.abs(s))))
        return Xg * (p - y[idx]) + Theta

    def value(j: int, theta: np.ndarray) -> float:
        s = float(X[:, j] @ theta)
        # log(1 + exp(.)) written stably
        softplus = max(s, 0.0) + math.log1p(math.exp(-abs(s)))
        return softplus - y[j] * s + 0.5 * float(theta @ theta)

    return FiniteSumProblem(
        J=J, d=d, grad_component=grad, value_component=value,
        theta_dagger=None, kind="logistic",
        data={"X": X, "y": y}, grad_component_batch=grad_batch,
    )


# ---------------------------------------------------------------------------
# piecewise quartic


@dataclass(frozen=True)
class PiecewiseQuarticSpec:
    """f = theta^4 + (2/3) theta^3 - theta^2 on [-2, 2], linear outside.

    Components f_1 = f + theta, f_2 = f - theta.  The linear extensions
    continue value and slope at the junctions, so everything is C^1.
    """

    lo: float = -2.0
    hi: float = 2.0
    # core cubic derivative coefficients of f': 4 t^3 + 2 t^2 - 2 t
    slope_hi: float = 36.0   # f'(2)
    slope_lo: float = -20.0  # f'(-2)
    value_hi: float = 52.0 / 3.0
    value_lo: float = 20.0 / 3.0

    def f_value(self, t: float, component: int = 0) -> float:
        """component 0 -> f, 1 -> f_1 (= f + t), 2 -> f_2 (= f - t)."""
        shift = {0: 0.0, 1: t, 2: -t}[component]
        if t > self.hi:
            return self.value_hi + self.slope_hi * (t - self.hi) + shift
        if t < self.lo:
            return self.value_lo + self.slope_lo * (t - self.lo) + shift
        return ((t + 2.0 / 3.0) * t - 1.0) * t * t + shift

    def f_slope(self, t: float, component: int = 0) -> float:
        shift = {0: 0.0, 1: 1.0, 2: -1.0}[component]
        if t > self.hi:
            return self.slope_hi + shift
        if t < self.lo:
            return self.slope_lo + shift
        return ((4.0 * t + 2.0) * t - 2.0) * t + shift


def build_quartic() -> PiecewiseQuarticSpec:
    return PiecewiseQuarticSpec()


def quartic_problem() -> FiniteSumProblem:
    """Two-component non-convex scalar problem; global minimum at -1."""
    spec = build_quartic()

    def grad(j: int, theta: np.ndarray) -> np.ndarray:
        return np.array([spec.f_slope(float(theta[0]), j + 1)])

    def grad_batch(idx: np.ndarray, Theta: np.ndarray) -> np.ndarray:
        t = Theta[0]
        core = ((4.0 * t + 2.0) * t - 2.0) * t
        g = np.where(t > spec.hi, spec.slope_hi,
                     np.where(t < spec.lo, spec.slope_lo, core))
        return (g + np.where(idx == 0, 1.0, -1.0))[None, :]

    def value(j: int, theta: np.ndarray) -> float:
        return spec.f_value(float(theta[0]), j + 1)

    return FiniteSumProblem(
        J=2, d=1, grad_component=grad, value_component=value,
        theta_dagger=np.array([-1.0]), kind="quartic",
        data={"spec": spec}, grad_component_batch=grad_batch,
    )


# ---------------------------------------------------------------------------
# operations


def grad_component(problem: FiniteSumProblem, j: int, theta: np.ndarray) -> np.ndarray:
    problem.check_index(j)
    return problem.grad_component(j, np.asarray(theta, dtype=float))


def grad_full(problem: FiniteSumProblem, theta: np.ndarray) -> np.ndarray:
    return problem.grad_full(theta)


def solve_optimum(problem: FiniteSumProblem, tol: float = 1e-10,
                  max_iter: int = 2_000_000) -> np.ndarray:
    """Optimum of the full objective.

    Linear regression and the quartic carry analytic optima.  Logistic
    regression is solved by full-gradient descent with step 1/lambda_max_0;
    strong convexity (modulus 1 from the regularizer) guarantees linear
    convergence.
    """
    if problem.theta_dagger is not None:
        return np.array(problem.theta_dagger, dtype=float)
    if problem.kind == "logistic":
        X = problem.data["X"]
        lam0 = 1.0 + float(np.mean(np.sum(X * X, axis=0)))
        theta = np.zeros(problem.d)
        step = 1.0 / lam0
        for _ in range(max_iter):
            g = problem.grad_full(theta)
            if np.linalg.norm(g) <= tol:
                return theta
            theta = theta - step * g
        raise ProblemError("logistic optimum solver exceeded iteration cap")
    raise ProblemError(f"no optimum available for problem kind {problem.kind!r}")


# ---------------------------------------------------------------------------
# JSON problem specs


def problem_from_spec(spec: dict) -> FiniteSumProblem:
    """Build a problem from its JSON description.

    Matrices are row-major arrays-of-arrays with one column per sample
    (X is d x J).
    """
    try:
        kind = spec["type"]
    except (TypeError, KeyError):
        raise ProblemError("problem spec must be an object with a 'type' field")
    if kind == "linear_regression":
        return linear_regression(np.array(spec["X"], dtype=float),
                                 np.array(spec["y"], dtype=float))
    if kind == "logistic_regression":
        return logistic_regression(np.array(spec["X"], dtype=float),
                                   np.array(spec["y"], dtype=float))
    if kind == "quartic":
        return quartic_problem()
    if kind == "synthetic_linreg":
        cfg = SyntheticLinRegConfig(
            J=int(spec["J"]), d=int(spec["d"]),
            theta_star=np.array(spec["theta_star"], dtype=float),
            noise_std=float(spec["noise_std"]), seed=int(spec["seed"]),
        )
        return generate_linreg_dataset(cfg)
    raise ProblemError(f"unknown problem type {kind!r}")


def load_problem(path) -> FiniteSumProblem:
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"invalid problem spec JSON: {exc}") from exc
    return problem_from_spec(spec)


def toy_two_component() -> FiniteSumProblem:
    """f_1 = (theta - 1)^2 / 2, f_2 = (theta + 1)^2 / 2; optimum 0, D0 = 1."""
    return linear_regression(np.array([[1.0, 1.0]]), np.array([1.0, -1.0]))
