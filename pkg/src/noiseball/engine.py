"""Constant step-size SGD runner and exact-expectation oracles.

Monte-Carlo estimation of the expected squared error R_k is fully
deterministic: per-trial RNG streams are derived from (master seed,
trial index), trials are processed in fixed-size blocks, and every
reduction over trials is a fixed binary tree, so the result is
bit-identical no matter how blocks are scheduled across threads.

Two sampling-free oracles validate the theory: exhaustive enumeration
of all J^k index paths (any problem, small k), and the exact first/second
moment recursion for quadratic losses (any k).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import backends
from .problems import FiniteSumProblem, ProblemError, solve_optimum
from .rng import stream_states, vec_index

ENUMERATION_GUARD = 10 ** 7


class DivergenceError(RuntimeError):
    """An iterate left the representable range."""

    def __init__(self, iteration: int, trials: Sequence[int]):
        self.iteration = iteration
        self.trials = list(trials)
        super().__init__(
            f"divergence at iteration {iteration} in trials {self.trials}")


@dataclass(frozen=True)
class RunConfig:
    """Simulation parameters; ``trials`` is the Monte-Carlo sample size."""

    eta: float
    iters: int
    trials: int
    theta0: np.ndarray
    seed: int
    block_size: int = 256   # fixed: part of the deterministic reduction tree
    chunk_steps: int = 2048

    def __post_init__(self):
        if self.eta <= 0 or self.iters < 1 or self.trials < 1:
            raise ProblemError("require eta > 0, iters >= 1, trials >= 1")


@dataclass
class ErrorSeries:
    """Per-iteration estimate of R_k with its Monte-Carlo standard error."""

    r_hat: np.ndarray
    std_err: np.ndarray
    exact: bool
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.r_hat.size)

    def __len__(self) -> int:
        return self.r_hat.size


@dataclass
class SimulationResult:
    series: ErrorSeries
    final_theta: np.ndarray               # (d, trials)
    snapshots: dict[int, np.ndarray]      # iteration -> (d, trials)


def pairwise_sum(a: np.ndarray, axis: int = 0) -> np.ndarray:
    """Sum along ``axis`` with a fixed binary reduction tree."""
    a = np.moveaxis(np.asarray(a, dtype=float), axis, 0)
    return _pairwise(a)


def _pairwise(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    if n == 1:
        return np.array(a[0], dtype=float)
    half = n // 2
    return _pairwise(a[:half]) + _pairwise(a[half:])


# ---------------------------------------------------------------------------
# kernels


def _generic_chunk(problem: FiniteSumProblem, theta_dag: np.ndarray, eta: float):
    """Fallback lockstep kernel for problems without a compiled family."""

    def chunk(states, Theta, steps, out):
        for s in range(steps):
            idx = vec_index(states, problem.J)
            G = _batch_grad(problem, idx, Theta)
            Theta -= eta * G
            out[s] = np.sum((Theta - theta_dag[:, None]) ** 2, axis=0)

    return chunk


def _batch_grad(problem: FiniteSumProblem, idx: np.ndarray, Theta: np.ndarray) -> np.ndarray:
    if problem.grad_component_batch is not None:
        return problem.grad_component_batch(idx, Theta)
    G = np.empty_like(Theta)
    for m in range(Theta.shape[1]):
        G[:, m] = problem.grad_component(int(idx[m]), Theta[:, m])
    return G


def make_kernel(problem: FiniteSumProblem, theta_dag: np.ndarray, eta: float,
                impl=None):
    """Bind a (states, Theta, steps, out) kernel for this problem."""
    impl = impl if impl is not None else backends.get_backend()
    if problem.kind == "linreg":
        X = np.ascontiguousarray(problem.data["X"])
        y = np.ascontiguousarray(problem.data["y"])
        return lambda st, Th, n, out: impl.linreg_chunk(
            st, Th, X, y, theta_dag, eta, n, out)
    if problem.kind == "quartic":
        return lambda st, Th, n, out: impl.quartic_chunk(
            st, Th, theta_dag, eta, n, out)
    if problem.kind == "logistic":
        X = np.ascontiguousarray(problem.data["X"])
        y = np.ascontiguousarray(problem.data["y"])
        return lambda st, Th, n, out: impl.logistic_chunk(
            st, Th, X, y, theta_dag, eta, n, out)
    return _generic_chunk(problem, theta_dag, eta)


# ---------------------------------------------------------------------------
# block execution


def _initial_distance(theta0: np.ndarray, theta_dag: np.ndarray) -> float:
    dist = 0.0
    for i in range(theta0.size):
        dd = theta0[i] - theta_dag[i]
        dist += dd * dd
    return dist


def _run_block(problem, config: RunConfig, theta_dag, trial_ids, kernel,
               snapshot_iters, collect_distances=False):
    """Advance one block of trials over all iterations.

    Returns per-iteration (sum, sum-of-squares) over the block's trials,
    the final parameters, requested snapshots and, optionally, the raw
    per-trial distance matrix (small runs only).
    """
    n_trials = len(trial_ids)
    K = config.iters
    states = stream_states(config.seed, np.asarray(trial_ids))
    Theta = np.ascontiguousarray(
        np.tile(np.asarray(config.theta0, float)[:, None], (1, n_trials)))
    sums = np.empty(K + 1)
    sqsums = np.empty(K + 1)
    d0 = np.full(n_trials, _initial_distance(config.theta0, theta_dag))
    sums[0] = pairwise_sum(d0)
    sqsums[0] = pairwise_sum(d0 * d0)
    raw = [d0] if collect_distances else None
    snapshots = {}
    snaps = sorted(s for s in set(snapshot_iters) if 0 <= s <= K)
    if snaps and snaps[0] == 0:
        snapshots[0] = Theta.copy()
        snaps = snaps[1:]
    buf = np.empty((config.chunk_steps, n_trials))
    k = 0
    while k < K:
        stop = min(k + config.chunk_steps, K)
        if snaps:
            stop = min(stop, snaps[0])
        n = stop - k
        kernel(states, Theta, n, buf[:n])
        chunk = buf[:n]
        finite = np.isfinite(chunk)
        if not finite.all():
            bad_step = int(np.nonzero(~finite.all(axis=1))[0][0])
            bad = [int(trial_ids[m]) for m in np.nonzero(~finite[bad_step])[0]]
            raise DivergenceError(k + bad_step + 1, bad)
        sums[k + 1:stop + 1] = pairwise_sum(chunk, axis=1)
        sqsums[k + 1:stop + 1] = pairwise_sum(chunk * chunk, axis=1)
        if collect_distances:
            raw.append(chunk.copy())
        if snaps and stop == snaps[0]:
            snapshots[stop] = Theta.copy()
            snaps = snaps[1:]
        k = stop
    distances = np.vstack(raw) if collect_distances else None
    return sums, sqsums, Theta, snapshots, distances


def simulate(problem: FiniteSumProblem, config: RunConfig, threads: int = 1,
             snapshot_iters: Sequence[int] = (), impl=None) -> SimulationResult:
    """Monte-Carlo SGD over ``config.trials`` independent trials."""
    theta_dag = np.ascontiguousarray(solve_optimum(problem))
    kernel = make_kernel(problem, theta_dag, config.eta, impl)
    M = config.trials
    blocks = [np.arange(b, min(b + config.block_size, M))
              for b in range(0, M, config.block_size)]

    def job(ids):
        return _run_block(problem, config, theta_dag, ids, kernel, snapshot_iters)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, blocks))
    else:
        results = [job(ids) for ids in blocks]

    sums = pairwise_sum(np.stack([r[0] for r in results]))
    sqsums = pairwise_sum(np.stack([r[1] for r in results]))
    r_hat = sums / M
    meta = {
        "eta": config.eta, "trials": M, "seed": config.seed,
        "problem": problem.kind, "backend": (impl or backends.get_backend()).NAME,
    }
    if M >= 2:
        var = np.maximum(sqsums - sums * sums / M, 0.0) / (M - 1)
        std_err = np.sqrt(var / M)
    else:
        std_err = np.zeros_like(r_hat)
        meta["single_trial_warning"] = True
    series = ErrorSeries(r_hat=r_hat, std_err=std_err, exact=False, meta=meta)
    final_theta = np.concatenate([r[2] for r in results], axis=1)
    snapshots: dict[int, np.ndarray] = {}
    for key in results[0][3]:
        snapshots[key] = np.concatenate([r[3][key] for r in results], axis=1)
    return SimulationResult(series=series, final_theta=final_theta,
                            snapshots=snapshots)


def monte_carlo_error(problem: FiniteSumProblem, config: RunConfig,
                      threads: int = 1) -> ErrorSeries:
    return simulate(problem, config, threads=threads).series


def run_trial(problem: FiniteSumProblem, config: RunConfig,
              trial_index: int) -> np.ndarray:
    """Squared distances |theta_k - theta^opt|^2 for one trial, k = 0..K."""
    theta_dag = np.ascontiguousarray(solve_optimum(problem))
    kernel = make_kernel(problem, theta_dag, config.eta)
    sums, _, _, _, _ = _run_block(
        problem, config, theta_dag, np.array([trial_index]), kernel, ())
    return sums  # block of one trial: the sum is the trial's distance


def sgd_step(problem: FiniteSumProblem, theta: np.ndarray, eta: float,
             j: int) -> np.ndarray:
    """One update theta - eta * grad f_j(theta)."""
    problem.check_index(j)
    if eta <= 0:
        raise ProblemError("eta must be positive")
    theta = np.asarray(theta, dtype=float)
    if not np.isfinite(theta).all():
        raise DivergenceError(0, [])
    return theta - eta * problem.grad_component(j, theta)


# ---------------------------------------------------------------------------
# exact oracles


def exact_error(problem: FiniteSumProblem, eta: float, theta0: np.ndarray,
                k_max: int, guard: int = ENUMERATION_GUARD) -> ErrorSeries:
    """R_k by exhaustive enumeration of all J^k equally likely index paths."""
    if problem.J ** k_max > guard:
        raise ProblemError(
            f"J^k_max = {problem.J}^{k_max} exceeds the enumeration guard "
            f"{guard}; use the quadratic-moment oracle for regression problems")
    theta_dag = solve_optimum(problem)
    Theta = np.asarray(theta0, dtype=float)[:, None].copy()
    r = [float(np.sum((Theta[:, 0] - theta_dag) ** 2))]
    for _ in range(k_max):
        n = Theta.shape[1]
        new = np.empty((problem.d, n * problem.J))
        for j in range(problem.J):
            G = _batch_grad(problem, np.full(n, j, dtype=np.int64), Theta)
            new[:, j * n:(j + 1) * n] = Theta - eta * G
        Theta = new
        r.append(float(np.mean(np.sum((Theta - theta_dag[:, None]) ** 2, axis=0))))
    return ErrorSeries(r_hat=np.array(r), std_err=np.zeros(k_max + 1),
                       exact=True, meta={"eta": eta, "oracle": "enumerate",
                                         "problem": problem.kind})


def exact_error_quadratic(problem: FiniteSumProblem, eta: float,
                          theta0: np.ndarray, k_max: int) -> ErrorSeries:
    """R_k for quadratic losses via the exact error-moment recursion.

    The SGD error e = theta - theta^opt is affine under each component
    update, e' = (I - eta A_j) e - eta b_j with A_j = x_j x_j^T and
    b_j = grad f_j(theta^opt), so its first and second moments close:

        m_{k+1} = (I - eta Abar) m_k
        M_{k+1} = mean_j [ B_j M_k B_j - eta (B_j m_k b_j^T + b_j m_k^T B_j)
                           + eta^2 b_j b_j^T ],  B_j = I - eta A_j

    and R_k = trace(M_k).
    """
    if problem.kind != "linreg":
        raise ProblemError("quadratic-moment oracle requires linear regression")
    X = problem.data["X"]
    y = problem.data["y"]
    d, J = X.shape
    theta_dag = problem.theta_dagger
    I = np.eye(d)
    Bs = [I - eta * np.outer(X[:, j], X[:, j]) for j in range(J)]
    bs = [X[:, j] * (X[:, j] @ theta_dag - y[j]) for j in range(J)]
    Abar = X @ X.T / J
    m = np.asarray(theta0, dtype=float) - theta_dag
    M2 = np.outer(m, m)
    r = [float(np.trace(M2))]
    for _ in range(k_max):
        acc = np.zeros((d, d))
        for B, b in zip(Bs, bs):
            Bm = B @ m
            acc += (B @ M2 @ B
                    - eta * (np.outer(Bm, b) + np.outer(b, Bm))
                    + eta ** 2 * np.outer(b, b))
        M2 = acc / J
        m = (I - eta * Abar) @ m
        r.append(float(np.trace(M2)))
    return ErrorSeries(r_hat=np.array(r), std_err=np.zeros(k_max + 1),
                       exact=True, meta={"eta": eta, "oracle": "quadratic",
                                         "problem": problem.kind})
