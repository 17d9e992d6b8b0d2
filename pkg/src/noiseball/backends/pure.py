"""Pure numpy SGD kernels: all trials of a block advance in lockstep.

Per-element arithmetic is written in the exact order the compiled
kernels use (explicit loops over the feature dimension, no fused
reductions), so the two backends produce bit-identical trajectories for
the polynomial-gradient families.
"""

from __future__ import annotations

import numpy as np

from ..rng import vec_index

NAME = "pure"

QUARTIC_HI = 2.0
QUARTIC_LO = -2.0
QUARTIC_SLOPE_HI = 36.0
QUARTIC_SLOPE_LO = -20.0


def linreg_chunk(states, Theta, X, y, theta_dag, eta, steps, out):
    """Advance least-squares SGD by ``steps``; squared distances into out."""
    d, J = X.shape
    M = Theta.shape[1]
    for s in range(steps):
        idx = vec_index(states, J)
        Xg = X[:, idx]
        acc = np.zeros(M)
        for i in range(d):
            acc += Xg[i] * Theta[i]
        r = acc - y[idx]
        for i in range(d):
            Theta[i] -= eta * (Xg[i] * r)
        dist = np.zeros(M)
        for i in range(d):
            dd = Theta[i] - theta_dag[i]
            dist += dd * dd
        out[s] = dist


def quartic_chunk(states, Theta, theta_dag, eta, steps, out):
    """Advance piecewise-quartic SGD (components f +/- theta)."""
    for s in range(steps):
        idx = vec_index(states, 2)
        t = Theta[0]
        core = ((4.0 * t + 2.0) * t - 2.0) * t
        g = np.where(t > QUARTIC_HI, QUARTIC_SLOPE_HI,
                     np.where(t < QUARTIC_LO, QUARTIC_SLOPE_LO, core))
        g = g + np.where(idx == 0, 1.0, -1.0)
        Theta[0] = t - eta * g
        dd = Theta[0] - theta_dag[0]
        out[s] = dd * dd


def logistic_chunk(states, Theta, X, y, theta_dag, eta, steps, out):
    """Advance L2-regularized logistic SGD."""
    d, J = X.shape
    M = Theta.shape[1]
    for s in range(steps):
        idx = vec_index(states, J)
        Xg = X[:, idx]
        acc = np.zeros(M)
        for i in range(d):
            acc += Xg[i] * Theta[i]
        e = np.exp(-np.abs(acc))
        p = np.where(acc >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
        r = p - y[idx]
        for i in range(d):
            Theta[i] -= eta * (Xg[i] * r + Theta[i])
        dist = np.zeros(M)
        for i in range(d):
            dd = Theta[i] - theta_dag[i]
            dist += dd * dd
        out[s] = dist
