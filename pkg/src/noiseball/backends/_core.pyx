# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled SGD kernels; trial-lockstep, mirrors backends/pure.py exactly.

The RNG is splitmix64 (see rng.py); the per-element floating point
operation order matches the numpy kernels, and the extension is built
with FP contraction disabled, so trajectories are bit-identical to the
pure backend for the polynomial-gradient families.
"""

from libc.math cimport exp, fabs

ctypedef unsigned long long u64

cdef u64 GOLDEN = <u64>0x9E3779B97F4A7C15
cdef u64 MIX1 = <u64>0xBF58476D1CE4B9FE
cdef u64 MIX2 = <u64>0x94D049BB133111EB

NAME = "compiled"


cdef inline u64 mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline u64 next_u64(u64* state) nogil:
    state[0] = state[0] + GOLDEN
    return mix64(state[0])


cdef inline long draw_index(u64* state, u64 threshold, long J) nogil:
    # threshold 0 means "never reject" (J divides 2**64)
    cdef u64 z = next_u64(state)
    if threshold != 0:
        while z >= threshold:
            z = next_u64(state)
    return <long>(z % <u64>J)


cdef inline u64 rejection_threshold(long J):
    # 2**64 - (2**64 mod J) wrapped to u64; matches rng.index_threshold
    cdef u64 r = (<u64>18446744073709551615UL % <u64>J + 1) % <u64>J
    return <u64>0 - r


def linreg_chunk(u64[::1] states, double[:, ::1] Theta,
                 double[:, ::1] X, double[::1] y, double[::1] theta_dag,
                 double eta, long steps, double[:, ::1] out):
    cdef long d = X.shape[0], J = X.shape[1], M = Theta.shape[1]
    cdef long s, m, i, g
    cdef double acc, r, dd, dist
    cdef u64 threshold = rejection_threshold(J)
    with nogil:
        for s in range(steps):
            for m in range(M):
                g = draw_index(&states[m], threshold, J)
                acc = 0.0
                for i in range(d):
                    acc = acc + X[i, g] * Theta[i, m]
                r = acc - y[g]
                for i in range(d):
                    Theta[i, m] = Theta[i, m] - eta * (X[i, g] * r)
                dist = 0.0
                for i in range(d):
                    dd = Theta[i, m] - theta_dag[i]
                    dist = dist + dd * dd
                out[s, m] = dist


def quartic_chunk(u64[::1] states, double[:, ::1] Theta,
                  double[::1] theta_dag, double eta, long steps,
                  double[:, ::1] out):
    cdef long M = Theta.shape[1]
    cdef long s, m, g
    cdef double t, base, grad, dd
    cdef u64 threshold = rejection_threshold(2)
    with nogil:
        for s in range(steps):
            for m in range(M):
                g = draw_index(&states[m], threshold, 2)
                t = Theta[0, m]
                if t > 2.0:
                    base = 36.0
                elif t < -2.0:
                    base = -20.0
                else:
                    base = ((4.0 * t + 2.0) * t - 2.0) * t
                if g == 0:
                    grad = base + 1.0
                else:
                    grad = base + (-1.0)
                Theta[0, m] = t - eta * grad
                dd = Theta[0, m] - theta_dag[0]
                out[s, m] = dd * dd


def logistic_chunk(u64[::1] states, double[:, ::1] Theta,
                   double[:, ::1] X, double[::1] y, double[::1] theta_dag,
                   double eta, long steps, double[:, ::1] out):
    cdef long d = X.shape[0], J = X.shape[1], M = Theta.shape[1]
    cdef long s, m, i, g
    cdef double acc, e, p, r, dd, dist
    cdef u64 threshold = rejection_threshold(J)
    with nogil:
        for s in range(steps):
            for m in range(M):
                g = draw_index(&states[m], threshold, J)
                acc = 0.0
                for i in range(d):
                    acc = acc + X[i, g] * Theta[i, m]
                e = exp(-fabs(acc))
                if acc >= 0.0:
                    p = 1.0 / (1.0 + e)
                else:
                    p = e / (1.0 + e)
                r = p - y[g]
                for i in range(d):
                    Theta[i, m] = Theta[i, m] - eta * (X[i, g] * r + Theta[i, m])
                dist = 0.0
                for i in range(d):
                    dd = Theta[i, m] - theta_dag[i]
                    dist = dist + dd * dd
                out[s, m] = dist
