"""Constant step-size SGD error dynamics: constants, bounds, simulation.

The expected squared distance R_k between the k-th SGD iterate and the
optimum neither converges to zero (the iterates settle into a noise
ball) nor escapes certified envelopes.  This package computes the
relevant problem constants, the one-step and asymptotic bounds, runs
seeded Monte-Carlo and exact-expectation experiments, and cross-checks
the two against each other.
"""

from .backends import BACKEND
from .bounds import (EnvelopeSeries, TheoremConstants, closed_form_envelopes,
                     derive_constants, lower_step, one_step_bounds,
                     propagated_envelopes, refined_asymptotics,
                     theorem32_ledger, theorem34_classify, upper_step)
from .constants import ProblemConstants, extreme_eigs, problem_constants
from .engine import (ErrorSeries, RunConfig, exact_error,
                     exact_error_quadratic, monte_carlo_error, run_trial,
                     sgd_step, simulate)
from .problems import (FiniteSumProblem, SyntheticLinRegConfig, build_quartic,
                       generate_linreg_dataset, linear_regression,
                       logistic_regression, quartic_problem, solve_optimum,
                       toy_two_component)

__version__ = "0.1.0"
