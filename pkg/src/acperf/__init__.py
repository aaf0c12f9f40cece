"""Performance estimation for automatic algorithm configuration."""
from acperf.allocation import (Allocation, batch_allocation, even_allocation,
                               replacement_allocation, sum_of_squares)
from acperf.bounds import (BoundInput, BoundResult, covering_ball, covering_function_class,
                           deviation_tail, finite_bound, finite_even_bound, infinite_bound,
                           solve_inequality)
from acperf.errors import AcperfError, HypothesisError, MatrixFormatError, ReplicateCapError
from acperf.estimation import (estimate, estimator_variance, plug_in_moments, tau_squared,
                               train_means)
from acperf.harness import (FitResult, SplitPlan, SweepProtocol, SweepResult, compare_estimators,
                            coverage_trial, fit_curve, split, sweep, train_es_error,
                            uniform_es_error)
from acperf.kernels import BACKEND
from acperf.scenario import (DiscreteScenario, MomentSummary, PerformanceMatrix, ScenarioMeta,
                             exact_moments, load_matrix, random_scenario, sample_matrix,
                             save_matrix)

__version__ = "0.1.0"
