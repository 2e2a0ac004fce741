"""Monte Carlo estimators, exponent fits and the analytic conformal kit."""

from .conformal import (MobiusMap, angles_for_chi, cardy_weights,  # noqa: F401
                        closed_form_eval, cross_ratio, cross_ratio_points,
                        hyp2f1_weight, mobius_apply, mobius_deriv,
                        pivotal_domain_value, pivotal_weight,
                        verify_covariance)
from .fitting import (Estimate, FitResult, fit_log_slope,  # noqa: F401
                      fit_power_law, jackknife_slope, merge_estimates,
                      ratio_exponent)
from .montecarlo import (LADDER_FAMILIES, ArmLadderEvaluator,  # noqa: F401
                         NormTable, arm_ladder, norm_constants, run_estimate,
                         run_monte_carlo)
from .theorems import (backbone_estimate, cardy_crossing_check,  # noqa: F401
                       connection_partition_counts, covariance_log_probe,
                       l_theorem_estimates, m_hat_estimates,
                       pivotal_estimate, r3_estimate,
                       spin_four_point_estimate, v2_symmetry_probe)
