from .common import VERSION, setup_log, load_config
from .simplex import DistPoint, SimplexPoint, tilde, hat, uniform, vertex, update_empirical, weighted_update_empirical
from .expr_parser import Expr, parse, evaluate
from .reward_model import RewardSystem, QStarResult, reward, q_value, q_star, iid_payoff, linear_family
from .potential import (Potential, gradient_field, build_potential_1d, expression_potential, grad_condition_residual,
                        check_integrability, q_from_potential)
from .strategies import Strategy, greedy_choose, iid_choose, choose
from .engine import Scenario, WeightSequence, Trajectory, run, run_weighted, simulate, validate_weights
from .analysis import (SeriesPair, DecompositionReport, abel_identity_residual, kronecker_check, decompose_payoff_gap,
                       greedy_gap, gap_average, liminf_estimate, limit_set, greedy_optimality)
from .scenarios import load_scenario, scenario_from_dict

__version__ = VERSION
