"""Online proximal gradient for time-varying composite losses, with dynamic-regret auditing."""

from dynregret.learners import ACSA, ALGORITHMS, OPG, RDA, SAGE, StepSchedule, make_learner
from dynregret.losses import LabeledExample, LossEvaluation, hinge, make_loss, ridged
from dynregret.regret import ComparatorSequence, RegretLedger, dynamic_regret, path_variation
from dynregret.regularizers import CompositeLoss, WeightedL1, WeightRule, prox, update_weights
from dynregret.vecspace import BoxSet, diameter, project

__version__ = "0.1.0"

__all__ = [
    "ACSA", "ALGORITHMS", "OPG", "RDA", "SAGE", "StepSchedule", "make_learner",
    "LabeledExample", "LossEvaluation", "hinge", "make_loss", "ridged",
    "ComparatorSequence", "RegretLedger", "dynamic_regret", "path_variation",
    "CompositeLoss", "WeightedL1", "WeightRule", "prox", "update_weights",
    "BoxSet", "diameter", "project",
]
