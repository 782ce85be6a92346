"""Exact decision theory with costly computation."""
from .core import (
    ComputationalDecisionProblem, DecisionError, Evaluator, JointPrior, Machine, MachineSet,
    SeparableUtility, StandardDecisionProblem, TableUtility, best_action, best_machine,
    expected_utility_action, expected_utility_machine, standard_as_computational,
)
from .information import Partition, value_of_information, voci_postchoice, voci_precommit
from .conversation import SILENT, value_of_conversation
from .speedup import SpeedupFunction, check_speedup_relation, value_of_p_speedup
from .zk import check_simulator_conditions, check_theorem1_instance
from .scenarios import BUILTINS, builtin

__version__ = "0.1.0"

__all__ = [
    "ComputationalDecisionProblem", "DecisionError", "Evaluator", "JointPrior", "Machine", "MachineSet",
    "SeparableUtility", "StandardDecisionProblem", "TableUtility", "best_action", "best_machine",
    "expected_utility_action", "expected_utility_machine", "standard_as_computational", "Partition",
    "value_of_information", "voci_postchoice", "voci_precommit", "SILENT", "value_of_conversation",
    "SpeedupFunction", "check_speedup_relation", "value_of_p_speedup", "check_simulator_conditions",
    "check_theorem1_instance", "BUILTINS", "builtin",
]
