"""Solver toolkit for the uncapacitated three-level lot-sizing and
replenishment problem with a distribution structure."""

from .instance import (DemandType, FixedCostType, Instance, InstanceSpec,
                       NetworkShape, ParseError, cumulative_demand, generate,
                       read_instance, write_instance)
from .lotsizing_dp import UlsPlan, solve_uls
from .solution import RouteAssignment, Solution, check_feasible, evaluate_cost

__all__ = [
    "DemandType", "FixedCostType", "Instance", "InstanceSpec",
    "NetworkShape", "ParseError", "cumulative_demand", "generate",
    "read_instance", "write_instance",
    "UlsPlan", "solve_uls",
    "RouteAssignment", "Solution", "check_feasible", "evaluate_cost",
]
