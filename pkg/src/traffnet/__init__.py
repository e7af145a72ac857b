"""Synthetic single-trafficker operation networks and exact max-flow
interdiction solvers, with and without defender restructuring."""

from .model import (Age, Arc, ArcKind, Operation, Person, Pod, Role,
                    SimpleGraph, TraffickingNetwork, validate_network,
                    victim_social_subgraph)
from .generator import (ConfigError, GeneratorConfig, enumerate_partitions,
                        generate_network, generate_operation,
                        generate_trafficker_social)
from .metrics import (CentralityReport, arc_density, betweenness,
                      betweenness_centralization, centrality_report,
                      degree_centralization)
from .instance import (Category, CostSchedule, InstanceError,
                       InterdictionInstance, NodeKind, RestructArc,
                       build_instance, default_schedule)
from .flow import FlowAssignment, CutResult, max_flow, max_flow_value, min_cut
from .defender import (DefenderResult, RestructuringPlan, SolverTimeout,
                       feasible_components, is_feasible, solve_defender)
from .attacker import (InterdictionPlan, IterationCapError, SolveReport,
                       SweepRow, budget_sweep, evaluate_plan,
                       make_interdiction_plan, solve_mfnip, solve_mfnip_r)
from .oracle import (OracleResult, OracleSizeError, oracle_max_flow,
                     oracle_mfnip, oracle_mfnip_r)

__version__ = "0.1.0"
