"""Decision support for post-disaster city reconstruction planning.

Models a damaged city as reconstruction items under budget, time, priority,
and access-dependency constraints, scores plans by social benefit, and
searches for strong feasible plans with reinforcement-learning agents across
human-steered reconstruction cycles.
"""

from .agents import (AGENT_KINDS, AgentConfig, DDQNAgent, DeepSarsaAgent,
                     EpisodeRecord, RandomAgent, TabularAgent, evaluate_policy,
                     make_agent, random_policy, rollout, select_action,
                     tabular_update)
from .bench import ALGORITHMS, BenchResult, compare_algorithms, emit_report
from .constraints import (Verdict, check_plan, feasible_actions,
                          threshold_for_cycle)
from .env import EnvState, NothingToPlanError, RebuildEnv, ReplayBuffer, Transition
from .metrics import (DEFAULT_WEIGHTS, ObjectiveWeights, PlanEvaluation,
                      distance, mean_priority, plan_benefit, unit_benefit)
from .model import (BuildingKind, Dataset, DatasetError, DependencyEdge,
                    DependencyGraph, RoadEdge, Unit, apply_plan,
                    build_dependency_graph, derive_status, load_dataset,
                    priority_for_kind, save_dataset, save_dataset_csv)
from .neural import (AdamState, Network, copy_parameters, load_checkpoint,
                     loss_and_gradients, save_checkpoint, train_step)
from .planner import (ConflictError, CycleRecord, Lineage, Plan, PlanningResult,
                      generate_instance, parallel_makespan, parallel_sublists,
                      train_and_plan)

__version__ = "0.1.0"
