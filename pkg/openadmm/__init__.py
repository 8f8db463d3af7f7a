"""
Open ADMM: distributed optimization over networks whose agents join and
leave while the algorithm runs.

Each agent keeps one state per neighbor and an output. A tick relaxes the
edge states and takes a prox step of the agent's local cost; churn events
between ticks add and drop agents together with their edges.
"""

from .errors import OpenAdmmError, ConfigError, GraphError, BoundError, Diverged
from .labeled_space import Interval, LabeledVector, LabeledBox, AffineEdgeSet
from .open_graph import GraphSnapshot, ChurnDelta, random_graph, apply_churn
from .open_admm import AdmmParams, InitVariant, NetworkState, TickFrame, admm_tick, initial_state, run_scenario
from .experiments import ScenarioConfig, builtin_scenario, run_and_summarize

from . import churn as Churn
from . import costs as Costs
from . import analysis as Analysis
from . import reference_oracles as Oracles
