"""
Local cost models: value, prox, gradient and local minimizer per agent.
"""

from .base import CostModel, ProxQuery
from .consensus import CONSENSUS_KINDS, ConsensusAvg, ConsensusMax, ConsensusMedian, ScalarConsensus, consensus_cost
from .logistic import ClassificationSource, LogisticRidge, make_classification_data
from .solvers import accelerated_gradient

__all__ = [
    "CostModel",
    "ProxQuery",
    "ScalarConsensus",
    "ConsensusAvg",
    "ConsensusMax",
    "ConsensusMedian",
    "consensus_cost",
    "CONSENSUS_KINDS",
    "LogisticRidge",
    "ClassificationSource",
    "make_classification_data",
    "accelerated_gradient",
]
