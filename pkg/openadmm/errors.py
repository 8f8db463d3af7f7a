"""
Exception hierarchy shared by the simulator.

Every error raised on purpose by the library derives from
`OpenAdmmError`, and also from the builtin type a caller
would naturally catch (ValueError, RuntimeError, TypeError).
"""

from __future__ import annotations


class OpenAdmmError(Exception):
    """Root of all simulator errors"""


class ConfigError(OpenAdmmError, ValueError):
    """Invalid parameters, unknown scenario ids or unreadable config files"""


class GraphError(OpenAdmmError, ValueError):
    """A churn event that violates the graph rules"""


class DisconnectingDeparture(GraphError):
    def __init__(self, departed: frozenset[int]) -> None:
        super().__init__(f"disconnecting departure: removing {sorted(departed)} splits the graph")
        self.departed = departed


class IsolatedArrival(GraphError):
    def __init__(self, agent: int) -> None:
        super().__init__(f"isolated arrival: agent {agent} has no edges")
        self.agent = agent


class EmptyTargetSet(OpenAdmmError, ValueError):
    def __init__(self) -> None:
        super().__init__("empty target set")


class ProxSolverStalled(OpenAdmmError, RuntimeError):
    """The inner accelerated gradient loop ran out of iterations

    Attributes:
        residual (float): Gradient norm at the last iterate
        iterations (int): Iterations spent
    """

    def __init__(self, residual: float, iterations: int) -> None:
        super().__init__(f"prox solver stalled: gradient norm {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


class NonsmoothCost(OpenAdmmError, TypeError):
    def __init__(self, kind: str) -> None:
        super().__init__(f"nonsmooth cost: {kind} has no gradient")
        self.kind = kind


class BoundError(OpenAdmmError, ValueError):
    """Parameters outside the region where the convergence bounds hold"""


class OutputError(OpenAdmmError, OSError):
    """Trace or summary files could not be written or read"""


class Diverged(OpenAdmmError, ArithmeticError):
    """Edge states stopped being finite

    Attributes:
        tick (int): Tick whose update produced the non-finite states
    """

    def __init__(self, tick: int) -> None:
        super().__init__(f"diverged at tick {tick}: edge states are no longer finite")
        self.tick = tick

    def __reduce__(self):
        # workers ship exceptions back by pickling their constructor args
        return type(self), (self.tick,)
