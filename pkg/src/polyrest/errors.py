"""Exception hierarchy shared across the package."""


class PolyrestError(Exception):
    """Base class for all package errors."""


class ParseError(PolyrestError):
    """Malformed or schema-violating input document."""


class TopologyError(ParseError):
    """Edge list does not form a tree rooted at the slack bus."""


class NonConvergence(PolyrestError):
    """Fixed-point iteration exceeded the iteration budget."""

    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"no fixed point after {iterations} iterations (residual {residual:.3e})"
        )


class Divergence(PolyrestError):
    """Voltage magnitude collapsed below the divergence bound."""

    def __init__(self, iterations: int):
        self.iterations = iterations
        super().__init__(f"voltage collapse after {iterations} iterations")


class ZeroVoltage(PolyrestError):
    """A voltage entry is exactly zero where a division is required."""


class DeltaOutOfRange(PolyrestError):
    """Voltage-drop budget outside the open interval (0, 1)."""


class InfeasibleCenter(PolyrestError):
    """Candidate center does not satisfy the power-flow equations."""


class Infeasible(PolyrestError):
    """Linear program has an empty feasible region."""


class Unbounded(PolyrestError):
    """Linear program objective is unbounded over the feasible region."""


class InvalidInitialPoint(PolyrestError):
    """Sequential optimization started from a non-feasible operating point."""


class NoFeasiblePoint(PolyrestError):
    """Brute-force search found no feasible grid point."""
