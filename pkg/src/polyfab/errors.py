"""Exception hierarchy shared by all polyfab modules."""


class PolyfabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PolyfabError):
    """An argument is outside the operation's domain (bad stratum, support mismatch, ...)."""


class TopologyError(DomainError):
    """A stratum family fails an openness/closedness requirement."""


class EmptyFabricError(DomainError):
    """The degenerate fabric (empty stratum family) was passed to an algorithmic operation."""


class DenominatorError(DomainError):
    """A coordinate does not lie on the declared 1/d grid."""


class EmptyPolyhedronError(PolyfabError):
    """Operation undefined on the empty polyhedron."""


class EmptySystemError(PolyfabError):
    """Operation undefined on the all-empty polyhedra system."""


class PreconditionError(PolyfabError):
    """A documented operation precondition does not hold."""


class CoherenceError(PolyfabError):
    """Per-stratum polyhedra are not compatible under coordinate projections."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InvariantError(PolyfabError):
    """An internal invariant failed; indicates a bug, never bad user input."""


class ConsistencyDiagnostic(InvariantError):
    """Runtime diagnostic for the maximal-contact existence checks (surfaced, never patched)."""


class BudgetExceededError(PolyfabError):
    """The transform step budget tripwire fired."""


class ReplayError(PolyfabError):
    """A recorded center cannot be applied during trace replay."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ParseError(PolyfabError):
    """A document or trace file does not parse."""
