"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all computational failures in juliadim."""


class NonConvergence(ToolkitError):
    """Simultaneous root iteration did not converge within the cap."""


class RootFailure(ToolkitError):
    """A preimage solve produced roots that fail the residual check."""


class WitnessFailed(ToolkitError):
    """Escape-radius boundary sampling violated |p(z)| >= 2R."""


class SeedEscapes(ToolkitError):
    """Component-chain seed is not in the filled set."""


class ResolutionTooCoarse(ToolkitError):
    """Seed pixel fell outside its own level mask (grid boundary effect)."""


class NotYetPolyLike(ToolkitError):
    """Level m does not yet exhibit the polynomial-like configuration."""

    def __init__(self, m, reason=""):
        self.m = m
        self.reason = reason
        super().__init__(f"level {m} not polynomial-like: {reason}")


class VBranchNotFound(ToolkitError):
    """No suitable side branch component found up to the level cap."""


class NearCriticalValue(ToolkitError):
    """A preimage target is too close to a critical value for a t>0 sum."""


class PostCriticalBase(ToolkitError):
    """Pressure base point is too close to a forward critical orbit."""


class NoBracket(ToolkitError):
    """Pressure signs at the bracket endpoints do not straddle zero."""


class EmptyTree(ToolkitError):
    """All branches of a restricted preimage tree were pruned away."""


class EmptyBranch(ToolkitError):
    """No preimage root landed in the side-branch component."""


class NewtonDiverged(ToolkitError):
    """Newton iteration left its basin or hit the iteration cap."""


class NotRepelling(ToolkitError):
    """Located fixed point has |f'| <= 1."""


class NoRealRoot(ToolkitError):
    """Period-two parameter equation has no real solution."""


class NotDegreeTwo(ToolkitError):
    """Interval restriction is not a two-to-one fold."""


class ZeroInput(ToolkitError):
    """The circle-to-interval correspondence is undefined at 0."""


class RamificationHit(ToolkitError):
    """A lifted preimage fell on a ramification point of the correspondence."""
