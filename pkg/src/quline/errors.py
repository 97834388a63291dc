"""Exception hierarchy shared across the library."""


class QulineError(Exception):
    """Base class for all library errors."""


class DomainError(QulineError):
    """An event left the open region on which a chart or model is defined."""


class ToleranceError(QulineError):
    """A numerical routine could not meet its requested tolerance."""

    def __init__(self, message, achieved=None, requested=None):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class HilbertSpaceMismatch(QulineError):
    """States live in different Hilbert spaces (event or 4-momentum labels differ)."""


class WavevectorMismatch(HilbertSpaceMismatch):
    """Interferometer arms recombine with unequal wavevectors."""


class AdaptationSingular(QulineError):
    """Photon direction antiparallel to the tetrad z-axis; adaptation undefined."""


class DegenerateSetup(QulineError):
    """Measurement construction degenerates (vanishing rest-frame field, null axis, ...)."""


class OrthogonalStates(QulineError):
    """Relative phase of (numerically) orthogonal states is undefined."""


class ComplexVelocity(QulineError):
    """Energy conservation admits no real speed (particle cannot reach the height)."""


class ScenarioError(QulineError):
    """Scenario file failed to parse or validate."""

    def __init__(self, message, block=None):
        if block:
            message = f"[{block}] {message}"
        super().__init__(message)
        self.block = block


class ScenarioParseError(ScenarioError):
    """File unreadable or structurally malformed (YAML / schema level)."""


class ScenarioReferenceError(ScenarioError):
    """A schedule entry or block names an object that is not defined."""
