"""Exception types shared across the package."""


class QuenchlabError(Exception):
    """Base class for all package errors."""


class ArgumentError(QuenchlabError, ValueError):
    """An argument is outside the accepted domain."""


class SizeError(QuenchlabError):
    """A construction would exceed the configured size limit."""


class StructureError(QuenchlabError):
    """A graph lacks a required structural property (e.g. connectivity)."""


class StateError(QuenchlabError):
    """An operation was applied to an object in the wrong state."""


class GeometryError(QuenchlabError):
    """A geometric object does not fit where it was requested."""


class ResourceError(QuenchlabError):
    """A computation would exceed its work or memory budget."""


class UnsupportedMeasureError(QuenchlabError):
    """A mixing measure has no registered evaluation rule."""


class InitializationError(QuenchlabError):
    """A Markov chain was started from a state of zero weight."""


class PathValidationError(QuenchlabError):
    """Selected crossing paths leave a component without a coarse centre.

    Attributes
    ----------
    component : list of tuple
        Primal vertices of the offending component.
    """

    def __init__(self, message, component=()):
        super().__init__(message)
        self.component = list(component)
