"""Exception hierarchy shared by all modules; the CLI maps these to exit codes."""


class StructureError(ValueError):
    """Malformed structure data (bad part ids, loops, duplicate arcs, ...)."""


class InputError(ValueError):
    """An operation was handed input outside its contract."""


class CapacityError(RuntimeError):
    """A construction would exceed a configured size cap."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold."""


class InternalCheckError(RuntimeError):
    """A runtime self-check failed; indicates a bug, not bad input."""
