"""Exception types shared across the package.

Everything derives from ValueError so callers that do not care about the
distinction can still catch a single built-in type.
"""


class TsplabError(ValueError):
    """Base class for all package-specific errors."""


class InputError(TsplabError):
    """Bad argument values (dimension mismatch, out-of-range coordinate, ...)."""


class ValidityError(TsplabError):
    """A structural invariant is violated (non-permutation tour, ...)."""


class ParseError(TsplabError):
    """Malformed TSPLIB or dataset input; message names the offending line."""


class ConfigError(TsplabError):
    """Inconsistent configuration (oracle/size mismatch, unknown method, ...)."""


class SizeError(TsplabError):
    """Instance size outside a solver's supported range."""


class StateError(TsplabError):
    """Operation invoked in an invalid decoder state (all cities masked, ...)."""


class CheckpointError(TsplabError):
    """Checkpoint file cannot be loaded (bad magic, version, or shape)."""


class DegenerateAreaError(TsplabError):
    """City set covers zero area; hardness indicator undefined."""
