"""Exception hierarchy shared by all iforge modules."""


class IforgeError(Exception):
    """Base class for every error raised by iforge."""


class DimensionError(IforgeError, ValueError):
    """Shapes or lengths of the inputs are inconsistent."""


class SizeLimitError(IforgeError):
    """The requested computation exceeds the supported size limits."""


class NotInterpretableError(IforgeError, ValueError):
    """A Fock configuration has no N-qudit interpretation (not post-selected)."""


class ProjectionMissingError(IforgeError, ValueError):
    """A superposition still carries non-post-selected terms with weight."""


class UnphysicalMatrixError(IforgeError, ValueError):
    """A scattering matrix has a singular value above one."""


class InvalidLocalError(IforgeError, ValueError):
    """A local operator that should be unitary is not."""


class ImpossibleConditionError(IforgeError, ValueError):
    """Conditioning on outcomes that have zero probability."""


class UndefinedRankError(IforgeError, ValueError):
    """Rank of the zero tensor was requested."""


class UnknownDeviceError(IforgeError, KeyError):
    """No device of that name in the device library."""


class ConfigError(IforgeError):
    """An experiment configuration could not be parsed or validated."""
