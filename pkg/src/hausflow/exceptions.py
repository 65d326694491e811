class HausflowError(Exception):
    """Base class for errors raised by this package."""


class GroupMismatchError(HausflowError, ValueError):
    pass


class WindowError(HausflowError, ValueError):
    """Invalid window specification or grid-size cap exceeded."""


class TruncationError(HausflowError):
    """A translate needed by the computation lies outside the padded window.

    The caller has to enlarge ``padding_radius``; values are never clamped.
    """

    def __init__(self, point, generator, message=None):
        self.point = tuple(float(c) for c in point)
        self.generator = tuple(float(c) for c in generator)
        super().__init__(
            message
            or f"translate of grid point {self.point} by generator {self.generator} "
            "falls outside the padded window; enlarge padding_radius"
        )


class IsotropyError(HausflowError):
    """The generator set has a nontrivial isotropy subgroup."""


class BracketGenerationError(HausflowError):
    pass


class MonotonicityError(HausflowError):
    """A flow iterate decreased beyond the allowed slack on the core."""


class EnvelopeInfiniteError(HausflowError):
    """The right-invariant envelope of the base metric is infinite."""


class CloudSizeError(HausflowError):
    pass


class GridMismatchError(HausflowError, ValueError):
    pass


class ConfigError(HausflowError, ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
