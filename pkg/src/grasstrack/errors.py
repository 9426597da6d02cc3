"""Exception hierarchy shared by every grasstrack module."""


class GrassmannError(ValueError):
    """Base class for numerical/geometric failures."""


class DimensionMismatch(GrassmannError):
    pass


class RankDeficient(GrassmannError):
    pass


class NotAnchored(GrassmannError):
    """A tangent vector was used at a point other than its base."""


class OutsideInjectivityRadius(GrassmannError):
    """Two subspaces are too far apart for the logarithmic map.

    ``index`` identifies the offending trajectory position when the
    failure happened inside a trajectory-level computation.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class TrajectoryTooShort(GrassmannError):
    pass


class UnsupportedGradient(GrassmannError):
    pass


class HistoryNotRecorded(RuntimeError):
    pass


class ConfigError(ValueError):
    """Invalid run configuration; ``field`` is a dotted path, ``line`` 1-based."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line
