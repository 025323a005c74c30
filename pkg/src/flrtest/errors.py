"""Exception hierarchy for the package.

Every error the library raises deliberately derives from :class:`FlrError`,
so callers (and the CLI) can distinguish domain failures from bugs. Each
class carries a process exit code used by the command-line front end.
"""

__all__ = [
    "FlrError",
    "SpaceMismatchError",
    "InsufficientPrefixError",
    "RankDeficiencyError",
    "NonPsdError",
    "DegenerateNormalizerError",
    "UndefinedRatioError",
    "ConfigError",
    "FormatError",
]


class FlrError(Exception):
    """Base class for all deliberate failures."""

    exit_code = 1


class SpaceMismatchError(FlrError):
    """Operands live on incompatible measure spaces or grids."""

    exit_code = 3


class InsufficientPrefixError(FlrError):
    """A sequential prefix holds too few observations for the request."""

    exit_code = 3


class RankDeficiencyError(FlrError):
    """An eigenvalue needed for spectral inversion sits below tolerance.

    Signals that the cut-off level is too large for the number of
    observations in the current prefix.
    """

    exit_code = 3

    def __init__(self, index: int, eigenvalue: float, prefix: int | None = None):
        self.index = index
        self.eigenvalue = eigenvalue
        self.prefix = prefix
        where = f" (prefix of {prefix} observations)" if prefix is not None else ""
        super().__init__(
            f"eigenvalue {index} = {eigenvalue:.3e} below rank tolerance{where}; "
            "reduce the cut-off level"
        )


class NonPsdError(FlrError):
    """A supposedly positive semidefinite operator has a genuinely negative eigenvalue."""

    exit_code = 3


class DegenerateNormalizerError(FlrError):
    """The self-normalizer is exactly zero (constant sequential path)."""

    exit_code = 3


class UndefinedRatioError(FlrError):
    """A relative-explanation ratio has a zero denominator."""

    exit_code = 3


class ConfigError(FlrError):
    """Invalid or inconsistent run configuration."""

    exit_code = 2


class FormatError(FlrError):
    """Malformed input file (data CSV, kernel CSV, or quantile table)."""

    exit_code = 2
