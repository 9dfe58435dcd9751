"""Exception hierarchy.

Everything a bad scenario can trigger derives from :class:`ConfigError`
(CLI exit code 2); integration failures raise :class:`NumericalBlowup`
(exit code 3).
"""


class SmracError(Exception):
    pass


class ConfigError(SmracError, ValueError):
    pass


class NotHurwitz(ConfigError):
    pass


class RankDeficient(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class MatchingInfeasible(ConfigError):
    pass


class ConfigMismatch(ConfigError):
    pass


class ScenarioError(ConfigError):
    """Malformed scenario file. ``line`` is 1-based when known."""

    def __init__(self, message, source=None, line=None):
        self.source = source
        self.line = line
        where = ""
        if source is not None:
            where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


class NumericalBlowup(SmracError, ArithmeticError):
    pass


class NotYetExcited(SmracError):
    pass


class IIEIncomplete(SmracError):
    pass
