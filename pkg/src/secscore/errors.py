class SecScoreError(Exception):
    """Base class for all errors raised by this package."""


class MalformedVector(SecScoreError, ValueError):
    """A CVSS v3.1 vector string could not be parsed."""


class DegenerateScore(SecScoreError, ValueError):
    """A CVSS v4 score pair cannot define a minimum exploit weight."""


class SchemaError(SecScoreError, ValueError):
    """An input file lacks required columns or holds an out-of-range value."""


class SchemaVersionError(SecScoreError, ValueError):
    """A registry file was written with an unsupported schema version."""


class EmptySample(SecScoreError, ValueError):
    pass


class DegenerateSample(SecScoreError, ValueError):
    """A sample has no spread, so no scale parameter can be estimated."""


class UnknownCategory(SecScoreError, KeyError):
    pass


class InsufficientData(SecScoreError, ValueError):
    pass
