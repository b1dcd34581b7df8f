"""Exceptions raised by the kaczmarz package."""


class KaczmarzError(Exception):
    """Base class for every error raised on purpose by this package."""


class DimensionMismatch(KaczmarzError, ValueError):
    def __init__(self, expected, got, what='vector'):
        super(DimensionMismatch, self).__init__(
            '{} has length {}, expected {}'.format(what, got, expected))
        self.expected = expected
        self.got = got


class ZeroNormRow(KaczmarzError, ValueError):
    """A row of the coefficient matrix has zero 2-norm."""

    def __init__(self, row):
        super(ZeroNormRow, self).__init__('row {} has zero norm'.format(row))
        self.row = row


class ZeroResidual(KaczmarzError):
    """The residual vanished; the engine reads this as convergence."""


class EmptySample(KaczmarzError, ValueError):
    pass


class AllSampledResidualsZero(KaczmarzError):
    """Every residual entry inside the drawn sample is zero."""


class ConfigError(KaczmarzError, ValueError):
    pass


class InconsistentSystem(KaczmarzError, ValueError):
    pass


class ParseError(KaczmarzError, ValueError):
    """Malformed Matrix Market input.

    Arguments:
    line: 1-based line number of the offending line, or None when the
        failure was reported by the body reader without a position.
    reason: human readable description.
    """

    def __init__(self, line, reason):
        where = 'line {}: '.format(line) if line is not None else ''
        super(ParseError, self).__init__(where + reason)
        self.line = line
        self.reason = reason


class UnsupportedField(KaczmarzError, ValueError):
    def __init__(self, field):
        super(UnsupportedField, self).__init__(
            'unsupported Matrix Market field "{}"'.format(field))
        self.field = field
