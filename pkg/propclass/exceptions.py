# -*- coding: utf-8 -*-

"""
propclass.exceptions
~~~~~~~~~~~~~~~~~~~~

Exceptions thrown by propclass. Each exception carries the exit code the command line tools use for it.
"""

EXIT_IO = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class PropclassException(Exception):
    """There was an exception while handling your data."""

    exit_code = EXIT_DATA

    def __init__(self, *args):
        super(PropclassException, self).__init__(self.message, *args)

    def __str__(self):
        return self.message

    @property
    def message(self):
        """The exception message."""
        return self.__class__.__doc__


# I/O and parsing


class ParseError(PropclassException):
    """A line of an input file could not be parsed."""

    exit_code = EXIT_IO

    def __init__(self, line, reason):
        """Initialize ParseError with the offending line number.

        :param line: The 1-based line number.
        :param reason: What went wrong.
        """
        self.line = line
        self.reason = reason
        super(ParseError, self).__init__()

    @property
    def message(self):
        return "Parse error on line {0}: {1}".format(self.line, self.reason)


class SchemaError(PropclassException):
    """A record is missing a required field."""

    exit_code = EXIT_IO

    def __init__(self, line, field):
        """Initialize SchemaError with the line number and the missing field.

        :param line: The 1-based line number.
        :param field: The name of the missing field.
        """
        self.line = line
        self.field = field
        super(SchemaError, self).__init__()

    @property
    def message(self):
        return "Line {0} is missing the '{1}' field".format(self.line, self.field)


# Configuration


class ConfigError(PropclassException):
    """A configuration value is invalid."""

    exit_code = EXIT_USAGE

    def __init__(self, name, reason):
        self.name = name
        self.reason = reason
        super(ConfigError, self).__init__()

    @property
    def message(self):
        return "Invalid configuration '{0}': {1}".format(self.name, self.reason)


# Taxonomy and label paths


class TaxonomyError(PropclassException):
    """The discipline taxonomy or a label path is inconsistent."""

    def __init__(self, code, reason=None):
        self.code = code
        self.reason = reason
        super(TaxonomyError, self).__init__()

    @property
    def message(self):
        text = "{0}: '{1}'".format(self.__class__.__name__, self.code)
        if self.reason:
            text += " ({0})".format(self.reason)
        return text


class DuplicateCode(TaxonomyError):
    """A code appears more than once in a taxonomy document."""


class OrphanNode(TaxonomyError):
    """A non-root code has no parent prefix in the taxonomy."""


class CycleDetected(TaxonomyError):
    """A parent chain revisits a node."""


class LevelMismatch(TaxonomyError):
    """A code's length is inconsistent with its declared level."""


class UnknownCode(TaxonomyError):
    """A code is not part of the taxonomy."""


class IncoherentPath(TaxonomyError):
    """A label's parent is missing from the previous level set."""


class IncoherentGiven(TaxonomyError):
    """A given partial label set is not a coherent prefix."""


class IncoherentHistory(TaxonomyError):
    """A prediction history cannot be embedded."""


class UnknownNode(TaxonomyError):
    """A discipline is not a node of the interdisciplinary graph."""


class EmptySource(TaxonomyError):
    """The source discipline of an edge has no topics."""


class SelfEdge(TaxonomyError):
    """An edge was requested from a discipline to itself."""


class LengthMismatch(PropclassException):
    """Two aligned sequences have different lengths."""

    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super(LengthMismatch, self).__init__()

    @property
    def message(self):
        return "Length mismatch: expected {0}, got {1}".format(self.expected, self.actual)


class LevelOutOfRange(PropclassException):
    """A prediction level is outside the taxonomy depth."""

    def __init__(self, level, depth):
        self.level = level
        self.depth = depth
        super(LevelOutOfRange, self).__init__()

    @property
    def message(self):
        return "Level {0} is outside 1..{1}".format(self.level, self.depth)


class EmptyEvalSet(PropclassException):
    """Evaluation was requested on an empty set of samples."""


# Numerics


class NumericException(PropclassException):
    """A numeric operation failed."""

    exit_code = EXIT_NUMERIC


class ShapeMismatch(NumericException):
    """Two tensors have incompatible shapes."""

    def __init__(self, op, left, right):
        """Initialize ShapeMismatch with both shapes.

        :param op: The operation name.
        :param left: The first shape.
        :param right: The second shape.
        """
        self.op = op
        self.left = tuple(left)
        self.right = tuple(right)
        super(ShapeMismatch, self).__init__()

    @property
    def message(self):
        return "Shape mismatch in {0}: {1} vs {2}".format(self.op, self.left, self.right)


class NotScalar(NumericException):
    """Backward was called on a tensor with more than one element."""

    def __init__(self, shape):
        self.shape = tuple(shape)
        super(NotScalar, self).__init__()

    @property
    def message(self):
        return "Backward needs a scalar, got shape {0}".format(self.shape)


class NotRecorded(NumericException):
    """Backward was called on a tensor that is not on a tape."""


class MissingGrad(NumericException):
    """A parameter has no gradient buffer."""

    def __init__(self, name):
        self.name = name
        super(MissingGrad, self).__init__()

    @property
    def message(self):
        return "Parameter '{0}' has no gradient".format(self.name)


class OddDim(NumericException):
    """Positional encodings need an even dimension."""

    def __init__(self, dim):
        self.dim = dim
        super(OddDim, self).__init__()

    @property
    def message(self):
        return "Positional encoding dimension must be even, got {0}".format(self.dim)


class NonFiniteLoss(NumericException):
    """The training loss became NaN or infinite."""

    def __init__(self, step, value):
        self.step = step
        self.value = value
        super(NonFiniteLoss, self).__init__()

    @property
    def message(self):
        return "Non-finite loss {0} at step {1}".format(self.value, self.step)


class GradCheckFailed(NumericException):
    """Analytic and numeric gradients disagree."""

    def __init__(self, name, error, tolerance):
        self.name = name
        self.error = error
        self.tolerance = tolerance
        super(GradCheckFailed, self).__init__()

    @property
    def message(self):
        return "Gradient check failed at '{0}': relative error {1:.3e} > {2:.1e}".format(
            self.name, self.error, self.tolerance
        )
