""" ERRORS MODULE

    Exceptions raised by the library. Each maps onto one command-line exit code,
    see hbnpuf.cli for the mapping.
"""

class HbnPufError(Exception):
    """ Base class of every library specific error. """
    exit_code = 2

class DataError(HbnPufError, ValueError):
    """ Datasets, manifests or helper data do not match what an analysis expects. """

class UnsatisfiableRegularityError(HbnPufError, RuntimeError):
    """ Strict out-regular topology could not be sampled within the retry budget. """

class EventBudgetExhausted(HbnPufError, RuntimeError):
    """ A transient run processed more events than the configured cap.

        Attributes:
            - cap: the event budget that was exceeded.
    """
    def __init__(self, cap: int, context: str = ''):
        self.cap = cap
        message = 'event budget exhausted after {} events'.format(cap)
        if context:
            message = '{} ({})'.format(message, context)
        HbnPufError.__init__(self, message)

class InfeasibleAnalysisError(HbnPufError, ValueError):
    """ The requested exhaustive analysis would not finish at this size. """
    exit_code = 3

class HdlParseError(HbnPufError, ValueError):
    """ Emitted HDL text could not be read back.

        Attributes:
            - line: 1-based line number the parser stopped at (0 if unknown).
    """
    def __init__(self, message: str, line: int = 0):
        self.line = line
        HbnPufError.__init__(self, 'line {}: {}'.format(line, message) if line else message)
