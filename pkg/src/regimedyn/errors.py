"""Exception hierarchy shared by every module."""

from __future__ import annotations


class RegimeDynError(Exception):
    """Base class for all library errors."""


class DimensionError(RegimeDynError, ValueError):
    pass


class NumericalError(RegimeDynError, ArithmeticError):
    """A computation produced a non-finite value or failed to converge.

    ``regime``, ``component`` and ``timestep`` are filled in by whichever
    layer knows them, so the message can point at the offending place.
    """

    def __init__(self, message, *, regime=None, component=None, timestep=None):
        self.detail = message
        self.regime = regime
        self.component = component
        self.timestep = timestep
        super().__init__(self._format())

    def _format(self):
        where = []
        if self.timestep is not None:
            where.append(f"t={self.timestep}")
        if self.regime is not None:
            where.append(f"regime={self.regime}")
        if self.component is not None:
            where.append(f"component={self.component}")
        if where:
            return f"{self.detail} ({', '.join(where)})"
        return self.detail

    def located(self, **kw):
        """Return a copy with additional location fields set."""
        fields = dict(regime=self.regime, component=self.component, timestep=self.timestep)
        fields.update({k: v for k, v in kw.items() if v is not None})
        return NumericalError(self.detail, **fields)


class SignalExhausted(RegimeDynError):
    pass


class EmptyWordError(RegimeDynError, ValueError):
    pass


class NoUniqueFixedPoint(RegimeDynError):
    pass


class SamplingError(RegimeDynError):
    pass


class ExpressionSyntaxError(RegimeDynError, SyntaxError):
    """Parse failure at byte ``offset`` of ``text``."""

    def __init__(self, message, text, offset, expected=()):
        self.text = text
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        msg = f"{message} at offset {offset}"
        if self.expected:
            msg += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(msg)


class VariableIndexError(RegimeDynError, IndexError):
    pass


class ScenarioError(RegimeDynError):
    """Invalid scenario file; ``location`` is a JSON path and/or file:line."""

    def __init__(self, message, location=None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
