"""Exception hierarchy.

Every library error derives from :class:`FiltrationLabError`. Errors that
come with a counterexample carry it in ``witness`` (a plain dict, ready to
serialise).
"""

from __future__ import annotations


class FiltrationLabError(Exception):
    def __init__(self, message: str = "", witness: dict | None = None):
        super().__init__(message)
        self.witness = witness


class MismatchedSpace(FiltrationLabError, ValueError):
    pass


class HorizonMismatch(FiltrationLabError, ValueError):
    pass


class GridMismatch(FiltrationLabError, ValueError):
    pass


class DimMismatch(FiltrationLabError, ValueError):
    pass


class InvalidMeasure(FiltrationLabError, ValueError):
    pass


class InvalidPartition(FiltrationLabError, ValueError):
    pass


class InvalidFiltration(FiltrationLabError, ValueError):
    pass


class NotAdapted(FiltrationLabError, ValueError):
    pass


class NotPredictable(FiltrationLabError, ValueError):
    pass


class NotMartingale(FiltrationLabError, ValueError):
    pass


class NotStronglyOrthogonal(FiltrationLabError, ValueError):
    pass


class StructureConditionFails(FiltrationLabError, ValueError):
    pass


class MinimalMeasureNotPositive(FiltrationLabError, ValueError):
    pass


class BadIndexSet(FiltrationLabError, ValueError):
    pass


class DensityHypothesisFails(FiltrationLabError, ValueError):
    pass


class CertainDefault(FiltrationLabError, ValueError):
    """Hazard reached 1 on a survivor block: default is predictably certain."""


class ZeroJointWeightInsideSupport(FiltrationLabError, ValueError):
    pass


class InvalidDefaultModel(FiltrationLabError, ValueError):
    pass


class HypothesisFailed(FiltrationLabError):
    """A theorem's hypothesis does not hold; ``report`` holds the partial report."""

    def __init__(self, hypothesis: str, message: str = "", witness: dict | None = None, report=None):
        super().__init__(f"hypothesis {hypothesis} failed: {message}", witness)
        self.hypothesis = hypothesis
        self.report = report


class CapExceeded(FiltrationLabError, ValueError):
    pass


class ParseError(FiltrationLabError):
    pass


class ValidationError(FiltrationLabError):
    def __init__(self, field: str, message: str, witness: dict | None = None):
        super().__init__(f"{field}: {message}", witness)
        self.field = field
