# qherm/errors.py
from __future__ import annotations


class FieldError(ValueError):
    """Bad field size or an element outside the expected subfield."""


class ParameterError(ValueError):
    """(a, b) outside a ≠ 0, b ∉ GF(q)."""


class GeometryError(ValueError):
    pass


class FormatError(ValueError):
    """A point-set, collineation, witness or OA file that does not parse."""


class TheoremViolation(RuntimeError):
    """A checked statement about the construction failed."""


class GroupCapExceeded(TheoremViolation):
    pass
