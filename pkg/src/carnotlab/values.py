"""Extended values: explicit symbolic state for divergent quantities.

Quadratures over homoclinic classes can be infinite (for example the time
cost of reaching an equilibrium).  Such results are reported as the
``DIVERGENT`` sentinel rather than a float infinity so that no arithmetic is
ever carried out with them by accident.
"""

from __future__ import annotations

__all__ = ["Divergent", "DIVERGENT", "is_divergent", "value_to_jsonable"]


class Divergent:
    """Marker for an integral or limit that diverges to +/- infinity."""

    __slots__ = ("sign",)

    def __init__(self, sign: int = +1):
        if sign not in (-1, +1):
            raise ValueError("sign must be +1 or -1")
        self.sign = sign

    def __repr__(self) -> str:
        return "DIVERGENT" if self.sign > 0 else "DIVERGENT(-)"

    def __eq__(self, other) -> bool:
        return isinstance(other, Divergent) and other.sign == self.sign

    def __hash__(self) -> int:
        return hash(("divergent", self.sign))

    # arithmetic with a divergent quantity is always a programming error
    def _refuse(self, *_args):
        raise TypeError("arithmetic with a divergent value is not defined")

    __add__ = __radd__ = __sub__ = __rsub__ = _refuse
    __mul__ = __rmul__ = __truediv__ = __rtruediv__ = _refuse
    __neg__ = _refuse
    __lt__ = __le__ = __gt__ = __ge__ = _refuse
    __float__ = _refuse


DIVERGENT = Divergent(+1)


def is_divergent(value) -> bool:
    return isinstance(value, Divergent)


def value_to_jsonable(value):
    """Serialize a float-or-Divergent for JSON reports."""
    if isinstance(value, Divergent):
        return "divergent" if value.sign > 0 else "divergent(-)"
    if value is None:
        return None
    return float(value)
