"""Extended reals: floats plus an explicit ``+inf`` marker.

Values of ``g`` and ``phi`` may be infinite outside the domain. Rather than
letting ``float('inf')`` flow through arithmetic (and eventually produce
NaNs), such values are represented by the singleton :data:`INF`, which
supports comparisons but refuses arithmetic.
"""

import math
from typing import Union


class _Infinity:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __float__(self):
        return math.inf

    def __reduce__(self):
        return (_Infinity, ())

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash(math.inf)

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INF = _Infinity()

ExtReal = Union[float, _Infinity]


def is_inf(value) -> bool:
    return value is INF


def to_float(value: ExtReal) -> float:
    """Convert for reporting only (JSON, printing)."""
    return math.inf if value is INF else float(value)
