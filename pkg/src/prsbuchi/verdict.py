"""Three-valued answers and search budgets shared by the engines."""
from __future__ import annotations

from dataclasses import dataclass

YES = "yes"
NO = "no"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class Verdict:
    answer: str
    witness: object = None
    reason: str = ""

    @classmethod
    def yes(cls, witness=None, reason=""):
        return cls(YES, witness, reason)

    @classmethod
    def no(cls, reason=""):
        return cls(NO, None, reason)

    @classmethod
    def unknown(cls, reason=""):
        return cls(UNKNOWN, None, reason)

    @property
    def is_yes(self):
        return self.answer == YES

    @property
    def is_no(self):
        return self.answer == NO

    @property
    def is_unknown(self):
        return self.answer == UNKNOWN

    def __bool__(self):
        raise TypeError("Verdict is three-valued; test .is_yes / .is_no explicitly")


@dataclass(frozen=True)
class SearchBudget:
    """Bounds for explicit-state searches.

    ``marking_bound`` caps the number of tokens (parallel engines) or the term
    size (oracle); ``depth_bound`` caps path length; ``node_bound`` caps the
    number of explored states.
    """

    marking_bound: int = 12
    depth_bound: int = 64
    node_bound: int = 20000

    def __post_init__(self):
        if min(self.marking_bound, self.depth_bound, self.node_bound) < 1:
            raise ValueError("budget bounds must be positive")


DEFAULT_BUDGET = SearchBudget()
