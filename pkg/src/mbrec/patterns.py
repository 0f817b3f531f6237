"""Behavior patterns: odd-length behavior sequences linking a user to an item.

The feature set for scoring contains every odd-length sequence of
behaviors up to length ``2 * alpha + 1``, except the single-step target
pattern (that one is the label being predicted, not a feature).
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from itertools import product

from .dataset import BehaviorSchema
from .errors import PatternCapacityError

PATTERN_SEP = ">"


@dataclass(frozen=True)
class BehaviorPattern:
    """An odd-length sequence of behavior indices into a schema."""

    steps: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(int(s) for s in self.steps))
        if len(self.steps) == 0 or len(self.steps) % 2 == 0:
            raise ValueError(
                f"pattern length must be odd and positive, got {len(self.steps)}"
            )
        if any(s < 0 for s in self.steps):
            raise ValueError(f"negative behavior index in {self.steps}")

    def __len__(self) -> int:
        return len(self.steps)

    def label(self, schema: BehaviorSchema) -> str:
        return PATTERN_SEP.join(schema.names[s] for s in self.steps)


@dataclass(frozen=True)
class PatternSet:
    """Deterministically ordered pattern collection for a given alpha."""

    patterns: tuple[BehaviorPattern, ...]
    alpha: int

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def labels(self, schema: BehaviorSchema) -> list[str]:
        return [p.label(schema) for p in self.patterns]


def enumerate_patterns(schema: BehaviorSchema, alpha: int) -> PatternSet:
    """All odd-length patterns up to length 2*alpha+1, minus the target step.

    Order is length-major, then lexicographic on the step indices, so the
    result is identical across runs. Total size is
    ``sum(|B|**(2x+1) for x in 0..alpha) - 1``.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    n = len(schema)
    total = sum(n ** (2 * x + 1) for x in range(alpha + 1)) - 1
    if total > sys.maxsize:
        raise PatternCapacityError(
            f"pattern set of size {total} exceeds platform capacity"
        )
    target = (schema.target_index,)
    patterns = []
    for x in range(alpha + 1):
        length = 2 * x + 1
        for steps in product(range(n), repeat=length):
            if steps == target:
                continue
            patterns.append(BehaviorPattern(steps))
    return PatternSet(tuple(patterns), alpha)


def parse_pattern(label: str, schema: BehaviorSchema) -> BehaviorPattern:
    """Inverse of :meth:`BehaviorPattern.label`."""
    steps = tuple(schema.index(name) for name in label.split(PATTERN_SEP))
    return BehaviorPattern(steps)
