from functools import lru_cache
from itertools import combinations
from typing import Iterator, Tuple

import galois

from .errors import ValidationError


def compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Yield all tuples of `parts` non-negative integers summing to `total`.

    Tuples come out in lexicographic order, so every level sum in the package
    visits level vectors in the same order.
    """
    if parts < 1:
        raise ValidationError(f"need at least one part, got {parts}")
    if total < 0:
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def level_vectors(max_level: int, parts: int, min_level: int = 0) -> Iterator[Tuple[int, ...]]:
    """Level vectors j with min_level <= |j| <= max_level, level-major."""
    for level in range(min_level, max_level + 1):
        yield from compositions(level, parts)


@lru_cache(maxsize=None)
def is_prime(n: int) -> bool:
    return n >= 2 and bool(galois.is_prime(n))


def check_base(b: int) -> int:
    if int(b) != b or b < 2:
        raise ValidationError(f"base must be an integer >= 2, got {b}")
    return int(b)


def nonempty_subsets(s: int) -> Iterator[Tuple[int, ...]]:
    """Non-empty subsets of {0, ..., s-1} as sorted tuples, by size then lexicographically."""
    for size in range(1, s + 1):
        yield from combinations(range(s), size)
