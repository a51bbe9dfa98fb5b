"""The order graph: subsets of variables linked by single-variable additions.

A state is a plain ``int`` whose low ``d`` bits mark the variables already
placed in the ordering; an action is the index of the next variable. The
graph itself is never materialized, every table downstream is keyed on these
integers.
"""

from itertools import permutations
from math import factorial
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .errors import InfeasibleAction, LimitExceeded

ENUMERATION_LIMIT = 9

Ordering = Tuple[int, ...]


def full_state(d: int) -> int:
    return (1 << d) - 1


def layer(state: int) -> int:
    """Number of variables already ordered in ``state``."""
    return bin(state).count("1")


def members(state: int) -> List[int]:
    return [i for i in range(state.bit_length()) if state >> i & 1]


def state_from_members(variables, d: int) -> int:
    state = 0
    for v in variables:
        if not 0 <= v < d:
            raise ValueError(f"variable {v} out of range for d={d}")
        state |= 1 << v
    return state


def is_valid_state(state: int, d: int) -> bool:
    return 0 <= state <= full_state(d)


def feasible_actions(state: int, d: int) -> List[int]:
    """Variables not yet in ``state``, ascending."""
    return [i for i in range(d) if not state >> i & 1]


def feasible_mask(state: int, d: int) -> np.ndarray:
    return ~state_vector(state, d).astype(bool)


def apply_action(state: int, action: int) -> int:
    if state >> action & 1:
        raise InfeasibleAction(f"variable {action} is already ordered in state {state:#b}")
    return state | (1 << action)


def state_vector(state: int, d: int) -> np.ndarray:
    """Binary float vector; entry ``i`` is 1 iff variable ``i`` is in ``state``."""
    return ((state >> np.arange(d)) & 1).astype(float)


def state_matrix(states: Sequence[int], d: int) -> np.ndarray:
    states = np.asarray(states, dtype=np.int64)
    return ((states[:, None] >> np.arange(d)[None, :]) & 1).astype(float)


def check_ordering(ordering: Sequence[int], d: int) -> Ordering:
    ordering = tuple(int(v) for v in ordering)
    if sorted(ordering) != list(range(d)):
        raise ValueError(f"{ordering} is not a permutation of range({d})")
    return ordering


def enumerate_orderings(d: int, limit: int = ENUMERATION_LIMIT) -> Iterator[Ordering]:
    """All ``d!`` permutations of ``range(d)`` in lexicographic order."""
    if d > limit:
        raise LimitExceeded(
            f"d={d} gives {factorial(d)} orderings, above the enumeration limit d<={limit}"
        )
    return permutations(range(d))


def ordering_prefix_states(ordering: Sequence[int]) -> List[int]:
    """States visited by the path of ``ordering``, from the empty set to the full set."""
    states = [0]
    for v in ordering:
        states.append(apply_action(states[-1], v))
    return states


def states_at_layer(d: int, k: int) -> List[int]:
    return [s for s in range(1 << d) if layer(s) == k]


def states_by_layer(d: int) -> List[List[int]]:
    out = [[] for _ in range(d + 1)]
    for s in range(1 << d):
        out[layer(s)].append(s)
    return out


def feasible_pairs(d: int) -> List[Tuple[int, int]]:
    """Every (state, action) edge of the order graph, ``d * 2**(d-1)`` of them."""
    return [(s, a) for s in range(1 << d) for a in feasible_actions(s, d)]


def state_bits(state: int, d: int) -> str:
    """Text form used in exported files: character ``i`` is variable ``i``."""
    return "".join("1" if state >> i & 1 else "0" for i in range(d))


def parse_state_bits(bits: str) -> int:
    return sum(1 << i for i, c in enumerate(bits) if c == "1")
