"""Child-Selections, their stoichiometric matrices and behavior coefficients.

A Child-Selection on an ordered species subset maps each species to a
distinct reaction that consumes it. Its matrix ``S[J]`` has as i-th column
the stoichiometric column of reaction ``J(m_i)``, restricted to the rows of
the subset; the behavior coefficient is ``alpha = det S[J]``.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

import numpy as np

from .exact_linalg import IntMatrix, det_int
from .network import Network, Position

DEFAULT_MAX_SELECTIONS = 10**6


class SelectionLimitError(RuntimeError):
    """Raised when an enumeration exceeds the ``max_selections`` guard."""


class SymbolError(ValueError):
    """A symbol assignment is missing a position or has a nonpositive value."""


def max_selections_default() -> int:
    env = os.environ.get("NETJAC_MAX_SELECTIONS")
    return int(env) if env else DEFAULT_MAX_SELECTIONS


@dataclass(frozen=True)
class ChildSelection:
    species_subset: tuple[int, ...]
    assignment: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.species_subset)

    @property
    def positions(self) -> tuple[Position, ...]:
        """Symbol positions ``(J(m), m)`` in subset order."""
        return tuple(zip(self.assignment, self.species_subset))

    def is_valid_for(self, net: Network) -> bool:
        if len(self.species_subset) != len(self.assignment):
            return False
        if list(self.species_subset) != sorted(set(self.species_subset)):
            return False
        if len(set(self.assignment)) != len(self.assignment):
            return False
        return all(net.reactant_coefficient(j, m) >= 1 for j, m in self.positions)

    def format(self, net: Network) -> str:
        return ", ".join(f"{net.species[m]}->{net.reactions[j].label}" for j, m in self.positions)


@dataclass(frozen=True)
class CBComponent:
    """Cauchy-Binet component of one selection: ``S[J]`` and ``alpha``."""

    selection: ChildSelection
    s_matrix: tuple[tuple[int, ...], ...]
    alpha: int

    @property
    def n(self) -> int:
        return self.selection.n

    def format(self, net: Network) -> str:
        return f"{self.selection.format(net)} | alpha={self.alpha}"


def parse_selection(net: Network, text: str) -> ChildSelection:
    """Inverse of :meth:`ChildSelection.format`, e.g. ``"A->1, B->2"``."""
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, label = item.partition("->")
        name, label = name.strip(), label.strip()
        if not sep or name not in net.species_index or label not in net.reaction_index:
            raise ValueError(f"bad selection item {item!r}")
        pairs.append((net.species_index[name], net.reaction_index[label]))
    pairs.sort()
    sel = ChildSelection(tuple(m for m, _ in pairs), tuple(j for _, j in pairs))
    if not sel.is_valid_for(net):
        raise ValueError(f"not a Child-Selection of this network: {text!r}")
    return sel


class _Counter:
    def __init__(self, limit: Optional[int]):
        self.limit = max_selections_default() if limit is None else limit
        self.count = 0

    def tick(self):
        self.count += 1
        if self.count > self.limit:
            raise SelectionLimitError(
                f"more than {self.limit} Child-Selections; raise max_selections or NETJAC_MAX_SELECTIONS"
            )


def _backtrack(net: Network, subset: tuple[int, ...], counter: _Counter) -> Iterator[ChildSelection]:
    candidates = [net.reactions_consuming(m) for m in subset]
    if any(not c for c in candidates):
        return
    chosen: list[int] = []
    used: set[int] = set()

    def rec(i: int):
        if i == len(subset):
            counter.tick()
            yield ChildSelection(subset, tuple(chosen))
            return
        for j in candidates[i]:
            if j in used:
                continue
            used.add(j)
            chosen.append(j)
            yield from rec(i + 1)
            chosen.pop()
            used.discard(j)

    yield from rec(0)


def _normalize_subset(net: Network, subset: Iterable) -> tuple[int, ...]:
    out = set()
    for s in subset:
        m = net.species_index[s] if isinstance(s, str) else int(s)
        if not 0 <= m < net.M:
            raise ValueError(f"species index {m} out of range")
        out.add(m)
    return tuple(sorted(out))


def enumerate_selections(
    net: Network, subset: Iterable, max_selections: Optional[int] = None
) -> Iterator[ChildSelection]:
    """All Child-Selections on ``subset``, lexicographic in the assignment tuple.

    ``subset`` may hold species names or indices; it is taken in network order.
    """
    sub = _normalize_subset(net, subset)
    yield from _backtrack(net, sub, _Counter(max_selections))


def enumerate_all(net: Network, n: int, max_selections: Optional[int] = None) -> Iterator[ChildSelection]:
    """All n-Child-Selections: subsets in lexicographic order, then assignments.

    ``n = 0`` yields the single empty selection.
    """
    if not 0 <= n <= net.M:
        raise ValueError(f"n must lie in [0, {net.M}], got {n}")
    counter = _Counter(max_selections)
    if n == 0:
        counter.tick()
        yield ChildSelection((), ())
        return
    reactant_species = [m for m in range(net.M) if net.reactions_consuming(m)]
    for subset in itertools.combinations(reactant_species, n):
        yield from _backtrack(net, subset, counter)


def selection_matrix(net: Network, sel: ChildSelection) -> IntMatrix:
    S = net.S
    return [[S[m][j] for j in sel.assignment] for m in sel.species_subset]


def cb_component(net: Network, sel: ChildSelection) -> CBComponent:
    mat = selection_matrix(net, sel)
    return CBComponent(sel, tuple(tuple(row) for row in mat), det_int(mat))


def _symbol(r: Mapping[Position, float], pos: Position) -> float:
    try:
        v = float(r[pos])
    except KeyError:
        raise SymbolError(f"missing symbol for position {pos}") from None
    if not v > 0:
        raise SymbolError(f"symbol at {pos} must be positive, got {v}")
    return v


def cb_evaluate(comp: CBComponent, r: Mapping[Position, float]) -> np.ndarray:
    """``S[J]`` with column i scaled by the symbol at ``(J(m_i), m_i)``."""
    scale = np.array([_symbol(r, pos) for pos in comp.selection.positions])
    A = np.array(comp.s_matrix, dtype=float).reshape(comp.n, comp.n)
    return A * scale[np.newaxis, :]

