"""Reaction network model and the ``.crn`` text format.

A network file is line oriented::

    # comment
    species: A, B, C          (optional; fixes the row order)
    1: A + 2B -> 2A
    F: -> B                   (inflow)
    r: A <-> B                (expands to r.fwd and r.rev)

Species default to first-appearance order. Reactions keep file order.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .exact_linalg import IntMatrix, mat_vec, maximize_lp, primitive_integer_vector, rational_nullspace

MAX_COEFFICIENT = 2**31

Position = tuple[int, int]
"""A reactivity position ``(reaction index j, species index m)``."""

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_NAME_RE = re.compile(rf"^{_NAME}$")
_LABEL_RE = re.compile(r"^[A-Za-z0-9_.]+$")
_TERM_RE = re.compile(rf"^(?P<coef>[+-]?[0-9]*\.?[0-9]*(?:[eE][+-]?[0-9]+)?)\s*(?P<name>{_NAME})$")


class NetworkError(ValueError):
    """Invalid network content (semantic problem, not a syntax error)."""


class ParseError(NetworkError):
    def __init__(self, message: str, line: int, column: int = 1):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Reaction:
    label: str
    reactants: dict[str, int] = field(default_factory=dict)
    products: dict[str, int] = field(default_factory=dict)

    @property
    def is_inflow(self) -> bool:
        return not self.reactants

    @property
    def is_outflow(self) -> bool:
        return not self.products

    def __str__(self) -> str:
        return _render_reaction(self)


@dataclass(frozen=True)
class Network:
    """Species and reactions in a fixed order.

    Indices into ``species`` and ``reactions`` are the row and column indices
    of the stoichiometric matrix and never change after construction.
    """

    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        if len(set(self.species)) != len(self.species):
            raise NetworkError("duplicate species name")
        labels = [r.label for r in self.reactions]
        if len(set(labels)) != len(labels):
            dup = next(l for l in labels if labels.count(l) > 1)
            raise NetworkError(f"duplicate reaction label {dup!r}")
        known = set(self.species)
        for r in self.reactions:
            if not r.reactants and not r.products:
                raise NetworkError(f"reaction {r.label!r} has neither reactants nor products")
            for name, coef in list(r.reactants.items()) + list(r.products.items()):
                if name not in known:
                    raise NetworkError(f"reaction {r.label!r} uses unknown species {name!r}")
                if not isinstance(coef, int) or coef < 1:
                    raise NetworkError(f"reaction {r.label!r}: coefficient of {name} must be a positive integer")
                if coef > MAX_COEFFICIENT:
                    raise NetworkError(f"reaction {r.label!r}: coefficient of {name} exceeds 2^31")

    @property
    def M(self) -> int:
        return len(self.species)

    @property
    def E(self) -> int:
        return len(self.reactions)

    @cached_property
    def species_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.species)}

    @cached_property
    def reaction_index(self) -> dict[str, int]:
        return {r.label: j for j, r in enumerate(self.reactions)}

    @cached_property
    def S(self) -> IntMatrix:
        return stoichiometric_matrix(self)

    @cached_property
    def S_float(self) -> np.ndarray:
        return np.array(self.S, dtype=float).reshape(self.M, self.E)

    @cached_property
    def pattern(self) -> tuple[Position, ...]:
        """Reactivity positions sorted by ``(j, m)``."""
        return tuple(sorted(reactivity_pattern(self)))

    def reactant_coefficient(self, j: int, m: int) -> int:
        return self.reactions[j].reactants.get(self.species[m], 0)

    def reactions_consuming(self, m: int) -> list[int]:
        name = self.species[m]
        return [j for j, r in enumerate(self.reactions) if name in r.reactants]

    def position_key(self, pos: Position) -> str:
        j, m = pos
        return f"{self.reactions[j].label}:{self.species[m]}"

    def parse_position(self, key: str) -> Position:
        """Inverse of :meth:`position_key`; accepts ``"1:A"``."""
        label, sep, name = key.rpartition(":")
        if not sep or label not in self.reaction_index or name not in self.species_index:
            raise KeyError(f"not a reactivity position of this network: {key!r}")
        pos = (self.reaction_index[label], self.species_index[name])
        if self.reactant_coefficient(*pos) == 0:
            raise KeyError(f"{name} is not a reactant of reaction {label}")
        return pos

    def to_dict(self) -> dict:
        return {
            "species": list(self.species),
            "reactions": [
                {"label": r.label, "reactants": dict(r.reactants), "products": dict(r.products)}
                for r in self.reactions
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Network":
        return cls(
            species=tuple(doc["species"]),
            reactions=tuple(
                Reaction(r["label"], dict(r.get("reactants", {})), dict(r.get("products", {})))
                for r in doc["reactions"]
            ),
        )

    def digest(self) -> str:
        """SHA-256 of the canonical JSON serialization."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _render_side(side: Mapping[str, int]) -> str:
    return " + ".join(name if c == 1 else f"{c}{name}" for name, c in side.items())


def _render_reaction(r: Reaction) -> str:
    parts = [f"{r.label}:", _render_side(r.reactants), "->", _render_side(r.products)]
    return " ".join(p for p in parts if p)


def render_network(net: Network) -> str:
    """Serialize to the ``.crn`` grammar; ``parse_network`` inverts it."""
    lines = ["species: " + ", ".join(net.species)]
    lines += [_render_reaction(r) for r in net.reactions]
    return "\n".join(lines) + "\n"


def _parse_side(text: str, lineno: int, col0: int) -> dict[str, int]:
    side: dict[str, int] = {}
    if not text.strip():
        return side
    offset = 0
    for raw in text.split("+"):
        col = col0 + offset + (len(raw) - len(raw.lstrip()))
        offset += len(raw) + 1
        term = raw.strip()
        if not term:
            raise ParseError("empty term", lineno, col)
        m = _TERM_RE.match(term)
        if not m:
            raise ParseError(f"cannot parse term {term!r}", lineno, col)
        coef_s, name = m.group("coef"), m.group("name")
        if coef_s in ("", "+"):
            coef = 1
        else:
            try:
                value = Fraction(coef_s)
            except ValueError:
                raise ParseError(f"bad coefficient {coef_s!r}", lineno, col) from None
            if value < 0 or coef_s.startswith("-"):
                raise ParseError(f"negative coefficient {coef_s!r}", lineno, col)
            if value.denominator != 1 or any(ch in coef_s for ch in ".eE"):
                raise ParseError(f"non-integer coefficient {coef_s!r}", lineno, col)
            coef = int(value)
            if coef == 0:
                raise ParseError("zero coefficient", lineno, col)
            if coef > MAX_COEFFICIENT:
                raise ParseError(f"coefficient {coef} exceeds 2^31", lineno, col)
        side[name] = side.get(name, 0) + coef
    return side


def parse_network(text: str) -> Network:
    """Parse the line-oriented network format.

    Raises :class:`ParseError` (with line and column) on syntax errors,
    duplicate labels, bad coefficients, or an empty network.
    """
    header: Optional[list[str]] = None
    seen: list[str] = []
    reactions: list[Reaction] = []
    labels: set[str] = set()

    def add(label: str, lhs: dict, rhs: dict, lineno: int, col: int):
        if label in labels:
            raise ParseError(f"duplicate reaction label {label!r}", lineno, col)
        if not lhs and not rhs:
            raise ParseError("reaction with no reactants and no products", lineno, col)
        labels.add(label)
        reactions.append(Reaction(label, lhs, rhs))

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(line) - len(line.lstrip())
        if stripped.startswith("species:"):
            if header is not None:
                raise ParseError("repeated species header", lineno, indent + 1)
            if reactions:
                raise ParseError("species header must precede reactions", lineno, indent + 1)
            names = [n.strip() for n in stripped[len("species:"):].split(",")]
            for n in names:
                if not _NAME_RE.match(n):
                    raise ParseError(f"bad species name {n!r}", lineno, indent + 1)
            if len(set(names)) != len(names):
                raise ParseError("duplicate species in header", lineno, indent + 1)
            header = names
            continue
        label, sep, rest = line.partition(":")
        if not sep:
            raise ParseError("expected 'label: reactants -> products'", lineno, indent + 1)
        label = label.strip()
        if not _LABEL_RE.match(label):
            raise ParseError(f"bad reaction label {label!r}", lineno, indent + 1)
        rest_col = len(label) + indent + 2
        if "<->" in rest:
            arrow, reversible = "<->", True
        elif "->" in rest:
            arrow, reversible = "->", False
        else:
            raise ParseError("missing arrow '->' or '<->'", lineno, rest_col)
        if rest.count("->") != 1:
            raise ParseError("more than one arrow", lineno, rest_col)
        lhs_text, _, rhs_text = rest.partition(arrow)
        lhs = _parse_side(lhs_text, lineno, rest_col)
        rhs = _parse_side(rhs_text, lineno, rest_col + len(lhs_text) + len(arrow))
        for name in list(lhs) + list(rhs):
            if header is not None and name not in header:
                raise ParseError(f"species {name!r} not declared in header", lineno, rest_col)
            if name not in seen:
                seen.append(name)
        if reversible:
            add(label + ".fwd", lhs, rhs, lineno, indent + 1)
            add(label + ".rev", dict(rhs), dict(lhs), lineno, indent + 1)
        else:
            add(label, lhs, rhs, lineno, indent + 1)
    if not reactions:
        raise ParseError("network has no reactions", 1, 1)
    try:
        return Network(tuple(header if header is not None else seen), tuple(reactions))
    except NetworkError as exc:
        raise ParseError(str(exc), 1, 1) from None


def load_network(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_network(fh.read())


def stoichiometric_matrix(net: Network) -> IntMatrix:
    """M x E integer matrix, column j = products minus reactants of reaction j."""
    S = [[0] * net.E for _ in range(net.M)]
    idx = {s: i for i, s in enumerate(net.species)}
    for j, r in enumerate(net.reactions):
        for name, c in r.products.items():
            S[idx[name]][j] += c
        for name, c in r.reactants.items():
            S[idx[name]][j] -= c
    return S


def reactivity_pattern(net: Network) -> frozenset[Position]:
    """All ``(j, m)`` with species m a reactant of reaction j."""
    idx = {s: i for i, s in enumerate(net.species)}
    return frozenset((j, idx[name]) for j, r in enumerate(net.reactions) for name in r.reactants)


def autocatalytic_reactions(net: Network) -> list[Position]:
    """Pairs ``(j, m)`` where reaction j makes strictly more m than it consumes, and consumes some."""
    out = []
    for j, r in enumerate(net.reactions):
        for m, name in enumerate(net.species):
            s = r.reactants.get(name, 0)
            if r.products.get(name, 0) > s > 0:
                out.append((j, m))
    return sorted(out, key=lambda p: (p[1], p[0]))


def positive_kernel(S: Sequence[Sequence[int]], n_cols: Optional[int] = None) -> Optional[list[Fraction]]:
    """A strictly positive rational ``r`` with ``S r = 0``, or ``None``.

    Maximizes ``min_j r_j`` over the box ``r <= 1`` of the exact kernel by an
    exact simplex on the nullspace coordinates, then rescales the optimum to
    its primitive integer representative.
    """
    E = len(S[0]) if S else (n_cols or 0)
    if E == 0:
        return None
    basis = rational_nullspace(S, cols=E)
    if not basis:
        return None
    k = len(basis)
    N = [[basis[b][j] for b in range(k)] for j in range(E)]  # E x k
    # variables: y+ (k), y- (k), t ;  rows: t - N y <= 0  and  N y <= 1
    A, b = [], []
    for j in range(E):
        A.append([-v for v in N[j]] + list(N[j]) + [1])
        b.append(0)
    for j in range(E):
        A.append(list(N[j]) + [-v for v in N[j]] + [0])
        b.append(1)
    c = [0] * (2 * k) + [1]
    res = maximize_lp(c, A, b)
    if res is None:  # pragma: no cover - bounded by construction
        raise RuntimeError("positive kernel LP unbounded")
    value, x = res
    if value <= 0:
        return None
    y = [x[i] - x[k + i] for i in range(k)]
    r = [sum((N[j][i] * y[i] for i in range(k)), Fraction(0)) for j in range(E)]
    r = [Fraction(v) for v in primitive_integer_vector(r)]
    assert all(v > 0 for v in r) and all(v == 0 for v in mat_vec(S, r))
    return r


def is_positive_kernel_vector(S: Sequence[Sequence[int]], r: Iterable) -> bool:
    r = [Fraction(v) for v in r]
    return all(v > 0 for v in r) and all(v == 0 for v in mat_vec(S, r))
