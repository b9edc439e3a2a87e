"""Cauchy-Binet expansions of principal minors and characteristic coefficients.

With ``det(G - lam*Id) = (-lam)^M + a_1 (-lam)^(M-1) + ... + a_M``, each
``a_n`` is a multilinear polynomial in the reactivity symbols with one
monomial ``alpha_J * prod r'_(J(m), m)`` per n-Child-Selection ``J``.
Signs of these polynomials, and hence P0(-) membership and structural
instability, follow from the integer ``alpha`` values alone.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .network import Network, Position, autocatalytic_reactions
from .selections import (
    CBComponent,
    ChildSelection,
    SelectionLimitError,
    SymbolError,
    _normalize_subset,
    cb_component,
    enumerate_all,
    enumerate_selections,
    max_selections_default,
)


class SignClass(str, enum.Enum):
    IDENTICALLY_ZERO = "IdenticallyZero"
    FIXED_POSITIVE = "FixedPositive"
    FIXED_NEGATIVE = "FixedNegative"
    MIXED = "Mixed"


@dataclass(frozen=True)
class Monomial:
    alpha: int
    symbols: frozenset[Position]
    selection: Optional[ChildSelection] = field(default=None, compare=False)


@dataclass(frozen=True)
class CoefficientExpansion:
    """Stored monomials of ``a_n`` (scope ``"coefficient"``) or of one principal minor.

    Monomials with ``alpha = 0`` are dropped; ``zero_count`` remembers how
    many selections were dropped that way.
    """

    degree: int
    monomials: tuple[Monomial, ...]
    scope: str = "coefficient"
    subset: Optional[tuple[int, ...]] = None
    zero_count: int = 0

    @property
    def selection_count(self) -> int:
        return len(self.monomials) + self.zero_count

    @property
    def symbols(self) -> frozenset[Position]:
        return frozenset().union(*(mono.symbols for mono in self.monomials)) if self.monomials else frozenset()


def _build(net: Network, selections: Iterable[ChildSelection], degree: int, scope: str, subset=None):
    monomials, zeros = [], 0
    for sel in selections:
        comp = cb_component(net, sel)
        if comp.alpha == 0:
            zeros += 1
        else:
            monomials.append(Monomial(comp.alpha, frozenset(sel.positions), sel))
    return CoefficientExpansion(degree, tuple(monomials), scope, subset, zeros)


def minor_expansion(net: Network, subset: Iterable, max_selections: Optional[int] = None) -> CoefficientExpansion:
    """Expansion of the principal minor of ``G`` on ``subset``."""
    sub = _normalize_subset(net, subset)
    if not sub:
        raise ValueError("subset must be nonempty")
    sels = enumerate_selections(net, sub, max_selections=max_selections)
    return _build(net, sels, len(sub), "minor", sub)


def _subset_chunk(args):
    net, subset, limit = args
    return list(enumerate_selections(net, subset, max_selections=limit))


def coefficient_expansion(
    net: Network, n: int, max_selections: Optional[int] = None, jobs: int = 1
) -> CoefficientExpansion:
    """Expansion of ``a_n`` over all n-Child-Selections.

    ``jobs > 1`` splits the species subsets over worker processes; the
    monomial order is the same as for the serial path.
    """
    if jobs <= 1 or n == 0:
        return _build(net, enumerate_all(net, n, max_selections=max_selections), n, "coefficient")
    limit = max_selections_default() if max_selections is None else max_selections
    reactant_species = [m for m in range(net.M) if net.reactions_consuming(m)]
    subsets = list(itertools.combinations(reactant_species, n))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunks = list(pool.map(_subset_chunk, [(net, s, limit) for s in subsets]))
    if sum(len(c) for c in chunks) > limit:
        raise SelectionLimitError(f"more than {limit} Child-Selections")
    return _build(net, itertools.chain.from_iterable(chunks), n, "coefficient")


def characteristic_expansions(net: Network, max_selections: Optional[int] = None) -> list[CoefficientExpansion]:
    """Expansions of ``a_0 = 1, a_1, ..., a_M``."""
    return [coefficient_expansion(net, n, max_selections) for n in range(net.M + 1)]


def sign_class(exp: CoefficientExpansion) -> SignClass:
    signs = {1 if mono.alpha > 0 else -1 for mono in exp.monomials if mono.alpha != 0}
    if not signs:
        return SignClass.IDENTICALLY_ZERO
    if len(signs) == 2:
        return SignClass.MIXED
    return SignClass.FIXED_POSITIVE if signs == {1} else SignClass.FIXED_NEGATIVE


def evaluate(exp: CoefficientExpansion, r: Mapping[Position, float]) -> float:
    """``sum alpha * prod r[pos]`` over the stored monomials."""
    total = 0.0
    for mono in exp.monomials:
        prod = 1.0
        for pos in mono.symbols:
            try:
                prod *= r[pos]
            except KeyError:
                raise SymbolError(f"missing symbol for position {pos}") from None
        total += mono.alpha * prod
    return total


def evaluate_exact(exp: CoefficientExpansion, r: Mapping[Position, object]):
    """Same as :func:`evaluate` but keeps the arithmetic type of ``r`` (e.g. Fraction)."""
    return sum((mono.alpha * math.prod(r[p] for p in mono.symbols) for mono in exp.monomials), 0)


def mixed_sign_witness(
    exp: CoefficientExpansion, base: float = 1.0, max_doublings: int = 200
) -> tuple[dict[Position, float], dict[Position, float]]:
    """Assignments ``(r_plus, r_minus)`` with ``evaluate > 0`` and ``< 0``.

    Picks one positive and one negative monomial; inflating the symbols of
    one of them by ``H`` (all other symbols at ``base``) makes it dominate
    for ``H`` large, since no other monomial has the same symbol set.
    """
    if sign_class(exp) is not SignClass.MIXED:
        raise ValueError("witnesses exist only for Mixed expansions")
    pos_mono = next(m for m in exp.monomials if m.alpha > 0)
    neg_mono = next(m for m in exp.monomials if m.alpha < 0)
    out = []
    for mono, want in ((pos_mono, 1), (neg_mono, -1)):
        H = 2.0
        for _ in range(max_doublings):
            r = {p: base for p in exp.symbols}
            r.update({p: H for p in mono.symbols})
            if want * evaluate(exp, r) > 0:
                out.append(r)
                break
            H *= 2.0
        else:  # pragma: no cover - unreachable for distinct multilinear monomials
            raise RuntimeError("witness search did not terminate")
    return out[0], out[1]


def _violates_p0(comp: CBComponent) -> bool:
    # sign alpha = (-1)^(n-1)
    return comp.alpha != 0 and (comp.alpha > 0) == (comp.n % 2 == 1)


@dataclass
class P0Report:
    is_p0: bool
    violations: list[CBComponent]

    def to_dict(self, net: Network) -> dict:
        return {
            "is_p0": self.is_p0,
            "violations": [
                {"n": c.n, "selection": c.selection.format(net), "alpha": c.alpha} for c in self.violations
            ],
        }


def p0_check(net: Network, max_selections: Optional[int] = None) -> P0Report:
    """Whether ``G`` is P0(-) for every choice of symbols.

    That holds iff every behavior coefficient has sign ``(-1)^n`` or is zero;
    the report lists each selection with the opposite sign.
    """
    violations = []
    for n in range(1, net.M + 1):
        for sel in enumerate_all(net, n, max_selections=max_selections):
            comp = cb_component(net, sel)
            if _violates_p0(comp):
                violations.append(comp)
    return P0Report(not violations, violations)


def instability_certificate(net: Network, max_selections: Optional[int] = None) -> Optional[CBComponent]:
    """First selection (by n, subset, assignment) with ``sign alpha = (-1)^(n-1)``.

    For ``n = 1`` such a selection is exactly an autocatalytic pair, so that
    level is read off :func:`autocatalytic_reactions` without enumeration.
    """
    auto = autocatalytic_reactions(net)
    if auto:
        j, m = auto[0]
        return cb_component(net, ChildSelection((m,), (j,)))
    for n in range(2, net.M + 1):
        for sel in enumerate_all(net, n, max_selections=max_selections):
            comp = cb_component(net, sel)
            if _violates_p0(comp):
                return comp
    return None


def expansion_summary(exp: CoefficientExpansion, sample: int = 10) -> dict:
    return {
        "n": exp.degree,
        "monomial_count": len(exp.monomials),
        "zero_alpha_count": exp.zero_count,
        "sign_class": sign_class(exp).value,
        "sample_alphas": [m.alpha for m in exp.monomials[:sample]],
    }
