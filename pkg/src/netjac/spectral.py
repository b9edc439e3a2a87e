"""Numeric Jacobians ``G(r') = S R(r')``, spectra, inertia and crossing hunts.

Symbol assignments are plain dicts from reactivity positions ``(j, m)`` to
positive floats. Two constructions turn existence statements about
Cauchy-Binet components into concrete assignments:

* epsilon rescaling -- keep the symbols of one Child-Selection and shrink
  all others by ``eps``; for small ``eps`` the full Jacobian inherits the
  component's stable and unstable eigenvalues.
* homotopy hunts -- move the held symbols linearly from a stabilizing to a
  destabilizing choice and bisect on the sign of the largest real part. When
  the held block stays invertible the crossing is a purely imaginary pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .network import Network, Position
from .selections import (
    ChildSelection,
    SymbolError,
    _normalize_subset,
    cb_component,
    cb_evaluate,
    enumerate_selections,
)

Assignment = dict[Position, float]

EPS_SCHEDULE_MIN = 2.0**-40


class EigenError(RuntimeError):
    pass


class InheritanceError(RuntimeError):
    def __init__(self, message: str, inertia: Optional["Inertia"] = None):
        super().__init__(message)
        self.inertia = inertia


class HuntError(RuntimeError):
    pass


class PithmPreconditionError(ValueError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class Inertia:
    sigma_minus: int
    sigma_plus: int
    sigma_zero: int

    @property
    def size(self) -> int:
        return self.sigma_minus + self.sigma_plus + self.sigma_zero

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.sigma_minus, self.sigma_plus, self.sigma_zero)


# -- assignments -------------------------------------------------------------


def uniform_assignment(net: Network, value: float = 1.0, positions: Optional[Iterable[Position]] = None) -> Assignment:
    return {p: float(value) for p in (net.pattern if positions is None else positions)}


def assignment_from_keys(net: Network, doc: Mapping[str, float]) -> Assignment:
    """``{"1:A": 3.5}`` -> ``{(j, m): 3.5}``."""
    return {net.parse_position(k): float(v) for k, v in doc.items()}


def assignment_to_keys(net: Network, r: Mapping[Position, float]) -> dict[str, float]:
    return {net.position_key(p): float(r[p]) for p in sorted(r)}


def jacobian(net: Network, r: Mapping[Position, float]) -> np.ndarray:
    """``G = S R`` with ``R[j, m] = r[(j, m)]`` on the reactivity pattern.

    Zero symbols are accepted so that the ``eps = 0`` block form can be
    inspected; negative or missing ones are not.
    """
    R = np.zeros((net.E, net.M))
    for pos in net.pattern:
        try:
            v = float(r[pos])
        except KeyError:
            raise SymbolError(f"missing symbol {net.position_key(pos)}") from None
        if not (v >= 0 and np.isfinite(v)):
            raise SymbolError(f"symbol {net.position_key(pos)} must be nonnegative, got {v}")
        R[pos] = v
    return net.S_float @ R


def eigenvalues(A) -> np.ndarray:
    """All eigenvalues, sorted by real part then imaginary part.

    LAPACK ``geev`` underneath: balancing, Hessenberg reduction and shifted
    QR iteration.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"eigenvalues needs a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise EigenError("matrix has non-finite entries")
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigenvalue iteration did not converge: {exc}") from exc
    eigs = np.asarray(eigs, dtype=complex)
    order = np.lexsort((eigs.imag, eigs.real))
    return eigs[order]


def zero_band(eigs) -> float:
    eigs = np.asarray(eigs)
    rho = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    return 1e-9 * (1.0 + rho)


def inertia(eigs, tol_zero: Optional[float] = None) -> Inertia:
    """Counts of eigenvalues with negative, positive and (within ``tol_zero``) zero real part."""
    eigs = np.asarray(eigs)
    tol = zero_band(eigs) if tol_zero is None else tol_zero
    if tol < 0:
        raise ValueError("tol_zero must be nonnegative")
    re = eigs.real
    zero = int(np.sum(np.abs(re) <= tol))
    return Inertia(int(np.sum(re < -tol)), int(np.sum(re > tol)), zero)


def matrix_inertia(A) -> Inertia:
    return inertia(eigenvalues(A))


def is_stable(A) -> bool:
    A = np.asarray(A)
    return matrix_inertia(A).sigma_minus == A.shape[0]


def is_unstable(A) -> bool:
    return matrix_inertia(A).sigma_plus > 0


def max_real_part(A) -> float:
    eigs = eigenvalues(A)
    return float(np.max(eigs.real)) if eigs.size else float("-inf")


def char_poly_numeric(A) -> list[float]:
    """Coefficients ``[a_0 = 1, a_1, ..., a_M]`` of ``det(A - lam Id) = sum a_n (-lam)^(M-n)``.

    Faddeev-LeVerrier recurrence; ``a_n`` is the sum of the n x n principal
    minors.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    c = [1.0]
    Mk = np.zeros_like(A)
    I = np.eye(n)
    for k in range(1, n + 1):
        Mk = A @ Mk + c[-1] * I
        c.append(-np.trace(A @ Mk) / k)
    # c_k belongs to det(lam Id - A); a_k = (-1)^k c_k
    return [((-1) ** k) * ck for k, ck in enumerate(c)]


# -- inheritance ---------------------------------------------------------------


def eps_schedule(eps_min: float = EPS_SCHEDULE_MIN) -> list[float]:
    if not 0 < eps_min <= 1:
        raise ValueError(f"eps_min must lie in (0, 1], got {eps_min}")
    out, eps = [], 1.0
    while eps >= eps_min:
        out.append(eps)
        eps /= 2.0
    return out


def rescaled_assignment(
    net: Network,
    sel: ChildSelection,
    r_selected: Mapping[Position, float],
    r_rest: Mapping[Position, float],
    eps: float,
) -> Assignment:
    """Selected symbols from ``r_selected``; every other symbol ``eps * r_rest``."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    held = set(sel.positions)
    out: Assignment = {}
    for pos in net.pattern:
        src = r_selected if pos in held else r_rest
        try:
            v = float(src[pos])
        except KeyError:
            raise SymbolError(f"missing symbol {net.position_key(pos)}") from None
        out[pos] = v if pos in held else eps * v
    return out


class InheritanceResult(NamedTuple):
    eps: float
    assignment: Assignment
    inertia: Inertia
    target: Inertia


def inherit_inertia(
    net: Network,
    sel: ChildSelection,
    r_selected: Mapping[Position, float],
    r_rest: Optional[Mapping[Position, float]] = None,
    eps_min: float = EPS_SCHEDULE_MIN,
) -> InheritanceResult:
    """Largest ``eps`` in ``1, 1/2, 1/4, ...`` whose full Jacobian dominates the component's inertia.

    The component ``G[J](r_selected)`` must be hyperbolic. The returned
    inertia satisfies ``sigma_minus >= target.sigma_minus`` and
    ``sigma_plus >= target.sigma_plus``.
    """
    comp = cb_component(net, sel)
    target = matrix_inertia(cb_evaluate(comp, r_selected))
    if target.sigma_zero:
        raise ValueError(f"component is not hyperbolic: inertia {target.as_tuple()}")
    rest = uniform_assignment(net) if r_rest is None else r_rest
    last = None
    for eps in eps_schedule(eps_min):
        r = rescaled_assignment(net, sel, r_selected, rest, eps)
        inn = matrix_inertia(jacobian(net, r))
        last = inn
        if inn.sigma_minus >= target.sigma_minus and inn.sigma_plus >= target.sigma_plus:
            return InheritanceResult(eps, r, inn, target)
    raise InheritanceError(
        f"eps schedule exhausted; inertia at eps={eps_min:g} is {last.as_tuple()}, target {target.as_tuple()}",
        last,
    )


# -- purely imaginary hunts ----------------------------------------------------


@dataclass
class HuntOptions:
    tol_cross: float = 1e-10
    min_omega: float = 1e-6
    eps_min: float = EPS_SCHEDULE_MIN
    max_bisections: int = 200
    inflation_cap: float = 2.0**40


@dataclass
class HuntResult:
    found: bool
    mu_star: float
    assignment: Assignment
    eigenpair: tuple[complex, complex]
    trace: list[tuple[float, float]]
    eps: float
    spectrum: list[complex] = field(default_factory=list)
    r_stable: Assignment = field(default_factory=dict)
    r_unstable: Assignment = field(default_factory=dict)
    full_inertia: dict[str, tuple[int, int, int]] = field(default_factory=dict)
    restricted_inertia: dict[str, tuple[int, int, int]] = field(default_factory=dict)
    component_bracket: Optional[bool] = None
    tracking: str = "spectrum"

    @property
    def omega(self) -> float:
        return abs(self.eigenpair[0].imag)

    def to_dict(self, net: Network) -> dict:
        cplx = lambda z: {"re": float(z.real), "im": float(z.imag)}
        return {
            "found": self.found,
            "mu_star": self.mu_star,
            "eps": self.eps,
            "eigenpair": [cplx(z) for z in self.eigenpair],
            "omega": self.omega,
            "spectrum": [cplx(z) for z in self.spectrum],
            "assignment": assignment_to_keys(net, self.assignment),
            "r_stable": assignment_to_keys(net, self.r_stable),
            "r_unstable": assignment_to_keys(net, self.r_unstable),
            "full_inertia": {k: list(v) for k, v in self.full_inertia.items()},
            "restricted_inertia": {k: list(v) for k, v in self.restricted_inertia.items()},
            "component_bracket": self.component_bracket,
            "tracking": self.tracking,
            "trace": [[mu, g] for mu, g in self.trace],
        }


# modulus ratio separating the tracked O(1) eigenvalues from the O(eps) ones
_DOMINANT_GAP = 10.0


def _dominant(spec: np.ndarray, n: int) -> tuple[np.ndarray, bool]:
    """The ``n`` eigenvalues of largest modulus, and whether they are well separated."""
    order = np.argsort(-np.abs(spec), kind="stable")
    top = spec[order[:n]]
    if n >= spec.size:
        return top, True
    return top, bool(np.abs(spec[order[n - 1]]) >= _DOMINANT_GAP * np.abs(spec[order[n]]))


def _homotopy_hunt(
    net: Network,
    held: Sequence[Position],
    r_stable: Mapping[Position, float],
    r_unstable: Mapping[Position, float],
    off_base: Mapping[Position, float],
    opts: HuntOptions,
    n_tracked: int,
) -> HuntResult:
    """Bisect ``mu`` on the sign of the maximal real part along the linear homotopy.

    First pass: maximal real part over the whole spectrum, for each ``eps``.
    If that never brackets a purely imaginary crossing (the ``M - n`` small
    eigenvalues of order ``eps`` can be unstable for the chosen off-held
    values), a second pass restricts the maximum to the ``n_tracked``
    eigenvalues of largest modulus, which continue the held block's spectrum.
    """
    held = list(held)
    held_set = set(held)
    off = [p for p in net.pattern if p not in held_set]
    for p in held:
        for name, src in (("r_stable", r_stable), ("r_unstable", r_unstable)):
            if p not in src or not src[p] > 0:
                raise SymbolError(f"{name} needs a positive value at {net.position_key(p)}")
    a = np.array([r_stable[p] for p in held], dtype=float)
    b = np.array([r_unstable[p] for p in held], dtype=float)
    base_off = np.array([off_base.get(p, 1.0) for p in off], dtype=float)

    brackets = 0
    modes = ["spectrum"] + (["dominant"] if off and n_tracked < net.M else [])
    for mode in modes:
        for eps in eps_schedule(opts.eps_min):

            def assign(mu: float) -> Assignment:
                vals = (1.0 - mu) * a + mu * b
                r = dict(zip(held, vals.tolist()))
                r.update(zip(off, (eps * base_off).tolist()))
                return r

            def tracked(mu: float) -> tuple[np.ndarray, np.ndarray, bool]:
                spec = eigenvalues(jacobian(net, assign(mu)))
                if mode == "spectrum":
                    return spec, spec, True
                top, ok = _dominant(spec, n_tracked)
                return spec, top, ok

            (_, t0, ok0), (_, t1, ok1) = tracked(0.0), tracked(1.0)
            g0, g1 = float(t0.real.max()), float(t1.real.max())
            if not (ok0 and ok1 and g0 < 0.0 < g1):
                continue
            brackets += 1
            trace = [(0.0, g0), (1.0, g1)]
            lo, hi = 0.0, 1.0
            mu, gm, spec, top = None, None, None, None
            for _ in range(opts.max_bisections):
                mid = 0.5 * (lo + hi)
                if not lo < mid < hi:
                    break
                spec, top, _ok = tracked(mid)
                gm = float(top.real.max())
                trace.append((mid, gm))
                mu = mid
                if abs(gm) < opts.tol_cross:
                    break
                if gm < 0:
                    lo = mid
                else:
                    hi = mid
            if gm is None or abs(gm) >= opts.tol_cross:
                raise HuntError(f"bisection interval collapsed at mu={mu} with max Re = {gm} (eps={eps})")
            # among tracked eigenvalues at the maximal real part take the one with the largest |Im|
            near = top[np.abs(top.real - gm) <= opts.tol_cross]
            lam = near[np.argmax(np.abs(near.imag))]
            if abs(lam.imag) <= opts.min_omega:
                continue  # real crossing at this eps; try smaller off-held symbols
            lam = complex(lam.real, abs(lam.imag))
            return HuntResult(
                found=True,
                mu_star=mu,
                assignment=assign(mu),
                eigenpair=(lam, lam.conjugate()),
                trace=trace,
                eps=eps,
                spectrum=[complex(z) for z in spec],
                r_stable=assign(0.0),
                r_unstable=assign(1.0),
                full_inertia={
                    "stable_end": matrix_inertia(jacobian(net, assign(0.0))).as_tuple(),
                    "unstable_end": matrix_inertia(jacobian(net, assign(1.0))).as_tuple(),
                },
                tracking=mode,
            )
    if not brackets:
        raise HuntError("no sign change of the maximal real part between the endpoints for any eps")
    raise HuntError("only real-eigenvalue crossings found for every eps")


def _merge_off(net: Network, held: Iterable[Position], *sources: Mapping[Position, float]) -> Assignment:
    held = set(held)
    out = {}
    for p in net.pattern:
        if p in held:
            continue
        out[p] = next((float(s[p]) for s in sources if p in s), 1.0)
    return out


def hunt_imaginary(
    net: Network,
    sel: ChildSelection,
    r_stable: Mapping[Position, float],
    r_unstable: Mapping[Position, float],
    opts: Optional[HuntOptions] = None,
) -> HuntResult:
    """Locate a purely imaginary crossing along the segment between two symbol choices.

    The selected symbols follow ``(1 - mu) r_stable + mu r_unstable``; all
    other symbols sit at ``eps`` times their endpoint value (``r_stable``
    first, then ``r_unstable``, else 1), with ``eps`` halved from 1 until the
    full Jacobian is stable at ``mu = 0`` and unstable at ``mu = 1``.
    ``alpha != 0`` is required so the selected block never passes through a
    zero eigenvalue.
    """
    opts = opts or HuntOptions()
    comp = cb_component(net, sel)
    if comp.alpha == 0:
        raise HuntError(f"selection {sel.format(net)} has alpha = 0; crossings may be real")
    held = list(sel.positions)
    bracket = is_stable(cb_evaluate(comp, r_stable)) and is_unstable(cb_evaluate(comp, r_unstable))
    res = _homotopy_hunt(
        net, held, r_stable, r_unstable, _merge_off(net, held, r_stable, r_unstable), opts, sel.n
    )
    res.component_bracket = bracket
    return res


def collection_pairs(collection: Iterable[ChildSelection]) -> frozenset[Position]:
    return frozenset(p for sel in collection for p in sel.positions)


def restricted_jacobian(
    net: Network, subset: Sequence[int], pairs: Iterable[Position], r: Mapping[Position, float]
) -> np.ndarray:
    """``G[C]``: principal block on ``subset`` of ``G`` with every symbol outside ``pairs`` set to 0."""
    pairs = set(pairs)
    full = {p: (float(r[p]) if p in pairs else 0.0) for p in net.pattern}
    G = jacobian(net, full)
    idx = list(subset)
    return G[np.ix_(idx, idx)]


def _sign_ok(alpha: int, n: int) -> bool:
    return alpha == 0 or (alpha > 0) == (n % 2 == 0)


def pithm_conditions(
    net: Network,
    subset: Iterable,
    collection: Sequence[ChildSelection],
    j1: ChildSelection,
    j2: ChildSelection,
) -> dict:
    """Evaluate the integer conditions for a purely imaginary crossing.

    The sign condition ``sign alpha in {(-1)^n, 0}`` is checked on every
    Child-Selection of ``subset`` built only from pairs of the collection,
    since all of them enter the principal minor of the restricted matrix.
    Raises :class:`PithmPreconditionError` listing every structural problem.
    """
    sub = _normalize_subset(net, subset)
    n = len(sub)
    problems = []
    for k, sel in enumerate(collection):
        if tuple(sel.species_subset) != sub:
            problems.append(f"collection member {k} ({sel.format(net)}) has a different domain")
        elif not sel.is_valid_for(net):
            problems.append(f"collection member {k} is not a Child-Selection")
    if j1 not in collection:
        problems.append("j1 is not a member of the collection")
    pairs = collection_pairs(collection)
    if not set(j2.species_subset) < set(sub):
        problems.append("the domain of j2 is not a proper subset of the species subset")
    outside = [p for p in j2.positions if p not in pairs]
    if outside:
        problems.append("j2 uses pairs outside the collection: " + ", ".join(net.position_key(p) for p in outside))
    if problems:
        raise PithmPreconditionError(problems)

    closure = [s for s in enumerate_selections(net, sub) if set(s.positions) <= pairs]
    bad = [s for s in closure if not _sign_ok(cb_component(net, s).alpha, n)]
    s1 = np.array(cb_component(net, j1).s_matrix, dtype=float).reshape(n, n)
    s2 = np.array(cb_component(net, j2).s_matrix, dtype=float).reshape(j2.n, j2.n)
    return {
        "sign_condition": not bad,
        "sign_violations": bad,
        "closure_size": len(closure),
        "j1_stable": is_stable(s1),
        "j2_unstable": is_unstable(s2),
    }


def check_pithm(
    net: Network,
    subset: Iterable,
    collection: Sequence[ChildSelection],
    j1: ChildSelection,
    j2: ChildSelection,
) -> bool:
    c = pithm_conditions(net, subset, collection, j1, j2)
    return c["sign_condition"] and c["j1_stable"] and c["j2_unstable"]


def hunt_from_integer_conditions(
    net: Network,
    subset: Iterable,
    collection: Sequence[ChildSelection],
    j1: ChildSelection,
    j2: ChildSelection,
    opts: Optional[HuntOptions] = None,
    off_base: Optional[Mapping[Position, float]] = None,
) -> HuntResult:
    """Construct and run a crossing hunt from the integer conditions.

    Stable end: ``j1`` symbols at 1, the other collection pairs halved until
    the restricted matrix ``G[C]`` is stable. Unstable end: same, with the
    ``j2`` symbols multiplied by ``H = 2, 4, ...`` until ``G[C]`` is
    unstable. The hunt then runs on the full Jacobian with all symbols
    outside the collection pairs scaled by ``eps``.
    """
    opts = opts or HuntOptions()
    sub = _normalize_subset(net, subset)
    cond = pithm_conditions(net, sub, collection, j1, j2)
    if not (cond["sign_condition"] and cond["j1_stable"] and cond["j2_unstable"]):
        failed = [k for k in ("sign_condition", "j1_stable", "j2_unstable") if not cond[k]]
        raise PithmPreconditionError([f"condition failed: {k}" for k in failed])
    pairs = sorted(collection_pairs(collection))
    j1_pos, j2_pos = set(j1.positions), set(j2.positions)

    r_stable = None
    for delta in eps_schedule(opts.eps_min):
        cand = {p: (1.0 if p in j1_pos else delta) for p in pairs}
        if is_stable(restricted_jacobian(net, sub, pairs, cand)):
            r_stable = cand
            break
    if r_stable is None:
        raise HuntError("restricted matrix G[C] never became stable")

    r_unstable = None
    H = 2.0
    while H <= opts.inflation_cap:
        cand = {p: (v * H if p in j2_pos else v) for p, v in r_stable.items()}
        if is_unstable(restricted_jacobian(net, sub, pairs, cand)):
            r_unstable = cand
            break
        H *= 2.0
    if r_unstable is None:
        raise HuntError(f"inflation cap {opts.inflation_cap:g} reached without instability of G[C]")

    res = _homotopy_hunt(net, pairs, r_stable, r_unstable, off_base or {}, opts, len(sub))
    res.restricted_inertia = {
        "stable_end": matrix_inertia(restricted_jacobian(net, sub, pairs, r_stable)).as_tuple(),
        "unstable_end": matrix_inertia(restricted_jacobian(net, sub, pairs, r_unstable)).as_tuple(),
    }
    res.component_bracket = True
    return res
