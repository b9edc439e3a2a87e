"""Michaelis-Menten realization of a prescribed symbolic Jacobian.

Rates have the form ``f_j(x) = a_j * prod_m (x_m / (1 + b_jm x_m))^s_jm``.
Given a positive triple ``(x_bar, r_bar, r_prime)`` the constants are
chosen so that ``f_j(x_bar) = K r_bar_j`` and ``df_j/dx_m(x_bar) = r_prime[j, m]``
for one scale ``K`` shared by all reactions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .network import Network, Position
from .selections import SymbolError

# relative slack below which a computed b_jm < 0 is treated as rounding of 0
_B_ROUNDING = 1e-12


class RealizationError(ValueError):
    pass


@dataclass
class Triple:
    x_bar: np.ndarray
    r_bar: np.ndarray
    r_prime: dict[Position, float]

    def __post_init__(self):
        self.x_bar = np.asarray(self.x_bar, dtype=float)
        self.r_bar = np.asarray(self.r_bar, dtype=float)
        self.r_prime = {tuple(k): float(v) for k, v in self.r_prime.items()}

    def is_equilibrium_flux(self, net: Network, rtol: float = 1e-12) -> bool:
        resid = net.S_float @ self.r_bar
        return bool(np.max(np.abs(resid), initial=0.0) <= rtol * max(1.0, float(np.max(np.abs(self.r_bar)))))

    @classmethod
    def from_dict(cls, net: Network, doc: Mapping) -> "Triple":
        """Keys ``x`` (species map or list), ``r`` (reaction map or list), ``rprime`` (``"label:species"`` map)."""
        x = doc["x"]
        if isinstance(x, Mapping):
            x = [x[s] for s in net.species]
        r = doc["r"]
        if isinstance(r, Mapping):
            r = [r[rx.label] for rx in net.reactions]
        rp = {net.parse_position(k): float(v) for k, v in doc["rprime"].items()}
        return cls(np.array(x, dtype=float), np.array(r, dtype=float), rp)

    def to_dict(self, net: Network) -> dict:
        return {
            "x": {s: float(v) for s, v in zip(net.species, self.x_bar)},
            "r": {rx.label: float(v) for rx, v in zip(net.reactions, self.r_bar)},
            "rprime": {net.position_key(p): self.r_prime[p] for p in sorted(self.r_prime)},
        }


@dataclass
class MMParams:
    K: float
    a: dict[int, float]
    b: dict[Position, float]
    inflow_rates: dict[int, float] = field(default_factory=dict)

    def to_dict(self, net: Network) -> dict:
        b: dict[str, dict[str, float]] = {}
        for (j, m), v in sorted(self.b.items()):
            b.setdefault(net.reactions[j].label, {})[net.species[m]] = v
        return {
            "K": self.K,
            "a": {net.reactions[j].label: v for j, v in sorted(self.a.items())},
            "b": b,
            "inflow": {net.reactions[j].label: v for j, v in sorted(self.inflow_rates.items())},
        }

    @classmethod
    def from_dict(cls, net: Network, doc: Mapping) -> "MMParams":
        ri, si = net.reaction_index, net.species_index
        b = {(ri[lab], si[sp]): float(v) for lab, row in doc.get("b", {}).items() for sp, v in row.items()}
        p = cls(
            K=float(doc.get("K", 1.0)),
            a={ri[lab]: float(v) for lab, v in doc["a"].items()},
            b=b,
            inflow_rates={ri[lab]: float(v) for lab, v in doc.get("inflow", {}).items()},
        )
        validate_params(net, p)
        return p


def validate_params(net: Network, p: MMParams) -> None:
    for j, rx in enumerate(net.reactions):
        if rx.is_inflow:
            if not p.inflow_rates.get(j, 0) > 0:
                raise RealizationError(f"inflow reaction {rx.label} needs a positive rate")
        elif not p.a.get(j, 0) > 0:
            raise RealizationError(f"reaction {rx.label} needs a positive a")
    for pos in net.pattern:
        if not p.b.get(pos, -1) >= 0:
            raise RealizationError(f"b at {net.position_key(pos)} must be given and nonnegative")


def minimal_scale(net: Network, t: Triple) -> float:
    """Smallest ``K >= 1`` making every ``b_jm`` nonnegative."""
    K = 1.0
    for j, m in net.pattern:
        s = net.reactant_coefficient(j, m)
        K = max(K, t.r_prime[(j, m)] * t.x_bar[m] / (t.r_bar[j] * s))
    return K


def realize_mm(net: Network, t: Triple, safety: float = 1.0) -> MMParams:
    """Michaelis-Menten constants realizing ``t`` at ``x_bar``.

    ``K = safety * minimal_scale``; then
    ``b_jm = (K r_j s_jm / (r'_jm x_m) - 1) / x_m`` and
    ``a_j = K r_j prod_m ((1 + b_jm x_m) / x_m)^s_jm``.
    ``b_jm = 0`` (mass-action factor) is allowed.
    """
    if safety < 1:
        raise ValueError("safety must be >= 1")
    if t.x_bar.shape != (net.M,) or t.r_bar.shape != (net.E,):
        raise RealizationError("triple dimensions do not match the network")
    if np.any(t.x_bar <= 0) or np.any(t.r_bar <= 0):
        raise RealizationError("x_bar and r_bar must be strictly positive")
    for pos in net.pattern:
        if pos not in t.r_prime:
            raise RealizationError(f"r_prime is missing {net.position_key(pos)}")
        if not t.r_prime[pos] > 0:
            raise RealizationError(f"r_prime at {net.position_key(pos)} must be positive")
    K = float(safety * minimal_scale(net, t))
    a, b, inflow = {}, {}, {}
    for j, rx in enumerate(net.reactions):
        if rx.is_inflow:
            inflow[j] = K * float(t.r_bar[j])
            continue
        aj = K * float(t.r_bar[j])
        for name, s in rx.reactants.items():
            m = net.species_index[name]
            x = float(t.x_bar[m])
            ratio = K * float(t.r_bar[j]) * s / (t.r_prime[(j, m)] * x)
            bjm = (ratio - 1.0) / x
            if bjm < 0:
                if bjm * x < -_B_ROUNDING:
                    raise RealizationError(f"negative b at {net.position_key((j, m))}: K policy bug")
                bjm = 0.0
            b[(j, m)] = float(bjm)
            aj *= ((1.0 + bjm * x) / x) ** s
        a[j] = aj
    return MMParams(K, a, b, inflow)


def _check_x(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("concentrations must be strictly positive")
    return x


def mm_rate(net: Network, p: MMParams, j: int, x) -> float:
    x = _check_x(x)
    rx = net.reactions[j]
    if rx.is_inflow:
        return p.inflow_rates[j]
    val = p.a[j]
    for name, s in rx.reactants.items():
        m = net.species_index[name]
        val *= (x[m] / (1.0 + p.b[(j, m)] * x[m])) ** s
    return val


def mm_derivative(net: Network, p: MMParams, j: int, m: int, x) -> float:
    """``df_j/dx_m = f_j(x) s_jm / (x_m (1 + b_jm x_m))``."""
    s = net.reactant_coefficient(j, m)
    if s == 0:
        raise SymbolError(f"{net.species[m]} is not a reactant of reaction {net.reactions[j].label}")
    x = _check_x(x)
    return mm_rate(net, p, j, x) * s / (x[m] * (1.0 + p.b[(j, m)] * x[m]))


class RateFunction:
    """Vectorized ``f(x)`` and ``df/dx`` for one parameter set.

    Precomputes index arrays so the ODE right-hand side avoids dict lookups.
    """

    def __init__(self, net: Network, p: MMParams):
        self.net = net
        self.params = p
        self.S = net.S_float
        E = net.E
        self.const = np.zeros(E)
        self.a = np.zeros(E)
        rows, cols, expo, bval = [], [], [], []
        for j, rx in enumerate(net.reactions):
            if rx.is_inflow:
                self.const[j] = p.inflow_rates[j]
                continue
            self.a[j] = p.a[j]
            for name, s in rx.reactants.items():
                m = net.species_index[name]
                rows.append(j)
                cols.append(m)
                expo.append(s)
                bval.append(p.b[(j, m)])
        self.rows = np.array(rows, dtype=int)
        self.cols = np.array(cols, dtype=int)
        self.expo = np.array(expo, dtype=float)
        self.bval = np.array(bval, dtype=float)
        self.inflow_mask = np.array([rx.is_inflow for rx in net.reactions])

    def rates(self, x: np.ndarray) -> np.ndarray:
        xm = x[self.cols]
        factors = (xm / (1.0 + self.bval * xm)) ** self.expo
        prod = np.ones(self.net.E)
        np.multiply.at(prod, self.rows, factors)
        return np.where(self.inflow_mask, self.const, self.a * prod)

    def rhs(self, x: np.ndarray) -> np.ndarray:
        return self.S @ self.rates(x)

    def derivatives(self, x: np.ndarray) -> np.ndarray:
        """E x M matrix of ``df_j/dx_m``."""
        f = self.rates(x)
        xm = x[self.cols]
        D = np.zeros((self.net.E, self.net.M))
        D[self.rows, self.cols] = f[self.rows] * self.expo / (xm * (1.0 + self.bval * xm))
        return D

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.S @ self.derivatives(x)


def mm_rates(net: Network, p: MMParams, x) -> np.ndarray:
    return RateFunction(net, p).rates(_check_x(x))


def mm_jacobian(net: Network, p: MMParams, x) -> np.ndarray:
    """``S`` times the matrix of analytic rate derivatives at ``x``."""
    return RateFunction(net, p).jacobian(_check_x(x))
