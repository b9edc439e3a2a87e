"""Acceptance criteria, each at its stated tolerance and time budget.

A one-line PASS/FAIL summary per criterion is printed at the end of the
pytest run (see ``conftest.py``).
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from netjac.charpoly import SignClass, coefficient_expansion, evaluate, evaluate_exact, sign_class
from netjac.dynamics import detect_oscillation, find_equilibrium, integrate
from netjac.exact_linalg import det_int
from netjac.kinetics import RateFunction, Triple, realize_mm
from netjac.selections import cb_component, cb_evaluate, enumerate_all, parse_selection
from netjac.spectral import (
    char_poly_numeric,
    eigenvalues,
    hunt_imaginary,
    inherit_inertia,
    jacobian,
    matrix_inertia,
)

from oracles import exact_jacobian, laplace_det, principal_minor_sums, random_assignment, random_network

criterion = pytest.mark.criterion

E_S = np.array([0.45598062, 0.72887142, 0.40193953, 1.20347748, 1.6490945])
X0 = [1.001, 1.0, 1.0, 1.0, 1.0]


def _best_time(fn, repeat=20):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _assert_spectrum(got, expected, tol):
    got = list(got)
    for z in expected:
        k = int(np.argmin([abs(g - z) for g in got]))
        assert abs(got[k] - z) < tol, (z, got)
        got.pop(k)
    assert not got


def _r(net, **kw):
    return {net.parse_position(k.replace("_", ":")): v for k, v in kw.items()}


# -- Example I -----------------------------------------------------------------


@criterion(1, "Example I: three 3-Child-Selections with alpha = (-2, 0, -2), < 10 ms")
def test_ac1_example1_enumeration(net1):
    def run():
        return [cb_component(net1, s) for s in enumerate_all(net1, 3)]

    elapsed, comps = _best_time(run)
    labels = [tuple(net1.reactions[j].label for j in c.selection.assignment) for c in comps]
    alphas = {lab: c.alpha for lab, c in zip(labels, comps)}
    assert len(comps) == 3
    # J1 = (1,2,3), J2 = (0,2,3), J3 = (0,1,3)
    assert alphas == {("1", "2", "3"): -2, ("0", "2", "3"): 0, ("0", "1", "3"): -2}
    assert elapsed < 0.010, elapsed


@criterion(2, "Example I: a_3 is FixedNegative")
def test_ac2_example1_fixed_sign(net1):
    assert sign_class(coefficient_expansion(net1, 3)) is SignClass.FIXED_NEGATIVE


@criterion(3, "Example I: spectrum at r' = (1, 3.5, 1, 1, 1) is {+-i sqrt 6, -1.5}, < 1 ms")
def test_ac3_example1_spectrum(net1):
    r = dict(zip(net1.pattern, [1.0, 3.5, 1.0, 1.0, 1.0]))
    elapsed, eigs = _best_time(lambda: eigenvalues(jacobian(net1, r)))
    _assert_spectrum(eigs, [1j * math.sqrt(6), -1j * math.sqrt(6), -1.5], 1e-9)
    assert elapsed < 0.001, elapsed


@criterion(4, "Example I: hunt on r'_1A in [1, 6] crosses at 3.5 with omega = sqrt 6, < 1 s")
def test_ac4_example1_hunt(net1):
    sel = parse_selection(net1, "A->1")
    base = dict(zip(net1.pattern, [1.0] * 5))
    r_u = dict(base)
    r_u[net1.parse_position("1:A")] = 6.0
    t0 = time.perf_counter()
    res = hunt_imaginary(net1, sel, base, r_u)
    elapsed = time.perf_counter() - t0
    assert res.found
    assert abs(res.assignment[net1.parse_position("1:A")] - 3.5) < 1e-8
    assert abs(res.omega - math.sqrt(6)) < 1e-6
    assert elapsed < 1.0, elapsed


@criterion(5, "Example I: MM realization reproduces f_1..f_3 exactly and f_0 = (196, 13)")
def test_ac5_example1_realization(net1, triple1):
    p = realize_mm(net1, triple1)
    ri, si = net1.reaction_index, net1.species_index
    A, B, C = si["A"], si["B"], si["C"]
    assert p.K == 1.0
    assert p.a[ri["1"]] == 2744 and p.b[(ri["1"], A)] == 1 and p.b[(ri["1"], B)] == 13
    assert p.a[ri["2"]] == 49 and p.b[(ri["2"], B)] == 6
    assert p.a[ri["3"]] == 49 and p.b[(ri["3"], C)] == 6
    # the printed 96 x/(1 + 6x) gives f_0(1) = 96/7, not the prescribed 14
    assert p.a[ri["0"]] == 196 and p.b[(ri["0"], A)] == 13
    assert p.inflow_rates[ri["F_B"]] == 14


# -- Example II ----------------------------------------------------------------


@criterion(6, "Example II: a_5 Mixed via (1,2,3,5,7)/(1,2,3,5,6); det G = 3/4 - 21/16 r'_7E")
def test_ac6_example2_mixed_sign(net2):
    exp = coefficient_expansion(net2, 5)
    assert sign_class(exp) is SignClass.MIXED
    j1 = cb_component(net2, parse_selection(net2, "A->1, B->2, C->3, D->5, E->7"))
    j2 = cb_component(net2, parse_selection(net2, "A->1, B->2, C->3, D->5, E->6"))
    assert j1.alpha * j2.alpha < 0
    quarter = Fraction(1, 4)
    base = _r(net2, **{"1_A": 1, "2_B": 1, "3_C": 1, "3_D": 1, "5_D": 1, "6_E": 1, "4_C": quarter, "6_D": quarter})
    for r7 in (Fraction(0), Fraction(12, 21), Fraction(1)):
        r = dict(base)
        r[net2.parse_position("7:E")] = r7
        expected = Fraction(3, 4) - Fraction(21, 16) * r7
        assert evaluate_exact(exp, r) == expected
        rf = {k: float(v) for k, v in r.items()}
        assert abs(evaluate(exp, rf) - float(expected)) < 1e-12
        assert abs(np.linalg.det(jacobian(net2, rf)) - float(expected)) < 1e-12


@criterion(7, "Example II: spectrum of S[J4] and det S[J3] = 1")
def test_ac7_example2_integer_spectra(net2):
    c4 = cb_component(net2, parse_selection(net2, "A->1, B->2, C->3, D->5"))
    _assert_spectrum(
        eigenvalues(np.array(c4.s_matrix, dtype=float)),
        [-2.32472, -1.0, -0.337641 + 0.56228j, -0.337641 - 0.56228j],
        1e-4,
    )
    assert cb_component(net2, parse_selection(net2, "A->1, B->2, C->3")).alpha == 1


HOPF_OFF = {"3_D": 0.5, "6_E": 0.5, "7_E": 0.5, "4_C": 0.25, "6_D": 0.03125}


@criterion(8, "Example II: Jacobian spectra at r'_5D = 2 and 0.5")
def test_ac8_example2_jacobian_spectra(net2):
    for r5, expected in (
        (2.0, [-5.1256, -1.95591, -0.136865, -0.781435 + 0.974403j, -0.781435 - 0.974403j]),
        (
            0.5,
            [-0.136034, -3.57546 + 0.623139j, -3.57546 - 0.623139j, 0.0028519 + 0.597922j, 0.0028519 - 0.597922j],
        ),
    ):
        r = _r(net2, **{"1_A": 2.0, "2_B": 2.0, "3_C": 2.0, "5_D": r5}, **HOPF_OFF)
        _assert_spectrum(eigenvalues(jacobian(net2, r)), expected, 1e-4)


@criterion(9, "Example II: Newton and integration reach E_s, < 10 s")
def test_ac9_example2_multistationarity(net2, mmsn):
    _, p = mmsn
    t0 = time.perf_counter()
    x = find_equilibrium(net2, p, [0.5, 0.7, 0.4, 1.2, 1.6])
    traj = integrate(net2, p, X0, 200.0)
    elapsed = time.perf_counter() - t0
    assert np.max(np.abs(x - E_S)) < 1e-5
    assert np.max(np.abs(traj.states[-1] - E_S)) < 1e-5
    assert elapsed < 10.0, elapsed


@criterion(10, "Example II: sustained oscillation with period within 30% of 2 pi / 0.597922, < 30 s")
def test_ac10_example2_oscillation(net2, mmhopf):
    _, p = mmhopf
    t0 = time.perf_counter()
    traj = integrate(net2, p, X0, 5000.0)
    rep = detect_oscillation(traj, "A")
    elapsed = time.perf_counter() - t0
    target = 2 * math.pi / 0.597922
    assert rep.oscillating, rep.drift
    assert abs(rep.period - target) <= 0.3 * target, rep.period
    assert elapsed < 30.0, elapsed


# -- property suite ------------------------------------------------------------


@criterion(11, "Properties: Cauchy-Binet, inheritance, realization round trip, Bareiss vs Laplace")
def test_ac11_cauchy_binet_oracle():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 200:
        M, E = int(rng.integers(1, 7)), int(rng.integers(1, 11))
        net = random_network(rng, M, E)
        r = random_assignment(net, rng)
        G = jacobian(net, r)
        fl = char_poly_numeric(G)
        exact = principal_minor_sums(exact_jacobian(net, r))
        norm = np.linalg.norm(G, 2)
        for n in range(1, M + 1):
            exp = coefficient_expansion(net, n)
            y = evaluate(exp, r)
            assert evaluate_exact(exp, {k: Fraction(v) for k, v in r.items()}) == exact[n]
            # relative to the monomial mass, floored by the recurrence's own roundoff scale
            mass = sum(abs(m.alpha) * math.prod(r[q] for q in m.symbols) for m in exp.monomials)
            scale = max(abs(y), mass, norm**n)
            assert abs(y - fl[n]) <= 1e-8 * scale, (net, n, y, fl[n])
        checked += 1


@criterion(11, "Properties: Cauchy-Binet, inheritance, realization round trip, Bareiss vs Laplace")
def test_ac11_inheritance():
    rng = np.random.default_rng(12)
    done = 0
    while done < 50:
        net = random_network(rng, int(rng.integers(2, 7)), int(rng.integers(2, 11)))
        sels = [s for n in range(1, net.M + 1) for s in enumerate_all(net, n)]
        sels = [s for s in sels if cb_component(net, s).alpha != 0]
        if not sels:
            continue
        sel = sels[int(rng.integers(len(sels)))]
        r_sel = {p: float(rng.uniform(0.5, 3.0)) for p in sel.positions}
        target = matrix_inertia(cb_evaluate(cb_component(net, sel), r_sel))
        if target.sigma_zero:
            continue
        res = inherit_inertia(net, sel, r_sel, random_assignment(net, rng))
        got = matrix_inertia(jacobian(net, res.assignment))
        assert got.sigma_minus >= target.sigma_minus and got.sigma_plus >= target.sigma_plus
        assert got == res.inertia
        done += 1


@criterion(11, "Properties: Cauchy-Binet, inheritance, realization round trip, Bareiss vs Laplace")
def test_ac11_realization_round_trip():
    rng = np.random.default_rng(13)
    for _ in range(200):
        net = random_network(rng, int(rng.integers(1, 7)), int(rng.integers(1, 11)))
        t = Triple(
            rng.uniform(0.1, 10.0, net.M),
            rng.uniform(0.1, 10.0, net.E),
            {p: float(rng.uniform(0.1, 10.0)) for p in net.pattern},
        )
        for safety in (1.0, 1.5):
            p = realize_mm(net, t, safety)
            rf = RateFunction(net, p)
            f, D = rf.rates(t.x_bar), rf.derivatives(t.x_bar)
            assert np.allclose(f, p.K * t.r_bar, rtol=1e-12, atol=0)
            for pos, v in t.r_prime.items():
                assert abs(D[pos] - v) <= 1e-12 * v
            assert all(b >= 0 for b in p.b.values())


@criterion(11, "Properties: Cauchy-Binet, inheritance, realization round trip, Bareiss vs Laplace")
def test_ac11_bareiss_vs_laplace():
    rng = np.random.default_rng(14)
    for _ in range(10_000):
        n = int(rng.integers(0, 7))
        A = rng.integers(-9, 10, size=(n, n)).tolist()
        if n and rng.random() < 0.2:
            A[int(rng.integers(n))] = [0] * n
        assert det_int(A) == laplace_det(A)
