import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netjac.charpoly import (
    CoefficientExpansion,
    SignClass,
    characteristic_expansions,
    coefficient_expansion,
    evaluate,
    evaluate_exact,
    expansion_summary,
    instability_certificate,
    minor_expansion,
    mixed_sign_witness,
    p0_check,
    sign_class,
)
from netjac.network import parse_network
from netjac.selections import SymbolError
from netjac.spectral import jacobian

from oracles import exact_jacobian, laplace_det, principal_minor_sums, random_assignment, random_network


def test_minor_expansion_example1(net1):
    exp = minor_expansion(net1, ["A", "B", "C"])
    assert sorted(m.alpha for m in exp.monomials) == [-2, -2]
    assert exp.zero_count == 1 and exp.selection_count == 3
    c = minor_expansion(net1, ["C"])
    assert [(m.alpha, set(m.symbols)) for m in c.monomials] == [(-1, {net1.parse_position("3:C")})]


def test_minor_expansion_empty():
    net = parse_network("1: A -> B")
    exp = minor_expansion(net, ["B"])
    assert exp.monomials == () and sign_class(exp) is SignClass.IDENTICALLY_ZERO


def test_coefficient_expansion_example1(net1):
    exp = coefficient_expansion(net1, 3)
    assert sign_class(exp) is SignClass.FIXED_NEGATIVE
    assert evaluate(exp, {p: 1.0 for p in net1.pattern}) == -4


def test_degree_one_alphas(net2):
    exp = coefficient_expansion(net2, 1)
    S = net2.S
    assert sorted(m.alpha for m in exp.monomials) == sorted(S[m][j] for j, m in net2.pattern if S[m][j] != 0)


def test_example2_mixed(net2):
    exp = coefficient_expansion(net2, 5)
    assert sign_class(exp) is SignClass.MIXED
    r_plus, r_minus = mixed_sign_witness(exp)
    assert evaluate(exp, r_plus) > 0 > evaluate(exp, r_minus)


def test_sign_class_cases():
    assert sign_class(CoefficientExpansion(1, ())) is SignClass.IDENTICALLY_ZERO


def test_witness_requires_mixed(net1):
    with pytest.raises(ValueError):
        mixed_sign_witness(coefficient_expansion(net1, 3))


def test_evaluate_missing_symbol(net1):
    with pytest.raises(SymbolError):
        evaluate(coefficient_expansion(net1, 1), {})


def test_parallel_expansion_matches_serial(net2):
    for n in (2, 3):
        a, b = coefficient_expansion(net2, n), coefficient_expansion(net2, n, jobs=2)
        assert a.monomials == b.monomials and a.zero_count == b.zero_count


def test_characteristic_expansions_leading(net1):
    exps = characteristic_expansions(net1)
    assert len(exps) == 4
    assert evaluate(exps[0], {}) == 1


def test_p0_example1(net1):
    rep = p0_check(net1)
    assert not rep.is_p0
    assert any(c.selection.format(net1) == "A->1" and c.alpha == 1 for c in rep.violations)


def test_p0_outflow_chain():
    net = parse_network("1: A -> B\n2: B ->")
    assert p0_check(net).is_p0
    assert instability_certificate(net) is None


def test_p0_example2(net2):
    rep = p0_check(net2)
    assert not rep.is_p0
    assert any(c.selection.format(net2) == "A->1, B->2, C->3" and c.alpha == 1 for c in rep.violations)
    assert rep.to_dict(net2)["is_p0"] is False


def test_instability_certificates(net1, net2):
    c1 = instability_certificate(net1)
    assert c1.selection.format(net1) == "A->1" and c1.alpha == 1
    c2 = instability_certificate(net2)
    assert c2.alpha != 0 and (c2.alpha > 0) == (c2.n % 2 == 1)


def test_certificate_without_autocatalysis():
    # A -> B, B -> A + C, C -> , F -> A; no autocatalysis, check the scan
    net = parse_network("1: A -> 2B\n2: B -> A\n3: B ->\nF: -> A\n4: A + B -> 3A")
    cert = instability_certificate(net)
    rep = p0_check(net)
    assert (cert is None) == rep.is_p0
    if cert is not None:
        assert (cert.alpha > 0) == (cert.n % 2 == 1)


def test_expansion_summary(net1):
    s = expansion_summary(coefficient_expansion(net1, 3))
    assert s == {"n": 3, "monomial_count": 2, "zero_alpha_count": 1, "sign_class": "FixedNegative", "sample_alphas": [-2, -2]}


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_minor_expansion_matches_numeric_minor(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)), int(rng.integers(1, 9)))
    r = random_assignment(net, rng)
    G = jacobian(net, r)
    Gx = exact_jacobian(net, r)
    for n in range(1, net.M + 1):
        for subset in [tuple(sorted(rng.choice(net.M, size=n, replace=False).tolist()))]:
            exp = minor_expansion(net, subset)
            want = laplace_det([[Gx[i][j] for j in subset] for i in subset])
            assert evaluate_exact(exp, {k: Fraction(v) for k, v in r.items()}) == want
            num = np.linalg.det(G[np.ix_(subset, subset)]) if n else 1.0
            mass = sum(abs(m.alpha) * math.prod(r[q] for q in m.symbols) for m in exp.monomials)
            assert abs(evaluate(exp, r) - num) <= 1e-8 * max(mass, np.linalg.norm(G, 2) ** n, 1e-300)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 2.0, 10.0]))
def test_homogeneity(seed, t):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)), int(rng.integers(1, 9)))
    r = random_assignment(net, rng)
    rt = {k: t * v for k, v in r.items()}
    for n in range(1, net.M + 1):
        exp = coefficient_expansion(net, n)
        rx = {k: Fraction(v) for k, v in r.items()}
        rtx = {k: Fraction(t) * v for k, v in rx.items()}
        assert evaluate_exact(exp, rtx) == Fraction(t) ** n * evaluate_exact(exp, rx)
        assert math.isclose(evaluate(exp, rt), t**n * evaluate(exp, r), rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_coefficients_equal_principal_minor_sums(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)), int(rng.integers(1, 9)))
    r = {k: Fraction(int(rng.integers(1, 20)), int(rng.integers(1, 5))) for k in net.pattern}
    sums = principal_minor_sums(exact_jacobian(net, r))
    for n, exp in enumerate(characteristic_expansions(net)):
        assert evaluate_exact(exp, r) == sums[n]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_p0_implies_no_certificate_and_witnesses(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, int(rng.integers(1, 6)), int(rng.integers(1, 9)))
    rep = p0_check(net)
    cert = instability_certificate(net)
    assert (cert is None) == rep.is_p0
    for n in range(1, net.M + 1):
        exp = coefficient_expansion(net, n)
        if sign_class(exp) is SignClass.MIXED:
            rp, rm = mixed_sign_witness(exp)
            assert evaluate(exp, rp) > 0 > evaluate(exp, rm)
