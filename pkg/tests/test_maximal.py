import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncsg.algebra import DomainError, TracialAlgebra, lp_norm, modulus, random_element
from ncsg.maximal import (
    HypothesisError,
    MaximalFamily,
    angle_hypothesis,
    classical_sup_norm,
    column_linf_norm,
    general_linf_upper,
    maximal_inequality_harness,
    positive_linf_norm,
    sector_grid,
)
from ncsg.semigroup import fixed_point_projection

from .conftest import ALGEBRAS

M2 = TracialAlgebra.matrix(2)
DIAG = TracialAlgebra.diagonal([0.1, 0.2, 0.3, 0.4])


def positive_family(alg, seed, m=3):
    rng = np.random.default_rng(seed)
    return MaximalFamily([random_element(alg, rng, "positive") for _ in range(m)])


def projection(angle):
    v = np.array([math.cos(angle), math.sin(angle)])
    return M2.element([np.outer(v, v)])


class TestPositiveNorm:
    def test_linf_closed_form(self):
        fam = positive_family(TracialAlgebra.matrix(3), 2, 4)
        cert = positive_linf_norm(fam, math.inf)
        assert cert.primal == pytest.approx(max(lp_norm(x, math.inf) for x in fam.elements), abs=1e-12)
        assert cert.dual == pytest.approx(cert.primal, rel=1e-12)

    @pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
    def test_commutative_oracle(self, p):
        fam = positive_family(DIAG, 5, 4)
        cert = positive_linf_norm(fam, p)
        assert cert.primal == pytest.approx(classical_sup_norm(fam, p), abs=1e-8)

    def test_two_projections(self):
        # brute force over real majorants gives 0.8535536; closed form (2 + sqrt 2) / 4
        fam = MaximalFamily([projection(0), projection(math.pi / 4)])
        cert = positive_linf_norm(fam, 1.0)
        assert cert.dual <= cert.primal
        assert cert.primal == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-5)
        assert cert.relative_gap <= 1e-4

    def test_single_element(self):
        x = random_element(TracialAlgebra.matrix(3), 7, "positive")
        cert = positive_linf_norm(MaximalFamily([x]), 3.0)
        assert cert.primal == pytest.approx(lp_norm(x, 3.0), rel=1e-7)

    def test_repeated_element(self):
        x = random_element(M2, 8, "positive")
        a = positive_linf_norm(MaximalFamily([x]), 2.0).primal
        b = positive_linf_norm(MaximalFamily([x, x, 0.5 * x]), 2.0).primal
        assert a == pytest.approx(b, rel=1e-7)

    def test_rejects_non_positive(self):
        with pytest.raises(DomainError):
            positive_linf_norm(MaximalFamily([random_element(M2, 1, "selfadjoint") - 5 * M2.identity()]), 2.0)

    def test_zero_family(self):
        assert positive_linf_norm(MaximalFamily([M2.zero()]), 2.0).primal == 0.0

    def test_scaling(self):
        fam = positive_family(TracialAlgebra.matrix(3), 9)
        a = positive_linf_norm(fam, 1.5).primal
        b = positive_linf_norm(fam.scaled(1e-9), 1.5).primal
        assert b == pytest.approx(1e-9 * a, rel=1e-6)

    def test_json(self):
        cert = positive_linf_norm(positive_family(M2, 3), 2.0)
        doc = json.loads(json.dumps(cert.to_json()))
        assert doc["primal"] >= doc["dual"]

    @settings(max_examples=10)
    @given(st.sampled_from(ALGEBRAS), st.integers(0, 10**6), st.sampled_from([1.0, 1.5, 3.0]))
    def test_certificate_soundness(self, alg, seed, p):
        fam = positive_family(alg, seed)
        cert = positive_linf_norm(fam, p)
        assert cert.feasibility_residual(fam) <= 1e-9
        assert all(y.eigvalsh().min() >= -1e-9 for y in cert.duals)
        assert cert.dual_norm() == pytest.approx(1.0, rel=1e-9)
        assert cert.recompute_dual(fam) == pytest.approx(cert.dual, rel=1e-9)
        assert cert.dual <= cert.primal * (1 + 1e-9)
        assert cert.relative_gap <= 1e-4
        # the majorant dominates every single norm and is dominated by the sum
        assert max(lp_norm(x, p) for x in fam.elements) <= cert.primal * (1 + 1e-7)
        assert cert.primal <= lp_norm(sum(fam.elements[1:], fam.elements[0]), p) * (1 + 1e-7)

    @settings(max_examples=10)
    @given(st.integers(0, 10**6))
    def test_triangle(self, seed):
        f, g = positive_family(M2, seed), positive_family(M2, seed + 1)
        both = MaximalFamily([x + y for x, y in zip(f.elements, g.elements)])
        p = 2.0
        assert positive_linf_norm(both, p).dual <= (
            positive_linf_norm(f, p).primal + positive_linf_norm(g, p).primal) * (1 + 1e-9)

    @settings(max_examples=10)
    @given(st.integers(0, 10**6))
    def test_grid_monotonicity(self, seed):
        fam = positive_family(TracialAlgebra.matrix(3), seed, 5)
        sub = MaximalFamily(fam.elements[:3])
        assert positive_linf_norm(sub, 2.0).dual <= positive_linf_norm(fam, 2.0).primal * (1 + 1e-9)


class TestGeneralFamilies:
    def test_column_needs_p_at_least_two(self):
        with pytest.raises(DomainError):
            column_linf_norm(positive_family(M2, 1), 1.5)

    def test_column_single_element(self):
        x = random_element(M2, 4)
        value, _ = column_linf_norm(MaximalFamily([x]), 4.0)
        assert value == pytest.approx(lp_norm(x, 4.0), rel=1e-7)

    def test_sign_flip(self):
        x = random_element(M2, 5, "selfadjoint")
        w = general_linf_upper(MaximalFamily([x, -x]), 2.0)
        assert w.reconstruction_residual(MaximalFamily([x, -x])) <= 1e-9
        assert w.lower <= w.value * (1 + 1e-9)
        # signs are absorbed into the contractions y_i, leaving the bound of {|x|}
        single = general_linf_upper(MaximalFamily([modulus(x)]), 2.0)
        assert w.value == pytest.approx(single.value, rel=1e-6)
        assert w.value == pytest.approx(lp_norm(x, 2.0), rel=1e-6)

    def test_co_isometries(self):
        # two rank-one partial isometries with orthogonal ranges
        e = np.eye(2)
        u1 = M2.element([np.outer(e[0], e[0])])
        u2 = M2.element([np.outer(e[1], e[0])])
        fam = MaximalFamily([u1, u2])
        w = general_linf_upper(fam, 2.0)
        assert w.reconstruction_residual(fam) <= 1e-9
        assert w.value == pytest.approx(w.recompute())
        assert w.lower <= w.value * (1 + 1e-9)

    @settings(max_examples=10)
    @given(st.sampled_from(ALGEBRAS), st.integers(0, 10**6))
    def test_factorization(self, alg, seed):
        rng = np.random.default_rng(seed)
        fam = MaximalFamily([random_element(alg, rng, "general") for _ in range(3)])
        w = general_linf_upper(fam, 2.0)
        scale = max(lp_norm(x, math.inf) for x in fam.elements)
        assert w.reconstruction_residual(fam) <= 1e-8 * scale
        assert w.lower <= w.value * (1 + 1e-9)


class TestHarness:
    def test_angle_hypothesis(self):
        assert angle_hypothesis(2.0, 0.49 * math.pi)
        assert not angle_hypothesis(2.0, 0.5 * math.pi)
        assert angle_hypothesis(3.0, 1.0) and not angle_hypothesis(3.0, 1.2)
        assert not angle_hypothesis(1.0, 0.0)

    def test_grid(self):
        g = sector_grid(0.3, 8, 4)
        assert len(g) == 32
        assert max(abs(np.angle(z)) for z in g) < 0.3

    def test_violation(self, schur_m3):
        x = random_element(schur_m3.algebra, 0)
        with pytest.raises(HypothesisError, match="sector angle hypothesis"):
            maximal_inequality_harness(schur_m3, 3.0, 1.2, [1.0], [x])

    def test_point_outside_grid_sector(self, schur_m3):
        x = random_element(schur_m3.algebra, 0)
        with pytest.raises(HypothesisError):
            maximal_inequality_harness(schur_m3, 2.0, 0.3, [np.exp(0.5j)], [x])

    def test_single_point(self, schur_m3):
        x = random_element(schur_m3.algebra, 1)
        x = x - fixed_point_projection(schur_m3, x)
        res = maximal_inequality_harness(schur_m3, 2.0, 0.3, [1.0], [x])
        row = res["rows"][0]
        # one element: the norm itself, up to the solver gap
        assert row["ratio_lower"] <= row["ratio"] * (1 + 1e-9)
        assert row["ratio"] == pytest.approx(row["ratio_lower"], rel=1e-3)
        assert res["finite"]

    def test_two_state_classical(self, chain_dec):
        alg = chain_dec.algebra
        x = alg.from_diagonal([1.0, -0.4])
        res = maximal_inequality_harness(chain_dec, 2.0, 0.25 * math.pi, sector_grid(0.25 * math.pi, 8, 1),
                                         [x], pieces=True)
        row = res["rows"][0]
        assert row["ratio"] == pytest.approx(row["classical_ratio"], abs=1e-6)
        assert row["column_ratio"] == pytest.approx(row["classical_ratio"], abs=1e-6)
        assert "m_theta_part" in row and "ergodic_part" in row
