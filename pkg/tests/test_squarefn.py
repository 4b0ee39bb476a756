import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncsg.algebra import DomainError, lp_norm, random_element
from ncsg.semigroup import fixed_point_projection
from ncsg.squarefn import (
    column_norm,
    equivalence_tracker,
    gram_by_quadrature,
    gram_element,
    row_gram_element,
    row_norm,
    splitting_upper_bound,
    square_function_norms,
)

from .test_calculus import DECS

labels = st.sampled_from(sorted(DECS))
seeds = st.integers(0, 2**32 - 1)


def rel_err(a, b):
    return lp_norm(a - b, 2) / max(lp_norm(b, 2), 1e-300)


@pytest.mark.parametrize("label", ["schur_m3", "depolarizing_blocks", "two_state_chain"])
@pytest.mark.parametrize("row", [False, True])
def test_closed_form_matches_quadrature(label, row):
    dec = DECS[label]
    x = random_element(dec.algebra, 17)
    closed = row_gram_element(dec, x) if row else gram_element(dec, x)
    assert rel_err(closed, gram_by_quadrature(dec, x, row=row)) <= 1e-8


def test_depolarizing_value(depolarizing_m2):
    # one nonzero eigenvalue: G = |x - tau(x)|^2 / 4
    x = random_element(depolarizing_m2.algebra, 2)
    d = x - fixed_point_projection(depolarizing_m2, x)
    assert gram_element(depolarizing_m2, x).allclose(0.25 * (d.adjoint @ d), atol=1e-13)


@given(labels, seeds)
def test_p2_identity(label, seed):
    dec = DECS[label]
    x = random_element(dec.algebra, seed)
    target = lp_norm(x - fixed_point_projection(dec, x), 2) / 2
    assert column_norm(dec, x, 2) == pytest.approx(target, rel=1e-10, abs=1e-14)
    assert row_norm(dec, x, 2) == pytest.approx(target, rel=1e-10, abs=1e-14)


@given(labels, seeds, st.sampled_from([1.5, 3.0]))
def test_row_is_column_of_adjoint(label, seed, p):
    dec = DECS[label]
    x = random_element(dec.algebra, seed)
    assert row_norm(dec, x, p) == pytest.approx(column_norm(dec, x.adjoint, p), rel=1e-10, abs=1e-14)


@given(labels, seeds)
def test_gram_is_positive(label, seed):
    dec = DECS[label]
    G = gram_element(dec, random_element(dec.algebra, seed))
    assert G.eigvalsh().min() >= -1e-12 * max(1.0, G.eigvalsh().max())


def test_splitting_never_exceeds_trivial(schur_m3):
    x = random_element(schur_m3.algebra, 3)
    b = splitting_upper_bound(schur_m3, x, 1.5, trials=8)
    assert b <= min(column_norm(schur_m3, x, 1.5), row_norm(schur_m3, x, 1.5)) + 1e-15


def test_domain(schur_m3):
    x = random_element(schur_m3.algebra, 0)
    for p in (1.0, math.inf):
        with pytest.raises(DomainError):
            square_function_norms(schur_m3, x, p)


def test_value_recompute_and_json(schur_m3):
    v = square_function_norms(schur_m3, random_element(schur_m3.algebra, 1), 1.5, trials=4)
    assert v.recompute_column() == pytest.approx(v.column_value, rel=1e-12)
    assert v.to_json()["splitting_trials"] == 4
    assert square_function_norms(schur_m3, random_element(schur_m3.algebra, 1), 3.0).splitting_bound is None


@pytest.mark.parametrize("p", [1.5, 4.0])
def test_tracker(schur_m4, p):
    rep = equivalence_tracker(schur_m4, p, range(6), trials=4)
    assert rep.passed
    assert np.all(np.isfinite(rep.ratios)) and rep.min_ratio > 0
    rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
    assert len(rows) == 6 and rows[0]["seed"] == "0"
    assert rep.to_json()["max_ratio"] == rep.max_ratio


def test_tracker_at_two_is_exact(schur_m4):
    rep = equivalence_tracker(schur_m4, 2.0, range(4))
    assert np.allclose(rep.ratios, 2.0, rtol=1e-10)
