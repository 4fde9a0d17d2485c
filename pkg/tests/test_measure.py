import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parafrac.errors import ConfigError
from parafrac.measure import (BernoulliMeasure, TableMeasure, UnsupportedMeasureError, cylinder_mass,
                              project, quasi_bernoulli_audit)
from parafrac.symbolic import induced_alphabet

from .conftest import DATA


def test_bernoulli_masses(half):
    assert cylinder_mass(half, (0, 1)) == pytest.approx(0.25)
    assert cylinder_mass(half, ()) == 1.0
    assert cylinder_mass(BernoulliMeasure((0.7, 0.3)), (0, 0, 1)) == pytest.approx(0.147)


def test_bernoulli_validation():
    with pytest.raises(ValueError):
        BernoulliMeasure((0.5, 0.6))
    with pytest.raises(ValueError):
        BernoulliMeasure((1.0, 0.0))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.05, 1.0), min_size=2, max_size=4), st.data())
def test_cylinder_additivity(raw, data):
    m = BernoulliMeasure(tuple(np.array(raw) / sum(raw)))
    k = m.n_symbols
    w = tuple(data.draw(st.lists(st.integers(0, k - 1), max_size=6)))
    total = sum(cylinder_mass(m, w + (j,)) for j in range(k))
    assert total == pytest.approx(cylinder_mass(m, w), abs=1e-12)


def test_table_from_csv_and_extension():
    t = TableMeasure.from_csv(DATA / "table_measure.csv", 2, c=2)
    assert t.depth == 2
    assert t.mass((0, 1)) == pytest.approx(0.2)
    # beyond depth 2 the depth-1 row supplies the weights
    assert t.mass((0, 1, 1)) == pytest.approx(0.2 * 0.4)


def test_table_rejects_inconsistent_rows():
    with pytest.raises(ConfigError):
        TableMeasure(2, (np.array([1.0]), np.array([0.6, 0.4]), np.array([0.3, 0.2, 0.2, 0.2])))


def test_project_bedford_mcmullen(bedford_mcmullen, quarter):
    py = project(bedford_mcmullen, quarter, "y")
    assert py.weights == pytest.approx((0.5, 0.5))
    assert py.system.n_symbols == 2
    px = project(bedford_mcmullen, quarter, "x")
    assert px.ids == (0, 1, 2)
    assert px.weights == pytest.approx((0.25, 0.25, 0.5))


def test_project_distinct_columns(quarter):
    from parafrac.maps1d import Affine
    from parafrac.system import CarpetSystem

    cols = tuple(Affine(0.25, c / 4) for c in range(4))
    rows = (Affine(0.5, 0.0), Affine(0.5, 0.5))
    system = CarpetSystem(cols, rows, ((0, 0), (1, 1), (2, 0), (3, 1)))
    w = BernoulliMeasure((0.1, 0.2, 0.3, 0.4))
    assert project(system, w, "x").weights == pytest.approx(w.weights)


def test_project_fig1_left(fig1_left):
    system, measure = fig1_left
    px = project(system, measure, "x")
    assert px.weights == pytest.approx((0.5, 0.5))
    assert px.system.maps == system.columns


def test_project_consistency_brute_force(bedford_mcmullen):
    w = BernoulliMeasure((0.1, 0.2, 0.3, 0.4))
    px = project(bedford_mcmullen, w, "x")
    col = [c for c, _ in bedford_mcmullen.grid]
    for n in range(1, 5):
        for cw in itertools.product(range(len(px.ids)), repeat=n):
            ids = tuple(px.ids[c] for c in cw)
            brute = sum(cylinder_mass(w, word) for word in itertools.product(range(4), repeat=n)
                        if tuple(col[s] for s in word) == ids)
            assert cylinder_mass(px.measure, cw) == pytest.approx(brute, abs=1e-12)


def test_project_rejects_table(bedford_mcmullen):
    t = TableMeasure.from_function(4, 1, lambda w: 0.25)
    with pytest.raises(UnsupportedMeasureError):
        project(bedford_mcmullen, t, "x")


def test_audit_bernoulli_exact(half):
    rep = quasi_bernoulli_audit(half, induced=induced_alphabet(2, 1, 6))
    assert rep.max_ratio == pytest.approx(1.0, abs=1e-12)
    assert rep.max_inverse_ratio == pytest.approx(1.0, abs=1e-12)


def _perturbed(factors, depth=4):
    """Bernoulli(1/2,1/2) table whose depth-d rows are tilted by per-word factors."""
    base = BernoulliMeasure((0.5, 0.5))
    levels = [np.array([1.0])]
    # tilt the last level, then rebuild the lower levels by summing so additivity holds
    words = list(itertools.product(range(2), repeat=depth))
    top = np.array([base.mass(w) * factors(w) for w in words])
    top /= top.sum()
    rows = [top]
    for _ in range(depth - 1):
        rows.append(rows[-1].reshape(-1, 2).sum(axis=1))
    levels += rows[::-1]
    return levels


def test_audit_within_declared_constant():
    rng = np.random.default_rng(1)
    table = {w: rng.uniform(0.75, 1.33) for w in itertools.product(range(2), repeat=4)}
    levels = _perturbed(lambda w: table[w])
    t = TableMeasure(2, tuple(levels), c=2.0)
    rep = quasi_bernoulli_audit(t, sample_pairs=300, max_len=2)
    assert rep.passed
    assert 1 / rep.max_inverse_ratio >= 0.5 and rep.max_ratio <= 2.0


def test_audit_reports_violation():
    levels = _perturbed(lambda w: 30.0 if w == (0, 0, 0, 0) else 1.0)
    t = TableMeasure(2, tuple(levels), c=1.2)
    rep = quasi_bernoulli_audit(t, sample_pairs=300, max_len=2)
    assert not rep.passed
    i, j, r = rep.offending[0]
    assert r > 1.2 or r < 1 / 1.2
