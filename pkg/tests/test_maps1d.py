import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parafrac.errors import DomainError
from parafrac.maps1d import (Affine, MPInverseBranch, Reflected, SqrtMap, TableMap, compose_eval,
                             derivative_range, mp_invert_left)

LEFT = MPInverseBranch(0.9, "left")
RIGHT = MPInverseBranch(0.9, "right")
MAPS = [Affine(1 / 3, 0.0), Affine(0.5, 0.5), LEFT, RIGHT, MPInverseBranch(0.5, "left"), SqrtMap(),
        Reflected(SqrtMap())]


def test_affine_values():
    h = Affine(1 / 3, 0.0)
    assert h(1.0) == pytest.approx(1 / 3)
    assert np.allclose(h.deriv(np.linspace(0, 1, 5)), 1 / 3)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_mp_forward_half_is_one(alpha):
    h = MPInverseBranch(alpha, "left")
    assert h.forward(0.5) == pytest.approx(1.0, abs=1e-15)
    assert h(1.0) == pytest.approx(0.5, abs=1e-14)


def test_sqrt_map_fixed_point():
    h = SqrtMap()
    assert h(0.0) == 0.0
    assert h.deriv(0.0) == pytest.approx(1.0)
    assert h(1.0) == pytest.approx(0.5)


def test_mp_left_derivative_at_zero():
    assert LEFT.deriv(0.0) == pytest.approx(1.0, abs=1e-12)


def test_domain_error():
    with pytest.raises(DomainError):
        LEFT(1.1)
    # small slack is tolerated
    assert LEFT(1 + 1e-13) == pytest.approx(0.5)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
def test_invert_endpoints(alpha):
    assert mp_invert_left(alpha, 0.0) == 0.0
    assert mp_invert_left(alpha, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_invert_residual():
    x = mp_invert_left(0.5, 0.3)
    assert abs(x + 2 ** 0.5 * x ** 1.5 - 0.3) <= 1e-14


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0))
def test_invert_residual_property(alpha, y):
    x = mp_invert_left(alpha, y)
    assert 0.0 <= x <= 0.5
    assert abs(x + 2 ** alpha * x ** (1 + alpha) - y) <= 1e-14


def test_compose_affine():
    v, d = compose_eval([Affine(0.5, 0.0), Affine(0.5, 0.5)], 0.0)
    assert v == pytest.approx(0.25) and d == pytest.approx(0.25)


def test_compose_single_map():
    x = np.array([0.1, 0.7])
    v, d = compose_eval([RIGHT], x)
    assert np.allclose(v, RIGHT(x)) and np.allclose(d, RIGHT.deriv(x))


def _fd(maps, x, h=1e-6):
    lo = compose_eval(maps, x - h)[0]
    hi = compose_eval(maps, x + h)[0]
    return (hi - lo) / (2 * h)


def test_compose_mp_length_three():
    maps = [LEFT, RIGHT, LEFT]
    d = compose_eval(maps, 0.3)[1]
    assert abs(d - _fd(maps, 0.3)) / abs(d) <= 1e-6


def test_chain_rule_random_words():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 9))
        maps = [MAPS[int(i)] for i in rng.integers(0, len(MAPS), size=n)]
        x = float(rng.uniform(0.05, 0.95))
        d = compose_eval(maps, x)[1]
        worst = max(worst, abs(d - _fd(maps, x)) / abs(d))
    assert worst <= 1e-5


def test_derivative_range_affine_exact():
    b = derivative_range([Affine(1 / 3, 0.0), Affine(0.5, 0.5)])
    assert b.lower == pytest.approx(1 / 6, rel=1e-14) and b.upper == pytest.approx(1 / 6, rel=1e-14)


def test_derivative_range_parabolic_power():
    # the full-interval sup stays 1 (attained at the fixed point); away from it the sup falls with n
    uppers = [derivative_range([LEFT] * n, domain=(0.5, 1.0)).upper for n in (5, 10, 20)]
    assert all(u < 1 for u in uppers)
    assert uppers[0] > uppers[1] > uppers[2]
    lowers = [derivative_range([LEFT] * n).lower for n in (5, 10, 20)]
    assert lowers[0] > lowers[1] > lowers[2]
    assert derivative_range([LEFT] * 10).upper == pytest.approx(1.0)


def test_word_ending_hyperbolic_contracts():
    rho = derivative_range([RIGHT]).upper
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(0, 12))
        word = [LEFT if s == 0 else RIGHT for s in rng.integers(0, 2, size=n)] + [RIGHT]
        assert derivative_range(word).upper <= rho + 1e-12
        assert derivative_range(word).upper < 1


@pytest.mark.parametrize("word", [[LEFT, RIGHT, LEFT], [SqrtMap(), LEFT, RIGHT], [LEFT] * 5])
def test_derivative_range_brackets_samples(word):
    xs = np.linspace(0, 1, 1001)
    d = np.abs(compose_eval(word, xs)[1])
    widths = []
    for grid in (8, 16, 32, 64):
        b = derivative_range(word, grid=grid)
        assert b.lower <= d.min() * (1 + 1e-9) and d.max() <= b.upper * (1 + 1e-9)
        widths.append(b.upper - b.lower)
    assert all(w1 <= w0 + 1e-12 for w0, w1 in zip(widths, widths[1:]))


def test_tempered_distortion_trend():
    vals = [np.log(derivative_range([LEFT] * n).distortion) / n for n in (4, 8, 16, 32)]
    assert all(b <= a * 1.1 for a, b in zip(vals, vals[1:]))


def test_reflected_parabolic_point():
    h = Reflected(MPInverseBranch(0.9, "left"))
    assert h.parabolic_point == 1.0
    assert h(1.0) == pytest.approx(1.0)


def test_table_map_interpolates():
    h = TableMap((0.0, 0.5, 1.0), (0.0, 0.2, 0.5))
    assert h(0.5) == pytest.approx(0.2)
    assert h.to_dict()["kind"] == "table"
    with pytest.raises(ValueError):
        TableMap((0.0, 0.5, 1.0), (0.0, 0.3, 0.2))
