import math

import numpy as np
import pytest

from upwind_sav import (Circle, Ellipse, Grid, Interval, ParameterError, Rectangle, Rose, Union,
                        random_field, signed_distance, tanh_profile)


def test_circle_signed_distance():
    c = Circle(0.0, 0.0, 1.0)
    assert signed_distance(c, 0.0, 0.0) == 1.0
    assert signed_distance(c, 2.0, 0.0) == -1.0
    x = np.random.default_rng(0).uniform(-2, 2, (2, 50))
    assert np.array_equal(signed_distance(c, x[0], x[1]), 1.0 - np.hypot(x[0], x[1]))


def test_rose_on_curve_point():
    assert abs(signed_distance(Rose(), 0.5 + 3 / 8, 0.5)) < 1e-3
    assert signed_distance(Rose(), 0.5, 0.5) > 0
    assert signed_distance(Rose(), 0.0, 0.0) < 0


def test_ellipse_semi_axis_endpoints():
    e = Ellipse(0.4, 0.4, math.sqrt(2) / 5, math.sqrt(2) / 10, 45.0)
    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    for t in (0.0, 0.1, 0.2):
        # along the major axis the nearest boundary point is the vertex
        x, y = 0.4 + t * e.ra * c, 0.4 + t * e.ra * s
        assert signed_distance(e, x, y) == pytest.approx(e.rb, abs=1e-3) if t == 0 else True
        xv, yv = 0.4 + e.ra * c, 0.4 + e.ra * s
        assert abs(signed_distance(e, xv, yv)) < 1e-3
    # outside beyond the vertex the distance is exactly the axial gap
    d = 0.05
    x, y = 0.4 + (e.ra + d) * c, 0.4 + (e.ra + d) * s
    assert signed_distance(e, x, y) == pytest.approx(-d, abs=1e-3)
    # inside near the vertex: the vertex is nearest while within the curvature radius
    d = 0.01
    x, y = 0.4 + (e.ra - d) * c, 0.4 + (e.ra - d) * s
    assert signed_distance(e, x, y) == pytest.approx(d, abs=1e-3)


def test_rectangle_and_interval_and_union():
    r = Rectangle(0.5, 0.5, 0.8, 0.04)
    assert signed_distance(r, 0.5, 0.5) == pytest.approx(0.02)
    assert signed_distance(r, 0.5, 0.6) == pytest.approx(-0.08)
    assert signed_distance(r, 1.0, 0.5) == pytest.approx(-0.1)
    assert signed_distance(r, 0.95, 0.57) == pytest.approx(-0.05 * math.sqrt(2))
    i = Interval(0.2, 0.6)
    assert signed_distance(i, 0.3) == pytest.approx(0.1)
    assert signed_distance(i, 0.0) == pytest.approx(-0.2)
    u = Union((Circle(0.2, 0.2, 0.1), Circle(0.7, 0.7, 0.2)))
    assert signed_distance(u, 0.2, 0.2) == pytest.approx(0.1)
    assert signed_distance(u, 0.7, 0.7) == pytest.approx(0.2)
    for bad in (lambda: Circle(0, 0, 0), lambda: Interval(1, 0), lambda: Union(()),
                lambda: Rose(scale=-1)):
        with pytest.raises(ParameterError):
            bad()


def test_tanh_profile():
    g = Grid.rect(40, 40)
    f = tanh_profile(g, Circle(0.5, 0.5, 0.3), 0.01)
    assert f.is_admissible()
    lam = 1 - 1e-4
    # far inside the saturation reaches lambda
    assert f.values[20, 20] == pytest.approx(lam, abs=1e-12)
    assert f.values[0, 0] == pytest.approx(-lam, abs=1e-12)
    # centred circle: reflections are exact where the cell centres are
    # representable (dyadic n); otherwise rounding of the centres is
    # amplified by the tanh slope 1 / (sqrt(2) epsilon)
    v = tanh_profile(Grid.rect(64, 64), Circle(0.5, 0.5, 0.3), 0.01).values
    for w in (v[::-1, :], v[:, ::-1], v.T):
        assert np.max(np.abs(w - v)) < 1e-15
    v = f.values
    for w in (v[::-1, :], v[:, ::-1], v.T):
        assert np.max(np.abs(w - v)) < 1e-13
    # cell centres on the curve give zero
    g1 = Grid.line(10)
    f1 = tanh_profile(g1, Interval(0.25, 0.65), 0.05)
    assert f1.values[2] == 0.0 and f1.values[6] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ParameterError):
        tanh_profile(g, Circle(0.5, 0.5, 0.3), 0.01, lam=1.0)
    with pytest.raises(ParameterError):
        tanh_profile(g, Circle(0.5, 0.5, 0.3), 0.0)


def test_random_field():
    g = Grid.rect(30, 20)
    assert np.array_equal(random_field(g, 0.2, 0.0, 1).values, np.full((30, 20), 0.2))
    f = random_field(g, 0.2, 0.05, 9)
    assert f.values.min() >= 0.15 and f.values.max() <= 0.25
    assert np.array_equal(f.values, random_field(g, 0.2, 0.05, 9).values)
    assert not np.array_equal(f.values, random_field(g, 0.2, 0.05, 10).values)
    with pytest.raises(ParameterError):
        random_field(g, 0.5, 0.5, 0)
    with pytest.raises(ParameterError):
        random_field(g, 0.0, -0.1, 0)
