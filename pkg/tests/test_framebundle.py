import math

import numpy as np
import pytest

from geogap import analysis, charts, framebundle as fb
from geogap.errors import ConfigError, SingularError
from geogap.quadgap import flow_gap_FII
from geogap.tensorlinalg import naive_contract_gamma

EQUATOR = np.array([math.pi / 2, 0.0])


def test_frame_point_guards():
    with pytest.raises(SingularError):
        fb.FramePoint([0.0, 0.0], [[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(ConfigError):
        fb.FramePoint([0.0, 0.0], np.eye(3))


def test_xi_flat_and_projection():
    y = fb.FramePoint([0.3, 0.1], [[1.0, 2.0], [0.5, -1.0]])
    for m in (0, 1):
        v = fb.xi_field(charts.euclidean(2), m, y)
        np.testing.assert_array_equal(v.base_part, y.frame[:, m])
        assert not np.any(v.vert_part)
        w = fb.xi_field(charts.sphere(1.0), m, fb.FramePoint([1.0, 0.2], y.frame))
        np.testing.assert_array_equal(w.base_part, y.frame[:, m])


def test_xi_vertical_matches_loop():
    c = charts.sphere(1.0)
    x = np.array([1.0, 0.0])
    F = charts.orthonormal_frame(c, x)
    y = fb.FramePoint(x, F)
    G = c.gamma(x)
    for m in (0, 1):
        v = fb.xi_field(c, m, y)
        for l in (0, 1):
            np.testing.assert_allclose(v.vert_part[:, l], -naive_contract_gamma(G, F[:, l], F[:, m]), atol=1e-15)


def test_bracket_flat_and_torsion():
    y = fb.FramePoint([0.0, 0.0], np.eye(2))
    b = fb.bracket_numeric(charts.euclidean(2), 0, 1, y)
    assert not np.any(np.abs(b.coords()) > 1e-12)
    b = fb.bracket_numeric(charts.constant_torsion(0.3), 0, 1, y)
    np.testing.assert_allclose(b.base_part, [0.3, 0.0], atol=1e-10)


def test_bracket_matches_flow_commutator():
    c = charts.constant_torsion(0.3)
    y = fb.FramePoint([0.1, 0.2], [[1.0, 0.3], [-0.2, 0.9]])
    b = fb.bracket_numeric(c, 0, 1, y)
    s = analysis.default_ladder()
    g = [flow_gap_FII(fb.bundle_field(c, 0), fb.bundle_field(c, 1), y.coords(), x) for x in s]
    np.testing.assert_allclose(analysis.estimate_limit(list(zip(s, g)), 2).limit, b.coords(), atol=1e-4)


def test_verify_reports():
    flat = fb.verify_frame_bracket(charts.euclidean(2), fb.FramePoint([0.0, 0.0], np.eye(2)))
    assert flat.max_base_deviation == 0 and flat.max_vert_deviation == 0
    sp = charts.sphere(1.0)
    rep = fb.verify_frame_bracket(sp, fb.FramePoint(EQUATOR, charts.orthonormal_frame(sp, EQUATOR)))
    assert rep.symmetric and rep.max_vert_deviation <= 1e-4 and rep.max_base_deviation <= 1e-6
    ct = fb.verify_frame_bracket(charts.constant_torsion(0.3), fb.FramePoint([0.0, 0.0], np.eye(2)))
    assert not ct.symmetric and ct.max_vert_deviation is None and ct.max_base_deviation <= 1e-6


def test_vertical_endomorphism_is_minus_curvature():
    sp = charts.sphere(1.0)
    F = charts.orthonormal_frame(sp, EQUATOR)
    y = fb.FramePoint(EQUATOR, F)
    E = fb.vertical_endomorphism(fb.bracket_numeric(sp, 0, 1, y), y)
    # -R(u1, u2) for unit curvature: u1 -> -u2 becomes u1 -> u2
    np.testing.assert_allclose(E @ F[:, 0], F[:, 1], atol=1e-6)
    np.testing.assert_allclose(E @ F[:, 1], -F[:, 0], atol=1e-6)


def test_equivariance_under_frame_change():
    sp = charts.sphere(1.0)
    x = np.array([1.1, 0.3])
    A = np.array([[1.0, 0.5], [0.2, 2.0]])
    for F in (charts.orthonormal_frame(sp, x), charts.orthonormal_frame(sp, x) @ A):
        rep = fb.verify_frame_bracket(sp, fb.FramePoint(x, F))
        assert rep.max_vert_deviation <= 1e-4 and rep.max_base_deviation <= 1e-6


def test_bracket_second_order_in_h():
    c = charts.custom(2, {"1,1,2": "sin(x1)", "2,1,1": "x2^2", "2,2,1": "x1*x2"})
    y = fb.FramePoint([0.7, 0.4], [[1.0, 0.2], [0.1, 1.0]])
    ref = fb.bracket_numeric(c, 0, 1, y, h=1e-5).coords()
    e1 = np.max(np.abs(fb.bracket_numeric(c, 0, 1, y, h=0.02).coords() - ref))
    e2 = np.max(np.abs(fb.bracket_numeric(c, 0, 1, y, h=0.01).coords() - ref))
    assert e1 / e2 == pytest.approx(4.0, rel=0.1)


def test_symmetric_bracket_vertical():
    h = charts.hyperboloid(1.0)
    x = np.array([1.5, 0.2])
    b = fb.bracket_numeric(h, 0, 1, fb.FramePoint(x, [[1.0, 0.3], [0.4, 0.5]]))
    assert np.max(np.abs(b.base_part)) <= 1e-6
