import math

import numpy as np
import pytest
from scipy.linalg import expm

from geogap import charts
from geogap.errors import ConfigError, DomainExitError
from geogap.odeflow import IntegratorConfig, TransportState, flow, geodesic_transport


def test_config_validation():
    with pytest.raises(ConfigError):
        IntegratorConfig(8)
    assert IntegratorConfig(512).steps(0.1) == 52


def test_euclidean_straight_line():
    c = charts.euclidean(3)
    st = TransportState([1.0, 2.0, 3.0], [0.5, -1.0, 2.0], ([1.0, 1.0, 0.0],))
    out = geodesic_transport(c, st, 0.7)
    np.testing.assert_allclose(out.x, [1.35, 1.3, 4.4], atol=1e-14)
    np.testing.assert_allclose(out.tangent, st.tangent, atol=0)
    np.testing.assert_allclose(out.carried[0], st.carried[0], atol=0)


def test_zero_parameter_is_identity():
    st = TransportState([1.0, 0.0], [1.0, 0.0])
    assert geodesic_transport(charts.sphere(1.0), st, 0.0) is st


def test_equator_geodesic():
    out = geodesic_transport(charts.sphere(1.0), TransportState([math.pi / 2, 0.0], [0.0, 1.0]), 1.3)
    np.testing.assert_allclose(out.x, [math.pi / 2, 1.3], atol=1e-13)


def test_constant_torsion_step_refinement():
    c = charts.constant_torsion(0.3)
    st = TransportState([0.1, -0.2], [0.8, 0.6], ([0.0, 1.0],))
    a = geodesic_transport(c, st, 0.5)
    b = geodesic_transport(c, st, 0.5, IntegratorConfig(512 * 8))
    np.testing.assert_allclose(a.pack(), b.pack(), atol=1e-10)


def test_domain_exit_reports_step():
    st = TransportState([0.3, 0.0], [-1.0, 0.0])
    with pytest.raises(DomainExitError) as info:
        geodesic_transport(charts.sphere(1.0), st, 0.5)
    assert info.value.step is not None and info.value.step > 0


def test_batched_transport():
    c = charts.sphere(1.0)
    x = np.array([[1.0, 0.0], [1.2, 0.5]])
    t = np.array([[0.3, 0.4], [-0.2, 0.9]])
    out = geodesic_transport(c, TransportState(x, t), 0.2)
    for k in range(2):
        single = geodesic_transport(c, TransportState(x[k], t[k]), 0.2)
        np.testing.assert_allclose(out.x[k], single.x, atol=1e-15)


def test_flow_constant_and_linear():
    np.testing.assert_allclose(flow(lambda x: np.array([1.0, -2.0]), [0.5, 0.5], 0.3), [0.8, -0.1], atol=1e-15)
    A = np.array([[0.1, 0.4], [-0.3, 0.2]])
    x0 = np.array([1.0, 2.0])
    np.testing.assert_allclose(flow(lambda x: A @ x, x0, 0.5), expm(0.5 * A) @ x0, atol=1e-9)
    np.testing.assert_allclose(flow(lambda x: A @ x, x0, 0.0), x0)


def test_transport_preserves_metric():
    c = charts.hyperboloid(1.0)
    st = TransportState([1.0, 0.2], [0.3, 0.5], ([1.0, 0.0], [0.2, 0.7]))
    out = geodesic_transport(c, st, 0.4, IntegratorConfig(2048))
    g0, g1 = c.metric(st.x), c.metric(out.x)
    for a in (0, 1):
        for b in (0, 1):
            va, vb = st.carried[a], st.carried[b]
            wa, wb = out.carried[a], out.carried[b]
            assert wa @ g1 @ wb == pytest.approx(va @ g0 @ vb, abs=1e-11)
