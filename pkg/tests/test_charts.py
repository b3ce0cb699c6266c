import math

import numpy as np
import pytest

from geogap import charts
from geogap.errors import ConfigError, DomainExitError, SingularError


def test_euclidean_gamma_zero():
    c = charts.builtin("euclidean", {"dim": 3})
    assert not np.any(c.gamma(np.zeros(3)))
    assert not np.any(charts.curvature_at(c, np.ones(3)))


def test_sphere_christoffels():
    c = charts.sphere(1.0)
    th = 1.1
    G = c.gamma(np.array([th, 0.4]))
    assert G[0, 1, 1] == pytest.approx(-math.sin(th) * math.cos(th))
    assert G[1, 0, 1] == pytest.approx(1 / math.tan(th))
    assert G[1, 1, 0] == pytest.approx(1 / math.tan(th))


@pytest.mark.parametrize("name,r,kappa", [("sphere", 1.0, 1.0), ("sphere", 2.0, 0.25),
                                          ("hyperboloid", 1.0, -1.0), ("hyperboloid", 0.5, -4.0)])
def test_gaussian_curvature(name, r, kappa):
    c = charts.builtin(name, {"radius": r})
    for x in ([1.0, 0.3], [1.4, -2.0]):
        assert charts.gaussian_curvature(c, x) == pytest.approx(kappa, rel=1e-10)
    assert charts.gaussian_curvature(charts.euclidean(2), [0.3, 0.1]) == 0


def test_sectional_from_orthonormal_frame():
    c = charts.sphere(1.0)
    x = np.array([math.pi / 2, 0.0])
    F = charts.orthonormal_frame(c, x)
    assert charts.sectional_curvature(c, x, F[:, 0], F[:, 1]) == pytest.approx(1.0)
    h = charts.hyperboloid(1.0)
    assert charts.sectional_curvature(h, [2.0, 1.0], [1, 0], [0.2, 1]) == pytest.approx(-1.0)


def test_constant_torsion():
    c = charts.constant_torsion(0.3)
    T = charts.torsion_at(c, [0.0, 0.0])
    assert T[0, 0, 1] == pytest.approx(-0.3)
    assert T[0, 1, 0] == pytest.approx(0.3)
    assert not c.symmetric


def test_custom_torsion_formula():
    c = charts.custom(2, {"2,1,2": "0.7", "2,2,1": "-0.2"})
    T = charts.torsion_at(c, [0.0, 0.0])
    assert T[1, 0, 1] == pytest.approx(-0.2 - 0.7)


def test_symmetric_chart_torsion_zero():
    for c in (charts.sphere(1.0), charts.hyperboloid(2.0)):
        assert not np.any(charts.torsion_at(c, [1.0, 0.5]))


def test_metric_route_matches_builtin_sphere():
    m = charts.levi_civita({"1,1": "1", "2,2": "sin(x1)^2"}, 2)
    c = charts.sphere(1.0)
    x = np.array([0.9, 0.2])
    np.testing.assert_allclose(m.gamma(x), c.gamma(x), atol=1e-14)
    np.testing.assert_allclose(m.dgamma(x), c.dgamma(x), atol=1e-13)
    assert m.symmetric


def test_polar_flat_metric():
    m = charts.levi_civita({"1,1": "1", "2,2": "x1^2"}, 2, bounds=[(0.1, None), (None, None)])
    x = np.array([2.0, 0.3])
    G = m.gamma(x)
    assert G[0, 1, 1] == pytest.approx(-2.0)
    assert G[1, 0, 1] == pytest.approx(0.5)
    assert np.max(np.abs(charts.curvature_at(m, x))) < 1e-13


def test_singular_metric():
    m = charts.levi_civita({"1,1": "1", "2,2": "x1"}, 2)
    with pytest.raises(SingularError):
        m.gamma(np.array([0.0, 0.0]))


def test_symbolic_dgamma_matches_fd():
    c = charts.custom(2, {"1,1,2": "sin(x1)*x2", "2,2,2": "x1^2", "2,1,1": "exp(x2)"})
    x = np.array([0.4, 0.7])
    np.testing.assert_allclose(c.dgamma(x), charts.dgamma_fd(c, x), atol=1e-8)


def test_curvature_fd_fallback_matches_analytic():
    c = charts.sphere(1.0)
    nod = charts.ConnectionChart(2, c.gamma, None, c.bounds, c.metric, "sphere-fd", {}, True)
    x = np.array([1.0, 0.0])
    np.testing.assert_allclose(charts.curvature_at(nod, x), charts.curvature_at(c, x), atol=1e-8)


def test_from_spec_and_errors():
    assert charts.from_spec({"kind": "builtin", "name": "sphere", "params": {"radius": 2}}).params["radius"] == 2
    c = charts.from_spec({"kind": "custom", "dim": 2, "gamma": {"1,1,2": "0.3"}})
    assert c.gamma(np.zeros(2))[0, 0, 1] == pytest.approx(0.3)
    with pytest.raises(ConfigError):
        charts.builtin("sphere", {"radius": -1})
    with pytest.raises(ConfigError):
        charts.builtin("torus")
    with pytest.raises(ConfigError):
        charts.from_spec({"kind": "custom"})


def test_domain_checks():
    c = charts.sphere(1.0)
    assert c.contains([1.0, 100.0])
    assert not c.contains([0.05, 0.0])
    with pytest.raises(DomainExitError):
        c.require([0.05, 0.0])
