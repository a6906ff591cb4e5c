import numpy as np
import pytest

from wallshape.simplex import initial_simplex, nelder_mead


def rosenbrock(x):
    return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2


def test_rosenbrock():
    res = nelder_mead(rosenbrock, [-1.2, 1.0], 0.5, xtol=1e-10, max_evals=5000, max_iter=5000)
    assert res.converged
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-7)


def test_quadratic_in_five_dimensions():
    target = np.arange(5.0)
    res = nelder_mead(lambda x: np.sum((x - target) ** 2), np.zeros(5), 1.0, xtol=1e-9, max_evals=20000, max_iter=20000)
    np.testing.assert_allclose(res.x, target, atol=1e-7)


def test_budget_is_respected_and_best_point_returned():
    calls = []

    def f(x):
        calls.append(x.copy())
        return rosenbrock(x)

    res = nelder_mead(f, [-1.2, 1.0], 0.5, xtol=0.0, max_evals=17)
    assert len(calls) == res.nfev == 17
    assert not res.converged
    assert res.fun == min(rosenbrock(c) for c in calls)


def test_known_start_value_saves_an_evaluation():
    f = lambda x: float(np.sum(x**2))
    a = nelder_mead(f, [1.0, 2.0], 0.3, xtol=1e-6, max_evals=1000)
    b = nelder_mead(f, [1.0, 2.0], 0.3, xtol=1e-6, max_evals=1000, f0=5.0)
    assert b.nfev == a.nfev - 1
    np.testing.assert_array_equal(a.x, b.x)


def test_deterministic():
    runs = [nelder_mead(rosenbrock, [0.0, 0.0], 0.2, xtol=1e-8, max_evals=400) for _ in range(2)]
    np.testing.assert_array_equal(runs[0].x, runs[1].x)
    assert runs[0].nfev == runs[1].nfev


def test_one_dimensional():
    res = nelder_mead(lambda x: abs(x[0] - 0.3), [0.0], 0.1, xtol=1e-12, max_evals=500)
    assert res.x[0] == pytest.approx(0.3, abs=1e-11)


def test_initial_simplex_shape():
    sim = initial_simplex([1.0, 2.0, 3.0], [0.1, -0.2, 0.3])
    assert sim.shape == (4, 3)
    np.testing.assert_allclose(sim[2] - sim[0], [0.0, -0.2, 0.0])
