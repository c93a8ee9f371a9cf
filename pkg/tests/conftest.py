import numpy as np
import pytest

from balancedrift.data import Dataset


class LinearScore:
    """Toy model: raw score is a fixed linear function, proba its logistic."""

    def __init__(self, coef, intercept=0.0, model_id="linear"):
        self.coef = np.asarray(coef, dtype=np.float64)
        self.intercept = float(intercept)
        self.model_id = model_id

    def raw_score(self, rows):
        X = np.asarray(rows, dtype=np.float64)
        out = np.full(X.shape[0], self.intercept)
        for j, c in enumerate(self.coef):
            out += X[:, j] * c
        return out

    def predict_proba(self, rows):
        return 1.0 / (1.0 + np.exp(-self.raw_score(rows)))


class FunctionModel:
    """Wraps ``f(X) -> scores`` as both raw score and probability."""

    def __init__(self, fn, model_id="fn"):
        self.fn = fn
        self.model_id = model_id

    def raw_score(self, rows):
        return np.asarray(self.fn(np.asarray(rows, dtype=np.float64)), dtype=np.float64)

    predict_proba = raw_score


def make_dataset(X, y, name="toy", names=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    names = names or [f"x{j + 1}" for j in range(X.shape[1])]
    return Dataset(name, X, names, np.asarray(y))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy50(rng):
    """50 rows, 3 features, both classes, correlated x1/x2."""
    X = rng.standard_normal((50, 3))
    X[:, 1] = 0.8 * X[:, 0] + 0.2 * X[:, 1]
    y = (X[:, 0] + 0.5 * rng.standard_normal(50) > 0).astype(int)
    return make_dataset(X, y, "toy50")


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.REPORT:
            terminalreporter.write_line(line)
