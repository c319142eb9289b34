"""Black-box loss contract, 2-D test functions and toy dataset losses."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import GradientUnavailable

__all__ = [
    "Objective",
    "Minibatch",
    "test_function",
    "TEST_FUNCTIONS",
    "logistic_loss",
    "accuracy_objective",
    "gaussian_blobs",
    "save_dataset",
    "load_dataset",
    "CountingObjective",
]


@dataclass(frozen=True)
class Minibatch:
    features: np.ndarray  # (B, p)
    labels: np.ndarray  # (B,) in {0, 1}

    @property
    def size(self) -> int:
        return self.features.shape[0]

    def __post_init__(self):
        if self.features.shape[0] < 1:
            raise ValueError("minibatch must hold at least one example")


@dataclass(frozen=True)
class Objective:
    """evaluate(theta, batch) -> scalar loss; gradient is optional and only
    used by first-order baselines and validation suites."""

    name: str
    dim: int
    evaluate: Callable[[np.ndarray, Optional[Minibatch]], float]
    gradient: Optional[Callable[[np.ndarray, Optional[Minibatch]], np.ndarray]] = None
    # advisory per-coordinate (low, high) bounds: init sampling and plot limits
    search_domain: Optional[tuple[float, float]] = None
    minimum_point: Optional[np.ndarray] = None
    minimum_value: Optional[float] = None

    def grad(self, theta: np.ndarray, batch: Optional[Minibatch] = None) -> np.ndarray:
        if self.gradient is None:
            raise GradientUnavailable(f"objective {self.name!r} has no analytic gradient")
        return self.gradient(theta, batch)


class CountingObjective:
    """Wrapper that counts evaluate() calls; used to verify the
    two-forward-passes-per-step contract."""

    def __init__(self, inner: Objective):
        self.inner = inner
        self.calls = 0
        self.name = inner.name
        self.dim = inner.dim
        self.gradient = inner.gradient
        self.search_domain = inner.search_domain
        self.minimum_point = inner.minimum_point
        self.minimum_value = inner.minimum_value

    def evaluate(self, theta, batch=None):
        self.calls += 1
        return self.inner.evaluate(theta, batch)

    def grad(self, theta, batch=None):
        return self.inner.grad(theta, batch)


# --- 2-D benchmark functions ------------------------------------------------
# each entry: (evaluate, gradient, domain half-width, argmin)


def _fa(t, _=None):
    return abs(t[0]) + abs(t[1])


def _fa_grad(t, _=None):
    return np.array([np.sign(t[0]), np.sign(t[1])])


def _fb(t, _=None):
    return abs(t[0] + t[1]) + abs(t[0] - t[1]) / 10.0


def _fb_grad(t, _=None):
    s1 = np.sign(t[0] + t[1])
    s2 = np.sign(t[0] - t[1]) / 10.0
    return np.array([s1 + s2, s1 - s2])


def _fc(t, _=None):
    return (t[0] + t[1]) ** 2 + (t[0] - t[1]) ** 2 / 10.0


def _fc_grad(t, _=None):
    a = 2.0 * (t[0] + t[1])
    b = 0.2 * (t[0] - t[1])
    return np.array([a + b, a - b])


def _fd(t, _=None):
    return abs(t[0]) / 10.0 + abs(t[1])


def _fd_grad(t, _=None):
    return np.array([np.sign(t[0]) / 10.0, np.sign(t[1])])


def _beale(t, _=None):
    x, y = t[0], t[1]
    return (
        (1.5 - x + x * y) ** 2
        + (2.25 - x + x * y ** 2) ** 2
        + (2.625 - x + x * y ** 3) ** 2
    )


def _beale_grad(t, _=None):
    x, y = t[0], t[1]
    e1 = 1.5 - x + x * y
    e2 = 2.25 - x + x * y ** 2
    e3 = 2.625 - x + x * y ** 3
    gx = 2 * e1 * (y - 1) + 2 * e2 * (y ** 2 - 1) + 2 * e3 * (y ** 3 - 1)
    gy = 2 * e1 * x + 2 * e2 * 2 * x * y + 2 * e3 * 3 * x * y ** 2
    return np.array([gx, gy])


def _rosenbrock(t, _=None):
    x, y = t[0], t[1]
    return 100.0 * (x - y ** 2) ** 2 + (1.0 - y) ** 2


def _rosenbrock_grad(t, _=None):
    x, y = t[0], t[1]
    gx = 200.0 * (x - y ** 2)
    gy = -400.0 * y * (x - y ** 2) - 2.0 * (1.0 - y)
    return np.array([gx, gy])


_TABLE = {
    "a": (_fa, _fa_grad, 3.0, (0.0, 0.0)),
    "b": (_fb, _fb_grad, 3.0, (0.0, 0.0)),
    "c": (_fc, _fc_grad, 3.0, (0.0, 0.0)),
    "d": (_fd, _fd_grad, 3.0, (0.0, 0.0)),
    "beale": (_beale, _beale_grad, 4.5, (3.0, 0.5)),
    "rosenbrock": (_rosenbrock, _rosenbrock_grad, 4.5, (1.0, 1.0)),
}

TEST_FUNCTIONS = tuple(_TABLE)


def test_function(name: str) -> Objective:
    """One of the six 2-D benchmark functions, with analytic gradient,
    search domain and stated global minimum."""
    key = name.lower()
    if key not in _TABLE:
        raise KeyError(f"unknown test function {name!r}; choose from {TEST_FUNCTIONS}")
    fn, grad, half, argmin = _TABLE[key]
    return Objective(
        name=key,
        dim=2,
        evaluate=fn,
        gradient=grad,
        search_domain=(-half, half),
        minimum_point=np.array(argmin),
        minimum_value=0.0,
    )


# --- toy dataset losses -----------------------------------------------------


def gaussian_blobs(
    n: int, dim: int, separation: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Two-class Gaussian mixture: class means at +/- separation/2 along a
    random unit direction, unit covariance. Labels in {0, 1}."""
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    y = rng.integers(0, 2, size=n)
    signs = 2.0 * y - 1.0
    x = rng.standard_normal((n, dim)) + np.outer(signs, direction * separation / 2.0)
    return x, y


def _batch_or(dataset: tuple[np.ndarray, np.ndarray], batch: Optional[Minibatch]):
    if batch is None:
        return dataset
    return batch.features, batch.labels


def logistic_loss(dataset: tuple[np.ndarray, np.ndarray]) -> Objective:
    """Mean negative log-likelihood of a linear logistic model."""
    x_all, y_all = dataset
    labels = set(np.unique(y_all).tolist())
    if not labels <= {0, 1}:
        raise ValueError("logistic loss requires binary {0,1} labels")
    dim = x_all.shape[1]

    def ev(theta, batch=None):
        x, y = _batch_or(dataset, batch)
        margins = (2.0 * y - 1.0) * (x @ theta)
        return float(np.mean(np.logaddexp(0.0, -margins)))

    def gr(theta, batch=None):
        x, y = _batch_or(dataset, batch)
        s = 2.0 * y - 1.0
        sigma = 1.0 / (1.0 + np.exp(s * (x @ theta)))
        return -(s * sigma) @ x / x.shape[0]

    return Objective(name="logistic", dim=dim, evaluate=ev, gradient=gr)


def accuracy_objective(dataset: tuple[np.ndarray, np.ndarray]) -> Objective:
    """Non-differentiable loss 1 - accuracy of the linear classifier
    sign(x . theta); piecewise constant, no gradient."""
    x_all, y_all = dataset
    dim = x_all.shape[1]

    def ev(theta, batch=None):
        x, y = _batch_or(dataset, batch)
        pred = (x @ theta) > 0
        return float(1.0 - np.mean(pred == (y == 1)))

    return Objective(name="one-minus-accuracy", dim=dim, evaluate=ev, gradient=None)


def save_dataset(path, dataset: tuple[np.ndarray, np.ndarray]) -> None:
    """One example per line: feature values then the integer label,
    space-delimited, full-precision floats."""
    x, y = dataset
    with open(path, "w") as fh:
        for row, label in zip(x, y):
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write(f" {int(label)}\n")


def load_dataset(path) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            xs.append([float(v) for v in parts[:-1]])
            ys.append(int(parts[-1]))
    return np.array(xs), np.array(ys)
