"""Small tanh/logistic perceptrons trained with Levenberg-Marquardt."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..lm import levenberg_marquardt

TARGET_LOW, TARGET_HIGH = 0.05, 0.95


def _sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


@dataclass
class MLPRegressor:
    """Fully connected net: tanh hidden layers, logistic output.

    Inputs are min-max scaled to [-1, 1]; the (optionally log transformed)
    target is min-max scaled to (0.05, 0.95) so the logistic output never
    has to reach its asymptotes. Predictions are clipped to the target
    range seen in training, which keeps them positive and inside the
    explored parameter box.
    """

    sizes: tuple[int, ...]
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    x_min: np.ndarray | None = None
    x_max: np.ndarray | None = None
    y_min: float = 0.0
    y_max: float = 1.0
    log_target: bool = False
    train_nmse: float = float("nan")

    @classmethod
    def init(cls, sizes, rng: np.random.Generator, log_target: bool = False) -> "MLPRegressor":
        sizes = tuple(int(s) for s in sizes)
        W, b = [], []
        for n_in, n_out in zip(sizes[:-1], sizes[1:]):
            W.append(rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, n_out)))
            b.append(rng.normal(0.0, 0.1, size=n_out))
        return cls(sizes, W, b, log_target=log_target)

    # -- parameter vector plumbing -------------------------------------
    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def get_flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])

    def set_flat(self, theta: np.ndarray) -> None:
        i = 0
        for j, (n_in, n_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            self.weights[j] = theta[i:i + n_in * n_out].reshape(n_in, n_out)
            i += n_in * n_out
            self.biases[j] = theta[i:i + n_out].copy()
            i += n_out

    # -- scaling --------------------------------------------------------
    def fit_scaling(self, X: np.ndarray, y: np.ndarray) -> None:
        self.x_min = X.min(axis=0)
        self.x_max = X.max(axis=0)
        t = self._transform_target(y)
        self.y_min, self.y_max = float(t.min()), float(t.max())

    def _transform_target(self, y):
        return np.log(y) if self.log_target else np.asarray(y, dtype=float)

    def scale_inputs(self, X: np.ndarray) -> np.ndarray:
        span = np.where(self.x_max > self.x_min, self.x_max - self.x_min, 1.0)
        return 2.0 * (X - self.x_min) / span - 1.0

    def scale_target(self, y: np.ndarray) -> np.ndarray:
        span = self.y_max - self.y_min if self.y_max > self.y_min else 1.0
        return TARGET_LOW + (TARGET_HIGH - TARGET_LOW) * (self._transform_target(y) - self.y_min) / span

    def unscale_target(self, s: np.ndarray) -> np.ndarray:
        span = self.y_max - self.y_min if self.y_max > self.y_min else 1.0
        t = self.y_min + (s - TARGET_LOW) * span / (TARGET_HIGH - TARGET_LOW)
        return np.exp(t) if self.log_target else t

    # -- evaluation -----------------------------------------------------
    def forward_scaled(self, Xs: np.ndarray) -> np.ndarray:
        a = Xs
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.tanh(a @ W + b)
        return _sigmoid(a @ self.weights[-1] + self.biases[-1])[:, 0]

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = self.unscale_target(self.forward_scaled(self.scale_inputs(X)))
        lo, hi = (np.exp([self.y_min, self.y_max]) if self.log_target
                  else (self.y_min, self.y_max))
        return np.clip(y, lo, hi)

    def jacobian_scaled(self, Xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Output and d(output)/d(params) for every sample (backprop per row)."""
        acts = [Xs]
        a = Xs
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.tanh(a @ W + b)
            acts.append(a)
        out = _sigmoid(a @ self.weights[-1] + self.biases[-1])[:, 0]
        n = Xs.shape[0]
        blocks = [None] * len(self.weights)
        delta = (out * (1.0 - out))[:, None]  # (n, 1)
        for j in range(len(self.weights) - 1, -1, -1):
            a_in = acts[j]
            gW = (a_in[:, :, None] * delta[:, None, :]).reshape(n, -1)
            blocks[j] = np.hstack([gW, delta])
            if j > 0:
                delta = (delta @ self.weights[j].T) * (1.0 - acts[j] ** 2)
        return out, np.hstack(blocks)

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "x_min": self.x_min.tolist(),
            "x_max": self.x_max.tolist(),
            "y_min": self.y_min,
            "y_max": self.y_max,
            "log_target": self.log_target,
            "train_nmse": self.train_nmse,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MLPRegressor":
        return cls(
            sizes=tuple(d["sizes"]),
            weights=[np.asarray(w, dtype=float) for w in d["weights"]],
            biases=[np.asarray(b, dtype=float) for b in d["biases"]],
            x_min=np.asarray(d["x_min"], dtype=float),
            x_max=np.asarray(d["x_max"], dtype=float),
            y_min=float(d["y_min"]),
            y_max=float(d["y_max"]),
            log_target=bool(d.get("log_target", False)),
            train_nmse=float(d.get("train_nmse", float("nan"))),
        )


def nmse(pred, truth) -> float:
    """Mean squared error over the variance of the truth."""
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.shape != truth.shape or truth.size < 2:
        raise ValueError("need two equally long vectors with at least 2 entries")
    var = truth.var()
    if var <= 0:
        raise ValueError("truth has zero variance")
    return float(np.mean((pred - truth) ** 2) / var)


def train_mlp(X, y, seed: int | np.random.Generator = 0, hidden=(10, 10), max_epochs: int = 500,
              log_target: bool = False, min_samples: int = 50, stall_tol: float = 1e-7,
              stall_epochs: int = 10) -> MLPRegressor:
    """Fit one regressor by Levenberg-Marquardt on the mean squared error.

    Training stops after ``max_epochs`` LM iterations, when the damping
    ceiling is hit, or when the relative loss drop stays below
    ``stall_tol`` for ``stall_epochs`` consecutive epochs.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise ValueError("X and y disagree in length")
    if y.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {y.size}")
    if log_target and np.any(y <= 0):
        raise ValueError("log-scaled targets must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    net = MLPRegressor.init((X.shape[1], *hidden, 1), rng, log_target)
    net.fit_scaling(X, y)
    Xs = net.scale_inputs(X)
    ys = net.scale_target(y)
    if np.ptp(ys) == 0:
        # constant target: the output bias alone reproduces it
        for W in net.weights[-1:]:
            W[:] = 0.0
        net.biases[-1][:] = np.log(ys[0] / (1.0 - ys[0]))
        net.train_nmse = 0.0
        return net

    def residuals(theta):
        net.set_flat(theta)
        return net.forward_scaled(Xs) - ys

    def jac(theta):
        net.set_flat(theta)
        return net.jacobian_scaled(Xs)[1]

    history: list[float] = []

    def stalled(it, theta, cost):
        history.append(cost)
        if len(history) <= stall_epochs:
            return False
        old = history[-stall_epochs - 1]
        return (old - cost) / max(old, 1e-300) < stall_tol * stall_epochs

    res = levenberg_marquardt(residuals, net.get_flat(), jac=jac, max_iter=max_epochs,
                              ftol=0.0, xtol=0.0, callback=stalled)
    best = res.x
    net.set_flat(best)
    net.train_nmse = nmse(net.predict(X), y)
    return net

