"""Ordered chain kappa -> psi -> alpha of single-target regressors."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .mlp import MLPRegressor, nmse, train_mlp

FORMAT_VERSION = 1
VARIANTS = ("rc", "rc-delta")
TARGETS = ("kappa", "psi", "alpha")
# kappa and alpha span decades (log-spaced grid axes), so they are regressed in log space
LOG_TARGETS = (True, False, True)


class UntrainedChainError(RuntimeError):
    pass


class OutsideHullWarning(UserWarning):
    """Query lies outside the descriptor box seen during training."""


@dataclass
class RegressorChain:
    """Y1: h -> kappa, Y2: (h, kappa) -> psi, Y3: (h, kappa, psi) -> alpha.

    ``h`` is the two-entry descriptor, followed by the clearance for the
    ``rc-delta`` variant. Earlier targets enter later links in log space,
    matching how those targets are normalised.
    """

    variant: str = "rc-delta"
    models: list[MLPRegressor] = field(default_factory=list)
    h_min: np.ndarray | None = None
    h_max: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    @property
    def uses_clearance(self) -> bool:
        return self.variant == "rc-delta"

    @property
    def n_inputs(self) -> int:
        return 3 if self.uses_clearance else 2

    @property
    def trained(self) -> bool:
        return len(self.models) == 3

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "variant": self.variant,
            "h_min": self.h_min.tolist(),
            "h_max": self.h_max.tolist(),
            "models": [m.to_dict() for m in self.models],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressorChain":
        ver = d.get("format_version")
        if ver != FORMAT_VERSION:
            raise ValueError(f"model format_version {ver!r} not supported (expected {FORMAT_VERSION})")
        models = [MLPRegressor.from_dict(m) for m in d["models"]]
        if len(models) != 3:
            raise ValueError("a chain needs exactly three regressors")
        return cls(d["variant"], models, np.asarray(d["h_min"], dtype=float),
                   np.asarray(d["h_max"], dtype=float), d.get("meta", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "RegressorChain":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _link_inputs(H: np.ndarray, prev: list[np.ndarray]) -> np.ndarray:
    return np.column_stack([H, *(np.log(p) for p in prev)]) if prev else H


def train_chain(data: Dataset, variant: str = "rc-delta", seed: int = 0, hidden=(10, 10),
                max_epochs: int = 500) -> RegressorChain:
    """Train the three links on ground-truth upstream targets (standard chain training).

    Targets flagged in ``LOG_TARGETS`` are min-max scaled after a log
    transform. On a linear scale the alpha link varies so steeply between
    neighbouring (kappa, psi) pairs that chained predictions landing
    slightly off the training manifold could return the smallest alpha
    and drive straight into the obstacle.
    """
    rc = RegressorChain(variant)
    H = data.features(rc.uses_clearance)
    rng = np.random.default_rng(seed)
    targets = [data.kappa, data.psi, data.alpha]
    for j, y in enumerate(targets):
        X = _link_inputs(H, targets[:j])
        rc.models.append(train_mlp(X, y, seed=rng, hidden=hidden, max_epochs=max_epochs,
                                   log_target=LOG_TARGETS[j]))
    rc.h_min, rc.h_max = H.min(axis=0), H.max(axis=0)
    rc.meta = {"n_train": len(data), "seed": seed, "hidden": list(hidden)}
    return rc


def predict_chain(rc: RegressorChain, h) -> np.ndarray:
    """Predict (kappa, psi, alpha) for one descriptor or a batch (n, n_inputs).

    Each link consumes the predictions of the previous ones. Queries
    outside the training box trigger an ``OutsideHullWarning`` but are
    still answered.
    """
    if not rc.trained:
        raise UntrainedChainError("regressor chain has not been trained")
    H = np.asarray(h, dtype=float)
    single = H.ndim == 1
    H = np.atleast_2d(H)
    if H.shape[1] != rc.n_inputs:
        raise ValueError(f"{rc.variant} expects {rc.n_inputs} inputs, got {H.shape[1]}")
    tol = 1e-9 * np.maximum(1.0, np.abs(rc.h_max))
    if np.any(H < rc.h_min - tol) or np.any(H > rc.h_max + tol):
        warnings.warn("descriptor outside the training range", OutsideHullWarning, stacklevel=2)
    preds: list[np.ndarray] = []
    for m in rc.models:
        preds.append(m.predict(_link_inputs(H, preds)))
    out = np.column_stack(preds)
    return out[0] if single else out


def chain_nmse(rc: RegressorChain, data: Dataset, chained: bool = False) -> dict[str, float]:
    """Per-target NMSE on raw targets.

    By default every link sees the true upstream targets, so each entry
    measures that single regressor. ``chained=True`` feeds each link the
    predictions of the earlier ones instead, as at inference time.
    """
    H = data.features(rc.uses_clearance)
    truth = [data.kappa, data.psi, data.alpha]
    if chained:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OutsideHullWarning)
            pred = predict_chain(rc, H)
        return {f"Y{j + 1}": nmse(pred[:, j], truth[j]) for j in range(3)}
    if not rc.trained:
        raise UntrainedChainError("regressor chain has not been trained")
    return {f"Y{j + 1}": nmse(m.predict(_link_inputs(H, truth[:j])), truth[j])
            for j, m in enumerate(rc.models)}
