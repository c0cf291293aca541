"""Scikit-learn style classifier around the hierarchical pooling network.

``GtPoolClassifier`` follows the estimator protocol (``fit`` / ``predict`` /
``predict_proba`` / ``score``, ``get_params`` / ``set_params``), so it clones
and composes with standard model-selection tooling. X is a list of ``Graph``
objects with populated feature matrices rather than a 2-D array.
"""

from __future__ import annotations

import time

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from . import autodiff as ad
from .autodiff import cross_entropy, no_grad
from .datasets import Graph, batches, stratified_holdout
from .model import GtPoolNet
from .optim import Adam
from .rng import Rng, mix_seed


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""


class NotFittedError(RuntimeError):
    pass


class GtPoolClassifier(BaseEstimator, ClassifierMixin):
    """Graph classifier trained with Adam and validation-loss early stopping.

    A stratified slice of the training graphs (``val_fraction``) is held out
    for early stopping; the parameters that reached the best validation loss
    are restored at the end of ``fit``. On collections too small to hold
    anything out, the training loss is monitored instead.
    """

    def __init__(
        self,
        mu: float = 0.5,
        lam: float = 0.5,
        sampler: str = "rwsv",
        layers: int = 3,
        heads: int = 4,
        hidden: int = 64,
        batch_size: int = 64,
        lr: float = 1e-3,
        weight_decay: float = 1e-4,
        dropout: float = 0.3,
        epochs: int = 200,
        patience: int = 30,
        min_delta: float = 1e-4,
        val_fraction: float = 0.1,
        gate_scores: bool = False,
        seed: int = 0,
    ):
        self.mu = mu
        self.lam = lam
        self.sampler = sampler
        self.layers = layers
        self.heads = heads
        self.hidden = hidden
        self.batch_size = batch_size
        self.lr = lr
        self.weight_decay = weight_decay
        self.dropout = dropout
        self.epochs = epochs
        self.patience = patience
        self.min_delta = min_delta
        self.val_fraction = val_fraction
        self.gate_scores = gate_scores
        self.seed = seed

    # -- estimator protocol ---------------------------------------------------

    def fit(self, X: list[Graph], y=None) -> "GtPoolClassifier":
        graphs = list(X)
        if not graphs:
            raise ValueError("cannot fit on an empty graph list")
        if any(g.x is None for g in graphs):
            raise ValueError("graphs need feature matrices; run build_features first")
        labels = np.asarray(
            [g.label for g in graphs] if y is None else list(y), dtype=np.int64
        )
        if labels.size != len(graphs):
            raise ValueError(f"{len(graphs)} graphs but {labels.size} labels")

        self.classes_ = np.unique(labels)
        class_pos = {int(c): i for i, c in enumerate(self.classes_)}
        targets = np.array([class_pos[int(c)] for c in labels])
        self.n_features_in_ = graphs[0].x.cols

        rng = Rng(mix_seed(self.seed, 0x7EA1))
        self.model_ = GtPoolNet(
            in_dim=self.n_features_in_,
            num_classes=len(self.classes_),
            hidden=self.hidden,
            layers=self.layers,
            heads=self.heads,
            mu=self.mu,
            lam=self.lam,
            method=self.sampler,
            dropout=self.dropout,
            gate_scores=self.gate_scores,
            rng=rng,
        )
        optimizer = Adam(
            self.model_.parameters(), lr=self.lr, weight_decay=self.weight_decay
        )

        train_ids, val_ids = stratified_holdout(
            list(range(len(graphs))), targets, self.val_fraction, self.seed
        )
        monitor_ids = val_ids if val_ids else train_ids

        best_loss = np.inf  # strict minimum, decides the restored checkpoint
        anchor_loss = np.inf  # last significant improvement, decides patience
        best_state = self.model_.state_dict()
        best_epoch = -1
        stale = 0
        self.history_ = []
        for epoch in range(self.epochs):
            t0 = time.perf_counter()
            epoch_loss = 0.0
            for batch in batches(train_ids, self.batch_size, mix_seed(self.seed, epoch)):
                optimizer.zero_grad()
                for i in batch:
                    out = self.model_.forward(graphs[i], train=True, rng=rng)
                    loss = cross_entropy(out.logits, [targets[i]])
                    loss.backward()
                    epoch_loss += loss.item()
                optimizer.step()
            train_loss = epoch_loss / max(len(train_ids), 1)
            if not np.isfinite(train_loss):
                raise TrainingDiverged(f"training loss became {train_loss} at epoch {epoch}")
            monitor_loss = self._mean_loss(graphs, targets, monitor_ids)
            self.history_.append(
                {
                    "epoch": epoch,
                    "train_loss": train_loss,
                    "val_loss": monitor_loss,
                    "seconds": time.perf_counter() - t0,
                }
            )
            if monitor_loss < best_loss:
                best_loss = monitor_loss
                best_state = self.model_.state_dict()
                best_epoch = epoch
            if monitor_loss < anchor_loss - self.min_delta:
                anchor_loss = monitor_loss
                stale = 0
            else:
                stale += 1
                if stale >= self.patience:
                    break

        self.model_.load_state_dict(best_state)
        self.best_epoch_ = best_epoch
        self.best_val_loss_ = best_loss
        self.n_epochs_ = len(self.history_)
        return self

    def predict_proba(self, X: list[Graph]) -> np.ndarray:
        self._check_fitted()
        probs = np.empty((len(X), len(self.classes_)))
        with no_grad():
            for i, g in enumerate(X):
                logits = self.model_.forward(g).logits
                probs[i] = ad.row_softmax(logits).data[0]
        return probs

    def predict(self, X: list[Graph]) -> np.ndarray:
        self._check_fitted()
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    # ClassifierMixin supplies score() = accuracy over predict().

    # -- persistence ------------------------------------------------------------

    def save(self, path) -> None:
        self._check_fitted()
        self.model_.save(path)

    def load_weights(self, path) -> None:
        self._check_fitted()
        self.model_.load(path)

    # -- internals ----------------------------------------------------------------

    def _mean_loss(self, graphs, targets, ids) -> float:
        total = 0.0
        with no_grad():
            for i in ids:
                out = self.model_.forward(graphs[i])
                total += cross_entropy(out.logits, [targets[i]]).item()
        return total / max(len(ids), 1)

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError("estimator is not fitted; call fit() first")
