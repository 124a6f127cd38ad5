"""Linear models: logistic regression (batch gradient descent) and a
Pegasos-style linear SVM."""

from __future__ import annotations

import numpy as np

from .base import BinaryClassifier, class_weights


def sigmoid(z):
    # tanh form: exact 0.5 at z == 0, no overflow for large |z|
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


def logistic_loss_grad(w, b, X, y, sw, l2):
    """Mean weighted log-loss plus ``l2/2 * |w|^2`` and its gradient."""
    n = len(y)
    z = X @ w + b
    loss = float((sw * (np.logaddexp(0.0, z) - y * z)).sum() / n + 0.5 * l2 * (w @ w))
    r = sw * (sigmoid(z) - y) / n
    return loss, X.T @ r + l2 * w, float(r.sum())


class LogisticRegression(BinaryClassifier):
    kind = "logistic_regression"
    defaults = {
        "l2": 1e-4,
        "learning_rate": 0.1,
        "max_epochs": 1000,
        "tol": 1e-6,
        "class_weight": None,
    }

    def __init__(self, input_dim, hyperparams=None):
        super().__init__(input_dim, hyperparams)
        self.w = np.zeros(input_dim)
        self.b = 0.0
        self.epochs_run = 0

    def fit(self, X, y):
        hp = self.hyperparams
        sw = class_weights(y, hp["class_weight"])
        yf = y.astype(np.float64)
        w = np.zeros(X.shape[1])
        b = 0.0
        lr, l2, tol = float(hp["learning_rate"]), float(hp["l2"]), float(hp["tol"])
        epoch = 0
        for epoch in range(1, int(hp["max_epochs"]) + 1):
            _, gw, gb = logistic_loss_grad(w, b, X, yf, sw, l2)
            if np.sqrt(gw @ gw + gb * gb) < tol:
                epoch -= 1
                break
            w -= lr * gw
            b -= lr * gb
        self.w, self.b, self.epochs_run = w, b, epoch
        return self

    def decision_function(self, X):
        return X @ self.w + self.b

    def _score(self, X):
        return sigmoid(self.decision_function(X))

    def params(self):
        return {"w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_params(cls, input_dim, hyperparams, params):
        m = cls(input_dim, hyperparams)
        m.w = np.array(params["w"], dtype=np.float64)
        m.b = float(params["b"])
        return m


class LinearSVM(BinaryClassifier):
    """Hinge-loss linear SVM trained by stochastic subgradient steps.

    Minimizes ``lambda/2 |w|^2 + mean(hinge)`` with ``lambda = 1 / (C n)`` and
    step ``1 / (lambda t)``. The bias is a constant feature, regularized with
    the weights. Samples are visited in one seeded permutation, the same
    every epoch.
    """

    kind = "svm"
    defaults = {"C": 1.0, "epochs": 1000, "class_weight": None}

    def __init__(self, input_dim, hyperparams=None):
        super().__init__(input_dim, hyperparams)
        self.w = np.zeros(input_dim)
        self.b = 0.0

    def fit(self, X, y, seed: int = 0):
        hp = self.hyperparams
        n = len(X)
        sw = class_weights(y, hp["class_weight"])
        ys = np.where(y == 1, 1.0, -1.0)
        Xa = np.hstack([X, np.ones((n, 1))])
        lam = 1.0 / (float(hp["C"]) * n)
        radius = 1.0 / np.sqrt(lam)
        order = np.random.default_rng(seed).permutation(n)
        # w is kept as scale * v so the shrink step is O(1)
        v = np.zeros(Xa.shape[1])
        scale = 1.0
        sq = 0.0  # |v|^2
        t = 0
        for _ in range(int(hp["epochs"])):
            for i in order:
                t += 1
                eta = 1.0 / (lam * t)
                xi = Xa[i]
                margin = ys[i] * scale * (v @ xi)
                shrink = 1.0 - eta * lam
                if shrink <= 0.0:
                    v[:] = 0.0
                    scale, sq = 1.0, 0.0
                else:
                    scale *= shrink
                if margin < 1.0:
                    step = eta * ys[i] * sw[i] / scale
                    sq += 2.0 * step * (v @ xi) + step * step * (xi @ xi)
                    v += step * xi
                norm = scale * np.sqrt(max(sq, 0.0))
                if norm > radius:
                    scale *= radius / norm
                if scale < 1e-100:
                    v *= scale
                    scale = 1.0
                    sq = float(v @ v)
        w = scale * v
        self.w, self.b = w[:-1].copy(), float(w[-1])
        return self

    def decision_function(self, X):
        return X @ self.w + self.b

    def _score(self, X):
        return sigmoid(self.decision_function(X))

    def params(self):
        return {"w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_params(cls, input_dim, hyperparams, params):
        m = cls(input_dim, hyperparams)
        m.w = np.array(params["w"], dtype=np.float64)
        m.b = float(params["b"])
        return m
