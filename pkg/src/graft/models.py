"""Small differentiable models with exact per-sample gradients.

Parameters live in a single flat float64 vector so the training loop and
the alignment machinery can treat every model uniformly.  All gradients
are analytic; tests check them against central finite differences.
"""

from __future__ import annotations

import numpy as np

from .alignment import GradientBundle
from .errors import DivergedModel


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class LinearRegression:
    """Squared loss 0.5 (x^T theta - y)^2 per sample."""

    def __init__(self, d_in: int):
        self.d_in = d_in
        self.n_params = d_in

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(scale=0.01, size=self.n_params)

    def per_sample_losses(self, theta, X, y) -> np.ndarray:
        r = X @ theta - y
        return 0.5 * r * r

    def per_sample_gradients(self, theta, X, y) -> np.ndarray:
        r = X @ theta - y
        return (X * r[:, None]).T  # d x K

    def predict(self, theta, X) -> np.ndarray:
        return X @ theta


class LogisticRegression:
    """Multinomial logistic regression with bias, cross-entropy loss."""

    def __init__(self, d_in: int, n_classes: int):
        self.d_in = d_in
        self.n_classes = n_classes
        self.n_params = n_classes * (d_in + 1)

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        return np.zeros(self.n_params)

    def _unpack(self, theta):
        W = theta[: self.n_classes * self.d_in].reshape(self.n_classes, self.d_in)
        b = theta[self.n_classes * self.d_in :]
        return W, b

    def _probs(self, theta, X):
        W, b = self._unpack(theta)
        return _softmax(X @ W.T + b)

    def per_sample_losses(self, theta, X, y) -> np.ndarray:
        P = self._probs(theta, X)
        k = np.arange(X.shape[0])
        return -np.log(np.clip(P[k, y.astype(int)], 1e-300, None))

    def per_sample_gradients(self, theta, X, y) -> np.ndarray:
        K = X.shape[0]
        P = self._probs(theta, X)
        D = P.copy()
        D[np.arange(K), y.astype(int)] -= 1.0  # K x C
        # dL/dW[c, j] = D[k, c] * X[k, j]; flatten per sample.
        gW = np.einsum("kc,kj->kcj", D, X).reshape(K, -1)
        return np.hstack([gW, D]).T  # params x K

    def predict(self, theta, X) -> np.ndarray:
        return np.argmax(self._probs(theta, X), axis=1)


class TanhMlp:
    """One hidden tanh layer + softmax output, cross-entropy loss."""

    def __init__(self, d_in: int, hidden: int, n_classes: int):
        self.d_in = d_in
        self.hidden = hidden
        self.n_classes = n_classes
        self.n_params = hidden * d_in + hidden + n_classes * hidden + n_classes

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        h, d, c = self.hidden, self.d_in, self.n_classes
        w1 = rng.normal(scale=1.0 / np.sqrt(d), size=h * d)
        w2 = rng.normal(scale=1.0 / np.sqrt(h), size=c * h)
        return np.concatenate([w1, np.zeros(h), w2, np.zeros(c)])

    def _unpack(self, theta):
        h, d, c = self.hidden, self.d_in, self.n_classes
        i = 0
        W1 = theta[i : i + h * d].reshape(h, d); i += h * d
        b1 = theta[i : i + h]; i += h
        W2 = theta[i : i + c * h].reshape(c, h); i += c * h
        b2 = theta[i : i + c]
        return W1, b1, W2, b2

    def _forward(self, theta, X):
        W1, b1, W2, b2 = self._unpack(theta)
        H = np.tanh(X @ W1.T + b1)
        P = _softmax(H @ W2.T + b2)
        return H, P

    def per_sample_losses(self, theta, X, y) -> np.ndarray:
        _, P = self._forward(theta, X)
        k = np.arange(X.shape[0])
        return -np.log(np.clip(P[k, y.astype(int)], 1e-300, None))

    def per_sample_gradients(self, theta, X, y) -> np.ndarray:
        K = X.shape[0]
        W1, b1, W2, b2 = self._unpack(theta)
        H, P = self._forward(theta, X)
        D2 = P.copy()
        D2[np.arange(K), y.astype(int)] -= 1.0          # K x C
        D1 = (D2 @ W2) * (1.0 - H * H)                  # K x h
        gW1 = np.einsum("kh,kj->khj", D1, X).reshape(K, -1)
        gW2 = np.einsum("kc,kh->kch", D2, H).reshape(K, -1)
        return np.hstack([gW1, D1, gW2, D2]).T          # params x K

    def predict(self, theta, X) -> np.ndarray:
        _, P = self._forward(theta, X)
        return np.argmax(P, axis=1)


def gradient_bundle(model, theta, X, y) -> GradientBundle:
    """Per-sample gradient matrix for a batch, validated for finiteness."""
    losses = model.per_sample_losses(theta, X, y)
    if not np.all(np.isfinite(losses)):
        raise DivergedModel("non-finite per-sample loss")
    G = model.per_sample_gradients(theta, X, y)
    if not np.all(np.isfinite(G)):
        raise DivergedModel("non-finite per-sample gradient")
    return GradientBundle(per_sample=G, mean=G.mean(axis=1))


def make_model(name: str, d_in: int, n_classes: int, hidden: int = 16):
    if name == "linear":
        return LinearRegression(d_in)
    if name == "logistic":
        return LogisticRegression(d_in, n_classes)
    if name == "mlp":
        return TanhMlp(d_in, hidden, n_classes)
    raise ValueError(f"unknown model {name!r}")
