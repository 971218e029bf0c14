"""Linear models trained by full-batch gradient descent with backtracking."""

import numpy as np

from .base import LearnerError, Scorer, sigmoid


def _log_loss(z, y):
    # log(1 + e^z) - y z, computed stably
    return np.logaddexp(0.0, z) - y * z


def _log_loss_grad(z, y):
    return sigmoid(z) - y


def _smooth_hinge(z, y):
    m = (2.0 * y - 1.0) * z
    return np.where(m >= 1.0, 0.0, np.where(m <= 0.0, 0.5 - m, 0.5 * (1.0 - m) ** 2))


def _smooth_hinge_grad(z, y):
    t = 2.0 * y - 1.0
    m = t * z
    return t * np.where(m >= 1.0, 0.0, np.where(m <= 0.0, -1.0, m - 1.0))


def gradient_descent(X, y, w, loss, grad, l2, max_iter, step, tol):
    """Minimise ``sum_i w_i loss(x_i.beta + b, y_i) / sum_i w_i + l2/2 |beta|^2``.

    Armijo backtracking from ``step`` on every iteration. Returns
    ``(beta, bias, final_objective, converged)``.
    """
    n, d = X.shape
    sw = w / w.sum()
    beta = np.zeros(d)
    bias = 0.0

    def objective(b, c):
        return float(sw @ loss(X @ b + c, y) + 0.5 * l2 * (b @ b))

    f = objective(beta, bias)
    converged = False
    for _ in range(max_iter):
        r = sw * grad(X @ beta + bias, y)
        g_beta = X.T @ r + l2 * beta
        g_bias = float(r.sum())
        gnorm2 = float(g_beta @ g_beta + g_bias * g_bias)
        if np.sqrt(gnorm2) < tol:
            converged = True
            break
        t = step
        while True:
            nb = beta - t * g_beta
            nc = bias - t * g_bias
            nf = objective(nb, nc)
            if nf <= f - 0.5 * t * gnorm2 or t < 1e-12:
                break
            t *= 0.5
        beta, bias, f = nb, nc, nf
        if not np.isfinite(f):
            raise LearnerError("gradient descent diverged (non-finite objective)")
    return beta, bias, f, converged


class _Linear(Scorer):
    _loss = staticmethod(_log_loss)
    _grad = staticmethod(_log_loss_grad)

    def __init__(self, beta, bias, converged=True, objective=float("nan")):
        self.beta = np.asarray(beta, dtype=np.float64)
        self.bias = float(bias)
        self.n_features = len(self.beta)
        self.converged = bool(converged)
        self.objective = float(objective)

    @classmethod
    def fit(cls, X, y, w, params, seed):
        beta, bias, f, ok = gradient_descent(
            X, y, w, cls._loss, cls._grad,
            params["l2"], params["max_iter"], params["step"], params["tol"],
        )
        return cls(beta, bias, ok, f)

    def decision_function(self, X):
        return self._check(X) @ self.beta + self.bias

    def _raw(self, X):
        return sigmoid(X @ self.beta + self.bias)

    def to_dict(self):
        return {
            "beta": self.beta.tolist(),
            "bias": self.bias,
            "converged": self.converged,
            "objective": self.objective,
        }

    @classmethod
    def from_dict(cls, d, n_features):
        return cls(d["beta"], d["bias"], d.get("converged", True), d.get("objective", float("nan")))


class LogisticRegression(_Linear):
    algorithm = "LR"


class LinearSVM(_Linear):
    """Linear SVM on a quadratically smoothed hinge; score is sigmoid(margin)."""

    algorithm = "SVM"
    _loss = staticmethod(_smooth_hinge)
    _grad = staticmethod(_smooth_hinge_grad)
