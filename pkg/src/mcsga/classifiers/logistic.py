"""L2-penalized logistic regression fitted by gradient descent with backtracking."""

import numpy as np

from .base import ClassifierError, ClassifierKind, LogisticRegressionParams, Scaler, TrainedModel

GRAD_TOL = 1e-6
MAX_ITER = 10_000


def _log1pexp(z):
    return np.logaddexp(0.0, z)


def sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _objective(theta, Z1, t, decay, n):
    w = theta[1:]
    z = Z1 @ theta
    # log-loss with targets t in {0, 1}
    return (np.sum(_log1pexp(z) - t * z) + decay * (w @ w)) / n


def _gradient(theta, Z1, t, decay, n):
    g = Z1.T @ (sigmoid(Z1 @ theta) - t)
    g[1:] += 2.0 * decay * theta[1:]
    return g / n


def minimize(Z, y, decay, grad_tol=GRAD_TOL, max_iter=MAX_ITER):
    """Minimize (sum of log-losses + decay * ||w||^2) / n; the intercept is
    not penalized. Stops at ``grad_tol`` or ``max_iter``.

    Returns (theta, iterations, gradient_norm).
    """
    n, d = Z.shape
    Z1 = np.hstack([np.ones((n, 1)), Z])
    t = (y == 1).astype(np.float64)
    theta = np.zeros(d + 1)
    f = _objective(theta, Z1, t, decay, n)
    step = 1.0
    it = 0
    gnorm = np.inf
    for it in range(1, max_iter + 1):
        g = _gradient(theta, Z1, t, decay, n)
        gg = float(g @ g)
        gnorm = np.sqrt(gg)
        if gnorm < grad_tol:
            break
        step = min(step * 2.0, 1e6)
        while True:
            cand = theta - step * g
            fc = _objective(cand, Z1, t, decay, n)
            if fc <= f - 1e-4 * step * gg:
                break
            step /= 2.0
            if step < 1e-20:
                break
        if not np.isfinite(fc):
            raise ClassifierError("logistic regression objective became non-finite")
        theta, f = cand, fc
    return theta, it, gnorm


class LogisticRegressionModel(TrainedModel):
    kind = ClassifierKind.LOGISTIC_REGRESSION

    def __init__(self, params, scaler, intercept, coef, n_iter=0):
        super().__init__(params, scaler)
        self.intercept = float(intercept)
        self.coef = np.asarray(coef, dtype=np.float64)
        self.n_iter = int(n_iter)

    def _confidence(self, Z):
        return sigmoid(self.intercept + Z @ self.coef)

    def _state(self):
        return {"intercept": self.intercept, "coef": self.coef.tolist(), "n_iter": self.n_iter}

    @classmethod
    def _from_state(cls, params, scaler, state):
        return cls(params, scaler, state["intercept"], state["coef"], state.get("n_iter", 0))


def fit_logistic(params: LogisticRegressionParams, X, y, seed=None) -> LogisticRegressionModel:
    scaler = Scaler.fit(X)
    theta, n_iter, _ = minimize(scaler.transform(X), y, params.decay)
    return LogisticRegressionModel(params, scaler, theta[0], theta[1:], n_iter)
