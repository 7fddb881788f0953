"""Radial-kernel SVM trained by SMO, with Platt-calibrated confidences."""

import math

import numpy as np

from .._kernels import smo_solve
from .base import ClassifierKind, ConvergenceError, Scaler, SvmRadialParams, TrainedModel

KKT_TOL = 1e-3


def rbf_kernel(A, B, sigma):
    """exp(-sigma * ||a - b||^2) for every row pair."""
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    np.multiply(sq, -sigma, out=sq)
    return np.exp(sq, out=sq)


def _rho(alpha, grad, y, C):
    yG = y * grad
    upper = alpha >= C
    lower = alpha <= 0
    free = ~upper & ~lower
    if free.any():
        return float(yG[free].mean())
    ub_mask = (upper & (y == -1)) | (lower & (y == 1))
    lb_mask = (upper & (y == 1)) | (lower & (y == -1))
    ub = yG[ub_mask].min() if ub_mask.any() else math.inf
    lb = yG[lb_mask].max() if lb_mask.any() else -math.inf
    return float((ub + lb) / 2.0)


def platt_fit(f, y, max_iter=100, min_step=1e-10, sigma=1e-12, eps=1e-5):
    """Sigmoid 1/(1 + exp(A f + B)) fitted by Newton's method with backtracking."""
    f = np.asarray(f, dtype=np.float64)
    pos = y == 1
    prior1 = float(pos.sum())
    prior0 = float(len(y) - prior1)
    hi_target = (prior1 + 1.0) / (prior1 + 2.0)
    lo_target = 1.0 / (prior0 + 2.0)
    t = np.where(pos, hi_target, lo_target)
    A, B = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))

    def objective(A, B):
        fApB = f * A + B
        return float(np.sum(np.where(fApB >= 0, t * fApB + np.log1p(np.exp(-np.abs(fApB))),
                                     (t - 1.0) * fApB + np.log1p(np.exp(-np.abs(fApB))))))

    fval = objective(A, B)
    for _ in range(max_iter):
        fApB = f * A + B
        e = np.exp(-np.abs(fApB))
        p = np.where(fApB >= 0, e / (1.0 + e), 1.0 / (1.0 + e))
        q = 1.0 - p
        d2 = p * q
        h11 = sigma + float(np.sum(f * f * d2))
        h22 = sigma + float(np.sum(d2))
        h21 = float(np.sum(f * d2))
        d1 = t - p
        g1 = float(np.sum(f * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= min_step:
            newA, newB = A + step * dA, B + step * dB
            newf = objective(newA, newB)
            if newf < fval + 1e-4 * step * gd:
                A, B, fval = newA, newB, newf
                break
            step /= 2.0
        else:
            break
    return A, B


def platt_apply(f, A, B):
    fApB = np.asarray(f) * A + B
    e = np.exp(-np.abs(fApB))
    return np.where(fApB >= 0, e / (1.0 + e), 1.0 / (1.0 + e))


class SvmRadialModel(TrainedModel):
    kind = ClassifierKind.SVM_RADIAL

    def __init__(self, params, scaler, support, coef, rho, platt_a, platt_b, n_iter=0):
        super().__init__(params, scaler)
        self.support = np.ascontiguousarray(support, dtype=np.float64).reshape(-1, len(scaler.mean))
        self.coef = np.asarray(coef, dtype=np.float64)
        self.rho = float(rho)
        self.platt_a = float(platt_a)
        self.platt_b = float(platt_b)
        self.n_iter = int(n_iter)

    def decision_function(self, Z):
        if len(self.coef) == 0:
            return np.full(len(Z), -self.rho)
        return rbf_kernel(Z, self.support, self.params.sigma) @ self.coef - self.rho

    def _confidence(self, Z):
        return platt_apply(self.decision_function(Z), self.platt_a, self.platt_b)

    def _state(self):
        return {
            "support": self.support.tolist(),
            "coef": self.coef.tolist(),
            "rho": self.rho,
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
            "n_iter": self.n_iter,
        }

    @classmethod
    def _from_state(cls, params, scaler, state):
        return cls(params, scaler, state["support"], state["coef"], state["rho"],
                   state["platt_a"], state["platt_b"], state.get("n_iter", 0))


def fit_svm(params: SvmRadialParams, X, y, seed=None, max_iter=None) -> SvmRadialModel:
    scaler = Scaler.fit(X)
    Z = np.ascontiguousarray(scaler.transform(X))
    n = len(Z)
    cap = max(1_000_000, 100 * n) if max_iter is None else int(max_iter)
    K = rbf_kernel(Z, Z, params.sigma)
    alpha, grad, n_iter, converged = smo_solve(K, np.ascontiguousarray(y, dtype=np.int8), float(params.c), KKT_TOL, cap)
    if not converged:
        raise ConvergenceError("SMO", cap)
    yf = y.astype(np.float64)
    rho = _rho(alpha, grad, yf, params.c)
    sv = alpha > 0
    coef = alpha[sv] * yf[sv]
    decision = K[:, sv] @ coef - rho
    del K
    A, B = platt_fit(decision, y)
    return SvmRadialModel(params, scaler, Z[sv], coef, rho, A, B, n_iter)
