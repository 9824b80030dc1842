"""Epsilon-insensitive support vector regression with an SMO dual solver.

Training problems here are tiny (one per attribute per cycle, at most a few
dozen points), so the solver favours clarity over large-scale tricks: dense
kernel matrix, maximal-violating-pair working set selection, no shrinking,
no caching.

Dual formulation (the usual stacked form): variables ``theta = (alpha,
alpha*)`` with signs ``z = (+1,...,+1,-1,...,-1)``,

    minimize   0.5 * theta' Q theta + p' theta
    subject to 0 <= theta <= C,   z' theta = 0

where ``Q[s,t] = z_s z_t K(x_s, x_t)`` and ``p = (eps - y, eps + y)``.
The fitted function is ``f(x) = sum_i beta_i K(x_i, x) + b`` with
``beta = alpha - alpha*``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rbf_kernel(a: np.ndarray, b: np.ndarray, width: float) -> np.ndarray:
    """Gaussian kernel exp(-d^2 / (2 width^2)) between row-point sets."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-d2 / (2.0 * width * width))


def median_pairwise_distance(points: np.ndarray) -> float:
    """Median of the strictly-upper-triangle pairwise distances."""
    points = np.atleast_2d(points)
    n = points.shape[0]
    if n < 2:
        return 0.0
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    iu = np.triu_indices(n, k=1)
    return float(np.median(dist[iu]))


def smo_solve(
    kernel: np.ndarray,
    y: np.ndarray,
    c: float,
    epsilon: float,
    tol: float = 1e-3,
    max_iter: int = 100_000,
) -> tuple[np.ndarray, float, int]:
    """Solve the epsilon-SVR dual by SMO; returns (beta, bias, iterations).

    Stops when the maximal KKT violation m - M drops to ``tol``.
    """
    n = y.shape[0]
    z = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - y, epsilon + y])
    theta = np.zeros(2 * n)
    grad = p.copy()  # gradient of the dual at theta = 0

    def q_col(s: int) -> np.ndarray:
        i = s % n
        return z[s] * z * np.concatenate([kernel[i], kernel[i]])

    it = 0
    while True:
        neg_zgrad = -z * grad
        up = ((theta < c) & (z > 0)) | ((theta > 0) & (z < 0))
        low = ((theta < c) & (z < 0)) | ((theta > 0) & (z > 0))
        m = neg_zgrad[up].max()
        big_m = neg_zgrad[low].min()
        if m - big_m <= tol:
            break
        if it >= max_iter:
            raise RuntimeError("SMO failed to converge within the iteration cap")
        i = np.flatnonzero(up)[np.argmax(neg_zgrad[up])]
        j = np.flatnonzero(low)[np.argmin(neg_zgrad[low])]

        ki, kj = i % n, j % n
        a = kernel[ki, ki] + kernel[kj, kj] - 2.0 * kernel[ki, kj]
        a = max(a, 1e-12)
        step = (z[j] * grad[j] - z[i] * grad[i]) / a
        # clip to the box along the feasible direction (both bounds positive
        # by the definitions of the up/low sets)
        lim_i = (c - theta[i]) if z[i] > 0 else theta[i]
        lim_j = theta[j] if z[j] > 0 else (c - theta[j])
        step = min(step, lim_i, lim_j)

        di = z[i] * step
        dj = -z[j] * step
        theta[i] += di
        theta[j] += dj
        grad += q_col(i) * di + q_col(j) * dj
        it += 1

    bias = 0.5 * (m + big_m)
    beta = theta[:n] - theta[n:]
    return beta, float(bias), it


@dataclass(frozen=True)
class SvrParams:
    c: float = 10.0
    epsilon: float = 0.1
    rbf_width: float | None = None  # None: median pairwise distance of the training points
    tol: float = 1e-3


class SvrModel:
    """A fitted RBF epsilon-SVR: f(x) = sum beta_i K(x_i, x) + b."""

    def __init__(self, points: np.ndarray, beta: np.ndarray, bias: float, width: float):
        self.points = points
        self.beta = beta
        self.bias = bias
        self.width = width

    def predict(self, points: np.ndarray) -> np.ndarray:
        k = rbf_kernel(np.atleast_2d(points), self.points, self.width)
        return k @ self.beta + self.bias


def fit_svr(points: np.ndarray, values: np.ndarray, params: SvrParams = SvrParams()) -> SvrModel:
    """Train an RBF epsilon-SVR on (points -> values) via SMO."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float)
    if points.shape[0] != values.shape[0]:
        raise ValueError("points and values disagree in length")
    if points.shape[0] < 2:
        raise ValueError("SVR needs at least 2 training points")
    width = params.rbf_width
    if width is None:
        width = median_pairwise_distance(points)
    width = max(width, 1e-9)
    kernel = rbf_kernel(points, points, width)
    beta, bias, _ = smo_solve(kernel, values, params.c, params.epsilon, params.tol)
    return SvrModel(points, beta, bias, width)
