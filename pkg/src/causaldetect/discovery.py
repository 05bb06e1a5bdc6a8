"""Per-window temporal structure learning.

A linear structural equation model ``X = X A_X + T A_T + Z`` is fitted by
minimising the least-squares score with l1 penalties, subject to the smooth
acyclicity constraint ``h(A_X) = tr(exp(A_X * A_X)) - M = 0``. The constraint is
handled with an augmented Lagrangian outer loop; each inner problem is solved
with L-BFGS-B over the positive and negative parts of the weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as slin
import scipy.optimize as sopt

from .graph import CausalGraph, is_acyclic


@dataclass
class DiscoveryConfig:
    l1_intra: float = 0.1
    l1_lag: float = 0.1
    edge_threshold: float = 0.1
    max_outer_iterations: int = 100
    acyclicity_tolerance: float = 1e-8
    rho_max: float = 1e16
    inner_max_iter: int = 500

    def __post_init__(self):
        if self.l1_intra < 0 or self.l1_lag < 0:
            raise ValueError("l1 penalties must be non-negative")
        if self.edge_threshold < 0:
            raise ValueError("edge_threshold must be non-negative")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be positive")
        if not self.acyclicity_tolerance > 0:
            raise ValueError("acyclicity_tolerance must be positive")


def stack_lags(window: np.ndarray, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split a k x M window into current rows X and lagged rows T.

    Row ``r`` of X is window row ``r + p``; row ``r`` of T is
    ``[row r+p-1, row r+p-2, ..., row r]`` so column block ``l - 1`` holds lag l.
    """
    window = np.asarray(window, dtype=float)
    if window.ndim == 1:
        window = window[:, None]
    k, m = window.shape
    if p < 0:
        raise ValueError("max lag must be non-negative")
    if k - p < 2:
        raise ValueError(f"max lag {p} too large for window of {k} rows")
    X = window[p:]
    if p == 0:
        return X.copy(), np.zeros((k, 0))
    T = np.hstack([window[p - lag : k - lag] for lag in range(1, p + 1)])
    return X.copy(), T


def acyclicity_value(A: np.ndarray) -> float:
    """``tr(exp(A * A)) - M``; zero exactly when the weighted digraph is a DAG."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("acyclicity_value needs a square matrix")
    return max(float(np.trace(slin.expm(A * A)) - A.shape[0]), 0.0)


def penalized_objective(X, T, A_X, A_T, config: DiscoveryConfig) -> float:
    """Least-squares score plus l1 penalties (no acyclicity term)."""
    n = X.shape[0]
    R = X - X @ A_X
    if T.shape[1]:
        R = R - T @ A_T
    loss = 0.5 / n * float(np.sum(R * R))
    return loss + config.l1_intra * float(np.abs(A_X).sum()) + config.l1_lag * float(np.abs(A_T).sum())


def _unpack(vec: np.ndarray, m: int, pm: int) -> Tuple[np.ndarray, np.ndarray]:
    mm = m * m
    w = (vec[:mm] - vec[mm : 2 * mm]).reshape(m, m)
    a_pos = vec[2 * mm : 2 * mm + pm * m]
    a_neg = vec[2 * mm + pm * m :]
    return w, (a_pos - a_neg).reshape(pm, m)


def fit(
    X: np.ndarray,
    T: np.ndarray,
    config: Optional[DiscoveryConfig] = None,
    node_ids: Optional[Sequence[str]] = None,
    forbidden_intra: Optional[np.ndarray] = None,
) -> CausalGraph:
    """Learn intra-window and lagged adjacency matrices from stacked data.

    Parameters
    ----------
    X : (n, M) array of current observations.
    T : (n, p*M) array of lagged observations, as produced by :func:`stack_lags`.
    config : solver and penalty settings.
    node_ids : names for the M variables; defaults to ``x0 .. x{M-1}``.
    forbidden_intra : optional M x M boolean mask of intra-window edges pinned
        to zero, e.g. to impose a known causal order.

    Returns
    -------
    CausalGraph with weights below ``edge_threshold`` zeroed. ``diagnostics``
    records the final ``h`` value, outer iterations and a ``converged`` flag.
    """
    config = config or DiscoveryConfig()
    X = np.asarray(X, dtype=float)
    T = np.asarray(T, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("X must be a 2-d array with at least 2 rows")
    if T.ndim != 2 or T.shape[0] != X.shape[0]:
        raise ValueError("T must have the same number of rows as X")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(T))):
        raise ValueError("input contains non-finite values")
    n, m = X.shape
    if T.shape[1] % m:
        raise ValueError("columns of T must be a multiple of M")
    pm = T.shape[1]
    p = pm // m
    node_ids = list(node_ids) if node_ids is not None else [f"x{i}" for i in range(m)]

    XtX = X.T @ X / n
    TtT = T.T @ T / n
    XtT = X.T @ T / n
    lam_w, lam_a = config.l1_intra, config.l1_lag

    def loss_and_grad(W, A):
        # gradients of 0.5/n ||X - XW - TA||^2 from second moments
        gW = -XtX + XtX @ W + XtT @ A
        gA = -XtT.T + XtT.T @ W + TtT @ A
        R = X - X @ W - T @ A
        return 0.5 / n * float(np.sum(R * R)), gW, gA

    def h_and_grad(W):
        E = slin.expm(W * W)
        return float(np.trace(E) - m), E.T * W * 2.0

    rho, alpha, h = 1.0, 0.0, np.inf
    vec = np.zeros(2 * m * m + 2 * pm * m)
    banned = np.eye(m, dtype=bool)
    if forbidden_intra is not None:
        banned |= np.asarray(forbidden_intra, dtype=bool)
    diag_zero = [(0.0, 0.0) if banned[i, j] else (0.0, None) for i in range(m) for j in range(m)]
    bounds = diag_zero * 2 + [(0.0, None)] * (2 * pm * m)

    def augmented(v):
        W, A = _unpack(v, m, pm)
        loss, gW, gA = loss_and_grad(W, A)
        hv, gh = h_and_grad(W)
        obj = loss + 0.5 * rho * hv * hv + alpha * hv + lam_w * v[: 2 * m * m].sum() + lam_a * v[2 * m * m :].sum()
        gW = gW + (rho * hv + alpha) * gh
        grad = np.concatenate([(gW + lam_w).ravel(), (-gW + lam_w).ravel(), (gA + lam_a).ravel(), (-gA + lam_a).ravel()])
        return obj, grad

    iterations = 0
    for iterations in range(1, config.max_outer_iterations + 1):
        sol = None
        while rho < config.rho_max:
            sol = sopt.minimize(
                augmented, vec, jac=True, method="L-BFGS-B", bounds=bounds,
                options={"maxiter": config.inner_max_iter},
            )
            h_new, _ = h_and_grad(_unpack(sol.x, m, pm)[0])
            if h_new > 0.25 * h:
                rho *= 10.0
            else:
                break
        if sol is None:
            break
        vec = sol.x
        h = h_new
        alpha += rho * h
        if h <= config.acyclicity_tolerance or rho >= config.rho_max:
            break

    W, A = _unpack(vec, m, pm)
    converged = bool(h <= config.acyclicity_tolerance)
    W[np.abs(W) < config.edge_threshold] = 0.0
    A[np.abs(A) < config.edge_threshold] = 0.0
    np.fill_diagonal(W, 0.0)
    dropped = 0
    # the smooth constraint only reaches h ~ tol; remove weakest edges until exact DAG
    while not is_acyclic(W):
        nz = np.flatnonzero(W)
        W.flat[nz[np.argmin(np.abs(W.flat[nz]))]] = 0.0
        dropped += 1

    lags = [A[l * m : (l + 1) * m].copy() for l in range(p)]
    return CausalGraph(
        node_ids,
        W,
        lags,
        edge_threshold=config.edge_threshold,
        diagnostics={
            "h": float(h),
            "h_thresholded": acyclicity_value(W),
            "outer_iterations": iterations,
            "converged": converged,
            "rho": float(rho),
            "dropped_for_acyclicity": dropped,
        },
    )


def discover(
    window: np.ndarray,
    max_lag: int,
    config: Optional[DiscoveryConfig] = None,
    node_ids: Optional[Sequence[str]] = None,
) -> CausalGraph:
    """Stack lags of a k x M window and fit its causal graph."""
    X, T = stack_lags(window, max_lag)
    return fit(X, T, config, node_ids)
