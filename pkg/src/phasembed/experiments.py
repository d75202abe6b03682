"""Desk-scale theory checks and downstream forecasting probes.

Theory side: similarity transforms preserve the characteristic polynomial,
the patch-averaged Jacobian, and Lyapunov exponents of linear flows as
log singular-value growth rates. Downstream side: a closed-form ridge
decoder over tokens, the persistence baseline, a frozen random-projection
stand-in for a learned embedding, and the dimension sweep built from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core import (
    BadConfigError,
    PhasembedError,
    SingularError,
    TokenMatrix,
    as_square,
    char_poly,
    expm,
    invert,
    jacobi_eigh,
    solve,
)
from .embed import pad_and_unfold, td_embed
from .synth import OdeSystem

SIMILARITY_TOL = 1e-8
DEFAULT_SPLIT = 0.7
DEFAULT_LAMBDA = 1e-3


class IllConditionedError(PhasembedError, ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# Theory
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimilarityCheck:
    passed: bool
    max_deviation: float
    poly_original: np.ndarray
    poly_transformed: np.ndarray


def coefficient_deviation(a, b) -> float:
    """Largest ``|a_i - b_i| / max(|b_i|, 1)`` over the coefficients."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0)))


def verify_similarity(J, W, tol: float = SIMILARITY_TOL) -> SimilarityCheck:
    """Check that ``W J W^-1`` has the characteristic polynomial of ``J``."""
    J = as_square(J)
    W = as_square(W)
    if J.shape != W.shape:
        raise BadConfigError(f"J and W shapes differ: {J.shape} vs {W.shape}")
    transformed = W @ J @ invert(W)
    p0 = char_poly(J)
    p1 = char_poly(transformed)
    dev = coefficient_deviation(p1, p0)
    return SimilarityCheck(dev < tol, dev, p0, p1)


def determinant(A) -> float:
    """Determinant from the constant term of the characteristic polynomial."""
    c = char_poly(A)
    n = c.size - 1
    return float((-1) ** n * c[-1])


def random_similarity_pairs(n_pairs: int, n: int = 4, seed: int = 0, min_det: float = 0.1):
    """Random ``(J, W)`` pairs with entries ``U(-1, 1)``; ``W`` redrawn while ``|det W| < min_det``."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < n_pairs:
        J = rng.uniform(-1.0, 1.0, (n, n))
        W = rng.uniform(-1.0, 1.0, (n, n))
        while abs(determinant(W)) < min_det:
            W = rng.uniform(-1.0, 1.0, (n, n))
        pairs.append((J, W))
    return pairs


def jacobian_average(sys: OdeSystem, states, t: float = 0.0) -> np.ndarray:
    """Mean Jacobian over a segment of states, shape ``(P, dim)``."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[1] != sys.dim and states.shape[0] == sys.dim:
        states = states.T
    if states.shape[0] < 1:
        raise BadConfigError("segment must contain at least one state")
    total = np.zeros((sys.dim, sys.dim))
    for s in states:
        total += np.asarray(sys.jacobian(s, t), dtype=float)
    return total / states.shape[0]


def verify_lyapunov_svd(A, t: float) -> np.ndarray:
    """Per-axis growth rates ``ln(sigma_i) / t`` of the linear flow ``exp(A t)``.

    Singular values come from the Jacobi eigenvalues of ``M^T M``. Returned in
    descending order.
    """
    A = as_square(A, max_dim=6)
    if not t > 0:
        raise BadConfigError("t must be positive")
    M = expm(A * t)
    w, _ = jacobi_eigh(M.T @ M)
    return 0.5 * np.log(w) / t


# ---------------------------------------------------------------------------
# Forecasting probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForecastResult:
    mse: float
    mae: float
    horizon: int
    n_test: int
    method_tag: str
    train_mse: float = float("nan")


@dataclass(frozen=True)
class DimSweepRow:
    dim: int
    test_mse: float
    train_mse: float


def chronological_split(n: int, split: float = DEFAULT_SPLIT) -> int:
    if not 0.0 < split < 1.0:
        raise BadConfigError("split must lie strictly between 0 and 1")
    n_train = int(round(split * n))
    if not 0 < n_train < n:
        raise BadConfigError(f"split {split} leaves an empty side for {n} samples")
    return n_train


def forecast_targets(series, last_index, horizon: int):
    """Targets ``series[t+1 : t+H+1]`` for each anchor ``t``; anchors without a full horizon are dropped.

    Returns the boolean keep-mask and the ``(K_kept, H)`` target matrix.
    """
    x = np.asarray(series, dtype=float)
    last = np.asarray(last_index, dtype=np.int64)
    keep = last + horizon < x.size
    idx = last[keep][:, None] + np.arange(1, horizon + 1)[None, :]
    return keep, x[idx]


def ridge_fit(X, Y, lambda_reg: float):
    """Ridge with an unpenalised intercept on standardised columns.

    Returns ``(coef, mean, std)`` so that predictions are
    ``[1, (X - mean) / std] @ coef``.
    """
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    Z = np.hstack([np.ones((X.shape[0], 1)), (X - mean) / std])
    penalty = np.full(Z.shape[1], float(lambda_reg))
    penalty[0] = 0.0
    G = Z.T @ Z + np.diag(penalty)
    try:
        coef = solve(G, Z.T @ Y)
    except SingularError as exc:
        raise IllConditionedError(f"normal equations are singular: {exc}") from None
    return coef, mean, std


def ridge_predict(X, coef, mean, std):
    Z = np.hstack([np.ones((X.shape[0], 1)), (X - mean) / std])
    return Z @ coef


def ridge_forecast(tokens, targets, lambda_reg: float = DEFAULT_LAMBDA,
                   split: float = DEFAULT_SPLIT, method_tag: str = "ridge") -> ForecastResult:
    """Closed-form ridge decoder from tokens to the next ``H`` values.

    The first ``split`` fraction of rows (in time order) trains; the rest
    tests. Column standardisation uses training statistics only.
    """
    X = tokens.tokens if isinstance(tokens, TokenMatrix) else np.asarray(tokens, dtype=float)
    Y = np.asarray(targets, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] != Y.shape[0]:
        raise BadConfigError(f"{X.shape[0]} token rows but {Y.shape[0]} target rows")
    if X.shape[0] < 20:
        raise BadConfigError(f"ridge_forecast needs K >= 20 tokens, got {X.shape[0]}")
    if lambda_reg < 0:
        raise BadConfigError("lambda_reg must be >= 0")
    n_train = chronological_split(X.shape[0], split)
    coef, mean, std = ridge_fit(X[:n_train], Y[:n_train], lambda_reg)
    train_err = ridge_predict(X[:n_train], coef, mean, std) - Y[:n_train]
    err = ridge_predict(X[n_train:], coef, mean, std) - Y[n_train:]
    return ForecastResult(float(np.mean(err ** 2)), float(np.mean(np.abs(err))), Y.shape[1],
                          int(err.shape[0]), method_tag, float(np.mean(train_err ** 2)))


def persistence_baseline(series, horizon: int, split: float = DEFAULT_SPLIT,
                         anchors: Optional[Sequence[int]] = None) -> ForecastResult:
    """Naive forecast ``y(t + h) = y(t)``.

    ``anchors`` are the forecast origins in time order (every admissible
    index by default); the last ``1 - split`` fraction of them is scored.
    """
    x = np.asarray(series, dtype=float).ravel()
    if horizon < 1:
        raise BadConfigError("horizon must be >= 1")
    if anchors is None:
        anchors = np.arange(x.size - horizon)
    keep, Y = forecast_targets(x, anchors, horizon)
    origin = np.asarray(anchors, dtype=np.int64)[keep]
    n_train = chronological_split(origin.size, split)
    err = Y[n_train:] - x[origin[n_train:]][:, None]
    train_err = Y[:n_train] - x[origin[:n_train]][:, None]
    return ForecastResult(float(np.mean(err ** 2)), float(np.mean(np.abs(err))), horizon,
                          int(err.shape[0]), "persistence", float(np.mean(train_err ** 2)))


def random_projection_surrogate(patches, d: int, seed: int = 0) -> np.ndarray:
    """Multiply patches ``(K, W)`` by a frozen ``W x d`` matrix with entries ``N(0, 1/d)``."""
    if d < 1:
        raise BadConfigError("d must be >= 1")
    X = np.asarray(patches, dtype=float)
    rng = np.random.default_rng(seed)
    G = rng.normal(0.0, 1.0 / math.sqrt(d), size=(X.shape[1], d))
    return X @ G


def raw_patches(series, patch_len: int = 16, stride: int = 8, padding: str = "left-zero") -> TokenMatrix:
    """Patches of the raw series (the unit trajectory, no embedding)."""
    return pad_and_unfold(td_embed(np.asarray(series, dtype=float), 1, 1), patch_len, stride, padding)


def token_forecast(series, tokens: TokenMatrix, horizon: int, lambda_reg: float = DEFAULT_LAMBDA,
                   split: float = DEFAULT_SPLIT, method_tag: str = "ridge"):
    """Ridge forecast of ``series`` from tokens plus the persistence baseline on the same anchors."""
    keep, Y = forecast_targets(series, tokens.last_index, horizon)
    X = tokens.tokens[keep]
    anchors = np.asarray(tokens.last_index)[keep]
    ridge = ridge_forecast(X, Y, lambda_reg, split, method_tag)
    base = persistence_baseline(series, horizon, split, anchors)
    return ridge, base


def dim_sweep(series, dims: Sequence[int], horizon: int, lambda_reg: float = DEFAULT_LAMBDA,
              seed: int = 0, patch_len: int = 16, stride: int = 8,
              split: float = DEFAULT_SPLIT) -> List[DimSweepRow]:
    """Ridge error of randomly projected raw patches across hidden widths.

    Produces the evidence table only; no shape is imposed on the curve.
    """
    dims = [int(d) for d in dims]
    if any(b <= a for a, b in zip(dims, dims[1:])):
        raise BadConfigError("dims must be strictly increasing")
    patches = raw_patches(series, patch_len, stride)
    keep, Y = forecast_targets(series, patches.last_index, horizon)
    X = patches.tokens[keep]
    rows = []
    for d in dims:
        res = ridge_forecast(random_projection_surrogate(X, d, seed), Y, lambda_reg, split,
                             f"rp{d}")
        rows.append(DimSweepRow(d, res.mse, res.train_mse))
    return rows
