"""Domain types, validation and small dense linear algebra.

The matrix routines here are deliberately hand-written and capped at
``MAX_DIM`` so their numerical behaviour is fully specified: the theory
checks in :mod:`phasembed.experiments` compare their outputs at tight,
fixed tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

MAX_DIM = 12

METHODS = ("TD", "HD", "ID", "PC")
PADDINGS = ("left-zero", "right-zero", "left-repeat", "right-repeat")
STRATEGIES = ("CI", "CD")


class PhasembedError(Exception):
    """Base class for all library errors."""


class NonFiniteError(PhasembedError, ValueError):
    pass


class TooShortError(PhasembedError, ValueError):
    pass


class BadDtError(PhasembedError, ValueError):
    pass


class BadConfigError(PhasembedError, ValueError):
    pass


class SingularError(PhasembedError, ArithmeticError):
    pass


class NotSymmetricError(PhasembedError, ValueError):
    pass


class SizeCapError(PhasembedError, ValueError):
    pass


class DivergedError(PhasembedError, ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled multichannel signal, shape ``(C, T)``."""

    values: np.ndarray
    dt: float = 1.0
    channel_names: Optional[Sequence[str]] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[None, :]
        object.__setattr__(self, "values", vals)
        if self.channel_names is not None:
            object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> tuple:
        if self.channel_names is not None:
            return tuple(self.channel_names)
        return tuple(f"ch{i}" for i in range(self.n_channels))

    def channel(self, i: int) -> np.ndarray:
        return self.values[i]


@dataclass(frozen=True)
class Trajectory:
    """Reconstructed state sequence, shape ``(m, N)``.

    ``offset`` is the source index of the latest raw sample that column 0
    depends on; column ``j`` depends on samples up to ``j + offset``.
    """

    states: np.ndarray
    source_len: int
    method: str
    offset: int = 0

    @property
    def m(self) -> int:
        return self.states.shape[0]

    def __len__(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class EmbeddingConfig:
    method: str = "TD"
    m: int = 3
    tau: int = 1
    delta: int = 1
    k: Optional[int] = None
    patch_len: int = 16
    stride: int = 8
    padding: str = "left-zero"
    channel_strategy: str = "CI"

    def __post_init__(self):
        method = self.method.upper()
        object.__setattr__(self, "method", method)
        object.__setattr__(self, "channel_strategy", self.channel_strategy.upper())
        if method not in METHODS:
            raise BadConfigError(f"unknown method {self.method!r}")
        if self.padding not in PADDINGS:
            raise BadConfigError(f"unknown padding {self.padding!r}")
        if self.channel_strategy not in STRATEGIES:
            raise BadConfigError(f"unknown channel strategy {self.channel_strategy!r}")
        for name in ("m", "tau", "delta", "patch_len", "stride"):
            if int(getattr(self, name)) < 1:
                raise BadConfigError(f"{name} must be >= 1")
        if self.stride > self.patch_len:
            raise BadConfigError("stride must not exceed patch_len")
        if method == "PC":
            k = self.m if self.k is None else self.k
            if not 1 <= k <= self.m:
                raise BadConfigError("PC requires 1 <= k <= m")

    @property
    def effective_dim(self) -> int:
        """Rows per channel of the trajectory this config produces."""
        if self.method == "ID":
            return 3
        if self.method == "HD":
            return self.m + 1
        if self.method == "PC":
            return self.m if self.k is None else self.k
        return self.m


@dataclass(frozen=True)
class TokenMatrix:
    tokens: np.ndarray
    origin: Optional[EmbeddingConfig] = None
    n_pad: int = 0
    # source index of the latest raw sample each token depends on
    last_index: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def shape(self):
        return self.tokens.shape


def validate_series(ts: TimeSeries) -> TimeSeries:
    """Return ``ts`` unchanged if it satisfies the TimeSeries invariants."""
    vals = ts.values
    if vals.ndim != 2 or vals.shape[0] < 1:
        raise BadConfigError("values must have shape (C, T) with C >= 1")
    if vals.shape[1] < 2:
        raise TooShortError(f"series needs T >= 2 samples, got {vals.shape[1]}")
    if not np.all(np.isfinite(vals)):
        raise NonFiniteError("series contains NaN or Inf")
    if not (math.isfinite(ts.dt) and ts.dt > 0):
        raise BadDtError(f"dt must be positive and finite, got {ts.dt}")
    if ts.channel_names is not None and len(ts.channel_names) != vals.shape[0]:
        raise BadConfigError("channel_names length does not match channel count")
    return ts


# ---------------------------------------------------------------------------
# Small dense linear algebra
# ---------------------------------------------------------------------------


def as_square(A, max_dim: int = MAX_DIM) -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise BadConfigError(f"expected a non-empty square matrix, got shape {A.shape}")
    if A.shape[0] > max_dim:
        raise SizeCapError(f"matrix size {A.shape[0]} exceeds cap {max_dim}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteError("matrix contains NaN or Inf")
    return A


def char_poly(A) -> np.ndarray:
    """Coefficients of ``det(lambda*I - A)``, highest power first.

    Faddeev-LeVerrier recurrence; the leading coefficient is exactly 1.
    """
    A = as_square(A)
    n = A.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    M = np.zeros_like(A)
    eye = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs


def invert(A) -> np.ndarray:
    """Inverse by Gauss-Jordan elimination with partial pivoting."""
    A = as_square(A)
    n = A.shape[0]
    scale = np.max(np.abs(A))
    if scale == 0.0:
        raise SingularError("zero matrix is singular")
    aug = np.hstack([A / scale, np.eye(n)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < 1e-12:
            raise SingularError(f"pivot {aug[piv, col]:.3e} in column {col}")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col and aug[row, col] != 0.0:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:] / scale


def solve(A, b) -> np.ndarray:
    """Solve ``A x = b`` via :func:`invert`-style elimination without the size cap."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    n = A.shape[0]
    vec = b.ndim == 1
    B = b[:, None] if vec else b
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        raise SingularError("zero matrix is singular")
    aug = np.hstack([A / scale, B / scale])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < 1e-12:
            raise SingularError(f"pivot {aug[piv, col]:.3e} in column {col}")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        below = aug[col + 1:, col:col + 1]
        aug[col + 1:] -= below * aug[col]
    X = aug[:, n:]
    for col in range(n - 1, -1, -1):
        X[:col] -= aug[:col, col:col + 1] * X[col]
    return X[:, 0] if vec else X


def jacobi_eigh(S):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues in non-increasing order.
    V : ndarray, shape (n, n)
        Orthonormal eigenvectors as columns, ``S @ V[:, i] == w[i] * V[:, i]``.
    """
    S = as_square(S)
    n = S.shape[0]
    smax = np.max(np.abs(S))
    if np.max(np.abs(S - S.T)) > 1e-9 * smax:
        raise NotSymmetricError("matrix is not symmetric")
    A = 0.5 * (S + S.T)
    V = np.eye(n)
    norm = np.linalg.norm(A)
    tol = 1e-11 * norm

    def off(M):
        return math.sqrt(max(np.sum(M * M) - np.sum(np.diag(M) ** 2), 0.0))

    for _ in range(100):
        if off(A) <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                gap = A[q, q] - A[p, p]
                if abs(apq) < 1e-150 * max(abs(gap), 1e-300):
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = gap / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
    w = np.diag(A).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


def expm(A, order: int = 12) -> np.ndarray:
    """Matrix exponential by truncated Taylor series plus scaling and squaring.

    The number of squarings ``s`` is the smallest with ``||A|| / 2**s < 0.5``
    (Frobenius norm).
    """
    A = as_square(A)
    norm = np.linalg.norm(A)
    s = 0
    while norm / 2.0 ** s >= 0.5:
        s += 1
    B = A / 2.0 ** s
    n = A.shape[0]
    term = np.eye(n)
    out = np.eye(n)
    for k in range(1, order + 1):
        term = term @ B / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out
