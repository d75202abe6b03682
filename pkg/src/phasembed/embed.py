"""Non-parametric phase-space embeddings and patch tokenization.

Every embedding maps one channel of length ``T`` to a
:class:`~phasembed.core.Trajectory` of shape ``(dim, N)``:

========  =====================================  ==================
method    rows                                   N
========  =====================================  ==================
TD        x(t), x(t - tau), ..., x(t-(m-1)tau)   T - (m-1) tau
HD        x, dx/dt, ..., d^m x / dt^m            T - m delta
ID        integral of x, x, dx/dt                T - delta
PC        top-k principal components of TD(m,1)  T - (m-1)
========  =====================================  ==================

Tokens flatten a window of ``p`` columns dimension-major: the ``p``
samples of row 0, then row 1, and so on.
"""

from __future__ import annotations

from typing import List, Union

import numpy as np

from .core import (
    BadConfigError,
    PADDINGS,
    EmbeddingConfig,
    PhasembedError,
    TimeSeries,
    TokenMatrix,
    TooShortError,
    Trajectory,
    jacobi_eigh,
    validate_series,
)


class ChannelMismatchError(PhasembedError, ValueError):
    pass


def _as_channel(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise BadConfigError("expected a single channel (1-D array)")
    return x


def td_embed(x, m: int, tau: int) -> Trajectory:
    """Time-delay embedding. Row ``i`` of column ``j`` is ``x[j + (m-1-i)*tau]``."""
    x = _as_channel(x)
    if m < 1 or tau < 1:
        raise BadConfigError("m and tau must be >= 1")
    T = x.size
    span = (m - 1) * tau
    if T <= span:
        raise TooShortError(f"TD embedding needs T > (m-1)*tau, got T={T} <= {span}")
    N = T - span
    states = np.empty((m, N))
    for i in range(m):
        start = (m - 1 - i) * tau
        states[i] = x[start:start + N]
    return Trajectory(states, T, "TD", offset=span)


def hd_embed(x, m: int = 3, delta: int = 1, dt: float = 1.0) -> Trajectory:
    """Stack of repeated forward differences, ``m + 1`` rows."""
    x = _as_channel(x)
    if m < 1 or delta < 1:
        raise BadConfigError("m and delta must be >= 1")
    T = x.size
    if T <= m * delta:
        raise TooShortError(f"HD embedding needs T > m*delta, got T={T} <= {m * delta}")
    N = T - m * delta
    rows = [x]
    h = delta * dt
    for _ in range(m):
        prev = rows[-1]
        rows.append((prev[delta:] - prev[:-delta]) / h)
    states = np.vstack([r[:N] for r in rows])
    return Trajectory(states, T, "HD", offset=m * delta)


def id_embed(x, delta: int = 1, dt: float = 1.0) -> Trajectory:
    """Integral, value and first forward difference (3 rows).

    The integral is a left Riemann sum from the first sample,
    ``delta * dt * cumsum(x)``.
    """
    x = _as_channel(x)
    if delta < 1:
        raise BadConfigError("delta must be >= 1")
    T = x.size
    if T <= delta:
        raise TooShortError(f"ID embedding needs T > delta, got T={T} <= {delta}")
    N = T - delta
    h = delta * dt
    integral = h * np.cumsum(x)
    deriv = (x[delta:] - x[:-delta]) / h
    states = np.vstack([integral[:N], x[:N], deriv[:N]])
    return Trajectory(states, T, "ID", offset=delta)


def pc_embed(x, m: int, k: int = None) -> Trajectory:
    """Project the unit-delay embedding onto its top ``k`` covariance eigenvectors."""
    x = _as_channel(x)
    k = m if k is None else k
    if not 1 <= k <= m:
        raise BadConfigError(f"PC embedding needs 1 <= k <= m, got k={k}, m={m}")
    if x.size <= m:
        raise TooShortError(f"PC embedding needs T > m, got T={x.size} <= {m}")
    X = td_embed(x, m, 1).states
    centered = X - X.mean(axis=1, keepdims=True)
    C = centered @ centered.T / centered.shape[1]
    _, V = jacobi_eigh(C)
    states = V[:, :k].T @ centered
    return Trajectory(states, x.size, "PC", offset=m - 1)


def pad_amount(N: int, p: int, s: int) -> int:
    """Smallest ``q >= 0`` with ``N + q >= p`` and ``(N + q - p) % s == 0``."""
    if N < p:
        return p - N
    return (-(N - p)) % s


def pad_and_unfold(traj: Trajectory, p: int, s: int, padding: str = "left-zero") -> TokenMatrix:
    if p < 1 or not 1 <= s <= p:
        raise BadConfigError("need p >= 1 and 1 <= s <= p")
    if padding not in PADDINGS:
        raise BadConfigError(f"unknown padding {padding!r}")
    states = traj.states
    m, N = states.shape
    q = pad_amount(N, p, s)
    times = np.arange(N) + traj.offset
    if q:
        if padding in ("left-zero", "right-zero"):
            block = np.zeros((m, q))
        elif padding == "left-repeat":
            block = np.repeat(states[:, :1], q, axis=1)
        else:
            block = np.repeat(states[:, -1:], q, axis=1)
        if padding.startswith("left"):
            states = np.hstack([block, states])
            times = np.concatenate([np.full(q, times[0]), times])
        else:
            states = np.hstack([states, block])
            times = np.concatenate([times, np.full(q, times[-1])])
    L = states.shape[1]
    K = (L - p) // s + 1
    starts = np.arange(K) * s
    idx = starts[:, None] + np.arange(p)[None, :]
    # (K, m, p) -> (K, m*p), dimension-major
    tokens = states[:, idx].transpose(1, 0, 2).reshape(K, m * p)
    last = times[starts + p - 1]
    return TokenMatrix(np.ascontiguousarray(tokens), None, q, last)


def embed_channel(x, cfg: EmbeddingConfig, dt: float = 1.0) -> Trajectory:
    if cfg.method == "TD":
        return td_embed(x, cfg.m, cfg.tau)
    if cfg.method == "HD":
        return hd_embed(x, cfg.m, cfg.delta, dt)
    if cfg.method == "ID":
        return id_embed(x, cfg.delta, dt)
    if cfg.method == "PC":
        return pc_embed(x, cfg.m, cfg.k)
    raise BadConfigError(f"unknown method {cfg.method!r}")


def stack_trajectories(trajs: List[Trajectory]) -> Trajectory:
    """Concatenate per-channel trajectories along the state axis.

    Trajectories are aligned on their most recent states: each is truncated
    from the start to the shortest length.
    """
    n = min(len(t) for t in trajs)
    if n < 1:
        raise ChannelMismatchError("channel alignment left an empty trajectory")
    states = np.vstack([t.states[:, len(t) - n:] for t in trajs])
    ref = trajs[0]
    return Trajectory(states, ref.source_len, ref.method, offset=ref.offset + len(ref) - n)


def embed_series(ts: TimeSeries, cfg: EmbeddingConfig) -> Union[List[TokenMatrix], TokenMatrix]:
    """Embed and tokenize a multichannel series.

    Returns a list of per-channel token matrices under the CI strategy, or a
    single token matrix of the stacked ``C * dim`` trajectory under CD.
    """
    validate_series(ts)
    trajs = [embed_channel(ts.channel(i), cfg, ts.dt) for i in range(ts.n_channels)]
    if cfg.channel_strategy == "CI":
        out = []
        for tr in trajs:
            tm = pad_and_unfold(tr, cfg.patch_len, cfg.stride, cfg.padding)
            out.append(TokenMatrix(tm.tokens, cfg, tm.n_pad, tm.last_index))
        return out
    tm = pad_and_unfold(stack_trajectories(trajs), cfg.patch_len, cfg.stride, cfg.padding)
    return TokenMatrix(tm.tokens, cfg, tm.n_pad, tm.last_index)
