"""Hyper-parameter estimation and dynamical diagnostics from data.

The quarter-period delay rule, the C-C dimension statistic, a
false-nearest-neighbour cross-check, the Rosenstein divergence estimate
of the largest Lyapunov exponent, histogram mutual information, and the
CI/CD channel-strategy recommendation built from the last two.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import PhasembedError, TimeSeries, TooShortError, validate_series

CC_RADII = (0.5, 1.0, 1.5, 2.0)
CC_CANDIDATES = tuple(range(2, 9))
CC_MAX_LEN = 4000
CC_NO_STRUCTURE = 0.02
LLE_MIN_LEN = 2000
LLE_FIT = (1.0, 3.0)  # divergence-curve fit window, in dominant periods
MI_BINS = 16
CD_MI_THRESHOLD = 0.5
CD_LLE_SPREAD = 0.3


class FlatSpectrumError(PhasembedError, ValueError):
    pass


class LengthMismatchError(PhasembedError, ValueError):
    pass


class NoNeighborsError(PhasembedError, ValueError):
    pass


class NoStructureWarning(UserWarning):
    """The C-C statistic is indistinguishable from that of i.i.d. noise."""


class NotConvergedWarning(UserWarning):
    pass


def _channel(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single channel (1-D array)")
    return x


# ---------------------------------------------------------------------------
# Delay selection
# ---------------------------------------------------------------------------


def power_spectrum(x) -> np.ndarray:
    """One-sided power of the mean-removed, Hann-windowed signal, bins ``0..T//2``."""
    x = _channel(x)
    T = x.size
    w = np.hanning(T)
    X = np.fft.rfft((x - x.mean()) * w)
    return (np.abs(X) / T) ** 2


def dominant_period(x, dt: float = 1.0) -> float:
    """Period in samples of the strongest non-DC spectral bin, ``T / argmax``.

    ``dt`` is accepted for interface symmetry; the result is always in samples.
    """
    x = _channel(x)
    T = x.size
    if T < 16:
        raise TooShortError(f"dominant_period needs T >= 16, got {T}")
    spec = power_spectrum(x)[1:T // 2 + 1]
    power = float(np.mean(x * x))
    peak = float(spec.max())
    if peak <= 1e-12 * power or peak == 0.0:
        raise FlatSpectrumError("spectrum is flat (constant input?)")
    return T / (int(np.argmax(spec)) + 1)


def select_tau(period_samples: float) -> int:
    """Quarter-period delay, rounded half-to-even and clamped to 1.

    Half-to-even maps a 50-sample period (quarter 12.5) to 12.
    """
    if not period_samples >= 1:
        raise ValueError("period must be >= 1 sample")
    return max(1, int(round(period_samples / 4.0)))


# ---------------------------------------------------------------------------
# Neighbour search
# ---------------------------------------------------------------------------


def delay_vectors(x, m: int, tau: int) -> np.ndarray:
    """Forward-ordered delay vectors ``(x[j], x[j+tau], ...)``, shape ``(N, m)``."""
    N = x.size - (m - 1) * tau
    if N < 1:
        raise TooShortError(f"cannot form delay vectors with m={m}, tau={tau} from {x.size} samples")
    idx = np.arange(N)[:, None] + tau * np.arange(m)[None, :]
    return x[idx]


def nearest_neighbors(points: np.ndarray, theiler: int, min_dist: float = -1.0):
    """Nearest neighbour of every point outside a temporal exclusion window.

    A neighbour ``j`` of ``i`` must satisfy ``|i - j| > theiler`` and have
    distance strictly greater than ``min_dist``. Points without any admissible
    neighbour get index ``-1`` and distance ``inf``.
    """
    n = points.shape[0]
    tree = cKDTree(points)
    nbr = np.full(n, -1, dtype=np.int64)
    dist = np.full(n, np.inf)
    todo = np.arange(n)
    k = min(n, 2 * theiler + 16)
    while todo.size:
        d, j = tree.query(points[todo], k=k)
        if k == 1:
            d, j = d[:, None], j[:, None]
        ok = (np.abs(j - todo[:, None]) > theiler) & (d > min_dist) & (j < n)
        hit = ok.any(axis=1)
        first = np.argmax(ok, axis=1)
        rows = todo[hit]
        nbr[rows] = j[hit, first[hit]]
        dist[rows] = d[hit, first[hit]]
        if k >= n:
            break
        todo = todo[~hit]
        k = min(n, 2 * k)
    return nbr, dist


# ---------------------------------------------------------------------------
# Embedding dimension
# ---------------------------------------------------------------------------


def fnn_fraction(x, m: int, tau: int, rtol: float = 15.0, atol: float = 2.0,
                 theiler: Optional[int] = None) -> float:
    """Fraction of false nearest neighbours when going from ``m`` to ``m + 1``."""
    x = _channel(x)
    theiler = tau if theiler is None else theiler
    ext = delay_vectors(x, m + 1, tau)
    pts = ext[:, :m]
    nbr, dist = nearest_neighbors(pts, theiler)
    valid = nbr >= 0
    if not valid.any():
        raise NoNeighborsError("no admissible neighbours for FNN")
    i = np.flatnonzero(valid)
    j = nbr[valid]
    r = dist[valid]
    extra = np.abs(ext[i, m] - ext[j, m])
    r_next = np.sqrt(r * r + extra * extra)
    ra = x.std()
    # distances at rounding level (exact recurrences) count as zero
    floor = 1e-9 * (ra if ra > 0 else 1.0)
    crit1 = extra > rtol * np.maximum(r, floor)
    crit2 = r_next / ra > atol if ra > 0 else np.zeros_like(crit1)
    return float(np.mean(crit1 | crit2))


def fnn_dimension(x, tau: int, m_max: int = 10, rtol: float = 15.0, atol: float = 2.0,
                  threshold: float = 0.01) -> int:
    """Smallest ``m`` whose false-nearest-neighbour fraction drops below ``threshold``."""
    x = _channel(x)
    if x.size < 500:
        raise TooShortError(f"fnn_dimension needs T >= 500, got {x.size}")
    for m in range(1, m_max + 1):
        if fnn_fraction(x, m, tau, rtol, atol) < threshold:
            return m
    warnings.warn(f"FNN fraction did not fall below {threshold} up to m={m_max}",
                  NotConvergedWarning, stacklevel=2)
    return m_max


@dataclass
class CCResult:
    m: int
    candidates: List[int]
    s_mean: List[float]
    delta_s: List[float]
    s_cor: List[float]
    no_structure: bool = False


def cc_statistics(x, tau: int, m_candidates: Sequence[int] = CC_CANDIDATES,
                  theiler: Optional[int] = None, max_len: int = CC_MAX_LEN) -> CCResult:
    """C-C statistics ``S(m, r, tau)`` averaged over the ``tau`` disjoint subseries.

    ``S = C(m, r) - C(1, r)**m`` with ``C`` the Chebyshev correlation sum over
    pairs more than ``theiler`` samples apart (default ``tau``), evaluated at
    radii ``(0.5, 1, 1.5, 2) * std(x)``. Only the leading ``max_len`` samples
    are used.
    """
    x = _channel(x)[:max_len]
    theiler = tau if theiler is None else theiler
    radii = np.array(CC_RADII) * x.std()
    cands = sorted(int(m) for m in m_candidates)
    mmax = cands[-1]
    # S[m_index, r_index] summed over subseries
    S = np.zeros((len(cands), radii.size))
    used = 0
    min_gap = theiler // tau + 1  # subseries index gap; one step is tau samples
    for s in range(tau):
        sub = x[s::tau]
        n = sub.size
        n_max = n - (mmax - 1)
        if n_max - min_gap < 2:
            continue
        D1 = np.abs(sub[:, None] - sub[None, :])
        Dm = D1[:n_max, :n_max].copy()
        mask = np.triu(np.ones((n_max, n_max), dtype=bool), k=min_gap)
        n_pairs = np.count_nonzero(mask)

        def corr_sum(D):
            return np.array([np.count_nonzero((D < r) & mask) for r in radii]) / n_pairs

        c1 = corr_sum(Dm)
        for dim in range(2, mmax + 1):
            np.maximum(Dm, D1[dim - 1:dim - 1 + n_max, dim - 1:dim - 1 + n_max], out=Dm)
            if dim in cands:
                S[cands.index(dim)] += corr_sum(Dm) - c1 ** dim
        used += 1
    if used == 0:
        raise TooShortError("series too short for C-C subseries")
    S /= used
    s_mean = S.mean(axis=1)
    delta = S.max(axis=1) - S.min(axis=1)
    s_cor = delta + np.abs(s_mean)
    best = s_cor.min()
    m = next(c for c, v in zip(cands, s_cor) if v <= 1.1 * best)
    no_structure = bool(np.max(np.abs(s_mean)) < CC_NO_STRUCTURE)
    if no_structure:
        m = mmax
    return CCResult(m, cands, s_mean.tolist(), delta.tolist(), s_cor.tolist(), no_structure)


def cc_method(x, tau: int, m_candidates: Sequence[int] = CC_CANDIDATES) -> int:
    """Embedding dimension from the C-C statistic.

    Returns the smallest candidate whose ``S_cor = dS + |mean S|`` lies
    within 10% of the minimum over candidates. When the statistic looks like
    i.i.d. noise the largest candidate is returned and a
    :class:`NoStructureWarning` is issued.
    """
    x = _channel(x)
    if x.size < 500:
        raise TooShortError(f"cc_method needs T >= 500, got {x.size}")
    res = cc_statistics(x, tau, m_candidates)
    if res.no_structure:
        warnings.warn("C-C statistic shows no deterministic structure", NoStructureWarning,
                      stacklevel=2)
    return res.m


# ---------------------------------------------------------------------------
# Information and divergence
# ---------------------------------------------------------------------------


def _edges(v, bins):
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, bins + 1)


def mutual_information(x, y, bins: int = MI_BINS) -> float:
    """Plug-in mutual information in bits on an equi-width ``bins x bins`` grid."""
    x, y = _channel(x), _channel(y)
    if x.size != y.size:
        raise LengthMismatchError(f"lengths differ: {x.size} vs {y.size}")
    if x.size < 100:
        raise TooShortError(f"mutual_information needs T >= 100, got {x.size}")
    joint, _, _ = np.histogram2d(x, y, bins=[_edges(x, bins), _edges(y, bins)])
    pxy = joint / joint.sum()
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    nz = pxy > 0
    outer = np.outer(px, py)
    return float(np.sum(pxy[nz] * np.log2(pxy[nz] / outer[nz])))


def entropy(x, bins: int = MI_BINS) -> float:
    x = _channel(x)
    counts, _ = np.histogram(x, bins=_edges(x, bins))
    p = counts[counts > 0] / x.size
    return float(-np.sum(p * np.log2(p)))


def divergence_curve(x, tau: int, m: int, theiler: int, max_steps: int):
    """Mean log nearest-neighbour separation after ``k = 0..max_steps`` steps."""
    x = _channel(x)
    pts = delay_vectors(x, m, tau)
    n = pts.shape[0]
    scale = float(np.max(np.abs(pts))) or 1.0
    nbr, _ = nearest_neighbors(pts, theiler, min_dist=1e-12 * scale)
    i0 = np.flatnonzero(nbr >= 0)
    if i0.size == 0:
        raise NoNeighborsError("no admissible neighbours outside the Theiler window")
    j0 = nbr[i0]
    curve = np.full(max_steps + 1, np.nan)
    for k in range(max_steps + 1):
        ok = (i0 + k < n) & (j0 + k < n)
        if not ok.any():
            break
        d = np.linalg.norm(pts[i0[ok] + k] - pts[j0[ok] + k], axis=1)
        d = d[d > 0]
        if d.size:
            curve[k] = np.mean(np.log(d))
    return curve


def rosenstein_lle(x, tau: int, m: int, dt: float = 1.0, theiler: Optional[int] = None,
                   fit_range: Optional[Sequence[float]] = None) -> float:
    """Largest Lyapunov exponent (per unit time) by the Rosenstein method.

    Parameters
    ----------
    x : array_like
        Single channel, at least 2000 samples.
    tau, m : int
        Delay embedding parameters.
    theiler : int, optional
        Minimum temporal separation of neighbours; the dominant period by
        default.
    fit_range : (float, float), optional
        Step range of the divergence curve used for the least-squares slope,
        ``(1, 3) * dominant period`` by default. The first period is skipped:
        separations there grow faster than the asymptotic rate while they
        rotate onto the unstable direction.
    """
    x = _channel(x)
    if x.size < LLE_MIN_LEN:
        raise TooShortError(f"rosenstein_lle needs T >= {LLE_MIN_LEN}, got {x.size}")
    if theiler is None or fit_range is None:
        period = dominant_period(x, dt)
        if theiler is None:
            theiler = int(round(period))
        if fit_range is None:
            fit_range = (LLE_FIT[0] * period, LLE_FIT[1] * period)
    k0 = int(math.floor(fit_range[0]))
    k1 = max(int(math.floor(fit_range[1])), k0 + 1)
    curve = divergence_curve(x, tau, m, theiler, k1)
    ks = np.arange(k0, k1 + 1)
    ys = curve[k0:k1 + 1]
    good = np.isfinite(ys)
    if good.sum() < 2:
        raise NoNeighborsError("divergence curve has fewer than two finite points")
    slope = np.polyfit(ks[good], ys[good], 1)[0]
    return float(slope / dt)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class ChannelDiagnostics:
    name: str
    dominant_period: Optional[float] = None
    tau: Optional[int] = None
    m_cc: Optional[int] = None
    lle: Optional[float] = None
    warnings: List[str] = field(default_factory=list)


@dataclass
class DynamicsReport:
    channels: List[ChannelDiagnostics]
    mi_matrix: np.ndarray
    strategy: str
    rationale: str

    def to_dict(self) -> dict:
        return {
            "version": "1",
            "channels": [asdict(c) for c in self.channels],
            "mi_matrix": [[float(v) for v in row] for row in self.mi_matrix],
            "strategy": self.strategy,
            "rationale": self.rationale,
        }


def mi_matrix(ts: TimeSeries, bins: int = MI_BINS) -> np.ndarray:
    C = ts.n_channels
    M = np.zeros((C, C))
    for i in range(C):
        for j in range(i, C):
            M[i, j] = M[j, i] = mutual_information(ts.channel(i), ts.channel(j), bins)
    return M


def _diagnose_channel(name, x, dt) -> ChannelDiagnostics:
    diag = ChannelDiagnostics(name)
    try:
        period = dominant_period(x, dt)
    except PhasembedError as exc:
        diag.warnings.append(f"dominant_period: {exc}")
        return diag
    diag.dominant_period = float(period)
    diag.tau = select_tau(period)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            diag.m_cc = cc_method(x, diag.tau)
        diag.warnings.extend(f"cc_method: {w.message}" for w in caught)
    except PhasembedError as exc:
        diag.warnings.append(f"cc_method: {exc}")
    m = diag.m_cc if diag.m_cc is not None else 3
    try:
        diag.lle = rosenstein_lle(x, diag.tau, m, dt, theiler=int(round(period)),
                                  fit_range=(LLE_FIT[0] * period, LLE_FIT[1] * period))
    except PhasembedError as exc:
        diag.warnings.append(f"rosenstein_lle: {exc}")
    return diag


def recommend_strategy(mi: np.ndarray, lles: Sequence[Optional[float]],
                       mi_threshold: float = CD_MI_THRESHOLD,
                       lle_spread: float = CD_LLE_SPREAD):
    """CI/CD decision from normalised mutual information and LLE spread.

    CD is chosen iff ``max offdiag MI / min diag MI > mi_threshold`` and
    ``(max LLE - min LLE) / max(max|LLE|, 0.1) < lle_spread``. Missing LLEs
    make the second condition fail.
    """
    C = mi.shape[0]
    if C < 2:
        return "CI", "single channel: channel-independent by construction"
    off = mi[~np.eye(C, dtype=bool)]
    diag_min = float(np.min(np.diag(mi)))
    mi_ratio = float(off.max() / diag_min) if diag_min > 0 else 0.0
    if any(v is None for v in lles):
        spread = None
    else:
        vals = np.asarray(lles, dtype=float)
        spread = float((vals.max() - vals.min()) / max(np.max(np.abs(vals)), 0.1))
    cd = mi_ratio > mi_threshold and spread is not None and spread < lle_spread
    spread_txt = "n/a (missing LLE)" if spread is None else f"{spread:.4f}"
    rationale = (f"normalized MI = {mi_ratio:.4f} (threshold > {mi_threshold}); "
                 f"LLE spread = {spread_txt} (threshold < {lle_spread})")
    return ("CD" if cd else "CI"), rationale


def analyze(ts: TimeSeries, mi_threshold: float = CD_MI_THRESHOLD,
            lle_spread: float = CD_LLE_SPREAD, bins: int = MI_BINS) -> DynamicsReport:
    """Per-channel diagnostics plus the CI/CD recommendation.

    Failures inside one channel are recorded as that channel's warnings; the
    report is always produced.
    """
    validate_series(ts)
    channels = [_diagnose_channel(name, ts.channel(i), ts.dt) for i, name in enumerate(ts.names)]
    if len(ts) >= 100:
        mi = mi_matrix(ts, bins)
    else:
        mi = np.zeros((ts.n_channels, ts.n_channels))
        for c in channels:
            c.warnings.append("mutual_information: series shorter than 100 samples")
    strategy, rationale = recommend_strategy(mi, [c.lle for c in channels], mi_threshold, lle_spread)
    return DynamicsReport(channels, mi, strategy, rationale)
