"""Reference fixtures and the golden-number file (plain ``key=value`` lines)."""

from __future__ import annotations

from pathlib import Path
from typing import Dict


from .core import TimeSeries
from .dynamics import analyze, dominant_period, rosenstein_lle, select_tau
from .embed import pad_and_unfold, td_embed
from .experiments import token_forecast
from .synth import benettin_lle, lorenz_system, make_lorenz

LORENZ_DT = 0.01
LORENZ_LONG_T = 50000
LORENZ_BENCH_T = 5000
BENETTIN_STEPS = 100000
BENCH_HORIZON = 5
BENCH_LAMBDA = 1e-3
SEED = 0


def lorenz_oscillation_period(ts: TimeSeries) -> float:
    """Dominant period of the z channel, which carries the lobe oscillation.

    The x channel's periodogram is dominated by low-frequency lobe switching,
    so its own argmax is not a usable time scale.
    """
    return dominant_period(ts.channel(2), ts.dt)


def lorenz_lle_goldens() -> Dict[str, float]:
    ts = make_lorenz(dt=LORENZ_DT, T=LORENZ_LONG_T, seed=SEED)
    period = lorenz_oscillation_period(ts)
    tau = select_tau(period)
    ros = rosenstein_lle(ts.channel(0), tau, 3, LORENZ_DT, theiler=int(round(period)),
                         fit_range=(period, 3 * period))
    ben = benettin_lle(lorenz_system(), ts.values[:, 0], LORENZ_DT, BENETTIN_STEPS)
    return {"lorenz_oscillation_period": period, "lorenz_tau": float(tau),
            "lorenz_rosenstein_lle": ros, "lorenz_benettin_lle": ben}


def lorenz_forecast_goldens() -> Dict[str, float]:
    """TD embedding with automatically chosen ``(m, tau)`` vs persistence at H=5."""
    ts = make_lorenz(dt=LORENZ_DT, T=LORENZ_BENCH_T, seed=SEED)
    x = ts.channel(0)
    diag = analyze(TimeSeries(x[None, :], ts.dt, ["x"])).channels[0]
    tm = pad_and_unfold(td_embed(x, diag.m_cc, diag.tau), 16, 8)
    ridge, base = token_forecast(x, tm, BENCH_HORIZON, BENCH_LAMBDA)
    return {"bench_m": float(diag.m_cc), "bench_tau": float(diag.tau),
            "bench_ridge_mse": ridge.mse, "bench_persistence_mse": base.mse,
            "bench_ratio": ridge.mse / base.mse}


def compute_goldens() -> Dict[str, float]:
    out = {}
    out.update(lorenz_lle_goldens())
    out.update(lorenz_forecast_goldens())
    return out


def format_goldens(values: Dict[str, float]) -> str:
    return "".join(f"{k}={float(v)!r}\n" for k, v in values.items())


def read_goldens(path) -> Dict[str, float]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = float(value)
    return out
