"""Ground-truth dynamical systems: integrators, generators and a Jacobian LLE oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import BadConfigError, DivergedError, TimeSeries

DIVERGENCE_BOUND = 1e8
TRANSIENT_STEPS = 1000
MG_STEP = 0.1


@dataclass(frozen=True)
class OdeSystem:
    """Autonomous or time-dependent ODE ``dx/dt = f(x, t)`` with its exact Jacobian."""

    dim: int
    vector_field: Callable[[np.ndarray, float], np.ndarray]
    jacobian: Callable[[np.ndarray, float], np.ndarray]
    name: str = "ode"
    channel_names: Optional[tuple] = None


def linear_system(A, name: str = "linear") -> OdeSystem:
    A = np.array(A, dtype=float)
    return OdeSystem(A.shape[0], lambda x, t: A @ x, lambda x, t: A, name)


def lorenz_system(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0) -> OdeSystem:
    def f(s, t):
        x, y, z = s
        return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])

    def jac(s, t):
        x, y, z = s
        return np.array([[-sigma, sigma, 0.0], [rho - z, -1.0, -x], [y, x, -beta]])

    return OdeSystem(3, f, jac, "lorenz", ("x", "y", "z"))


def rossler_system(a: float = 0.2, b: float = 0.2, c: float = 5.7) -> OdeSystem:
    def f(s, t):
        x, y, z = s
        return np.array([-y - z, x + a * y, b + z * (x - c)])

    def jac(s, t):
        x, y, z = s
        return np.array([[0.0, -1.0, -1.0], [1.0, a, 0.0], [z, 0.0, x - c]])

    return OdeSystem(3, f, jac, "rossler", ("x", "y", "z"))


def harmonic_oscillator(omega: float = 1.0) -> OdeSystem:
    return linear_system([[0.0, 1.0], [-omega * omega, 0.0]], name="harmonic")


def _rk4_step(f, x, t, h):
    k1 = f(x, t)
    k2 = f(x + 0.5 * h * k1, t + 0.5 * h)
    k3 = f(x + 0.5 * h * k2, t + 0.5 * h)
    k4 = f(x + h * k3, t + h)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_bounded(x, step):
    if not np.all(np.abs(x) <= DIVERGENCE_BOUND):
        raise DivergedError(f"state left |x| <= {DIVERGENCE_BOUND:g} at step {step}")


def rk4_integrate(sys: OdeSystem, x0, dt: float, n_steps: int, t0: float = 0.0) -> TimeSeries:
    """Classical fixed-step RK4. Returns ``n_steps + 1`` samples starting at ``x0``."""
    if not dt > 0:
        raise BadConfigError("dt must be positive")
    if n_steps < 1:
        raise BadConfigError("n_steps must be >= 1")
    x = np.array(x0, dtype=float).reshape(sys.dim)
    if not np.all(np.isfinite(x)):
        raise BadConfigError("x0 must be finite")
    out = np.empty((sys.dim, n_steps + 1))
    out[:, 0] = x
    f = sys.vector_field
    for i in range(n_steps):
        x = _rk4_step(f, x, t0 + i * dt, dt)
        _check_bounded(x, i + 1)
        out[:, i + 1] = x
    return TimeSeries(out, dt, sys.channel_names)


def make_sine(omega: float = 1.0, amplitude: float = 1.0, phase: float = 0.0,
              dt: float = 1.0, T: int = 1000) -> TimeSeries:
    if not omega > 0:
        raise BadConfigError("omega must be positive")
    t = np.arange(T) * dt
    return TimeSeries(amplitude * np.sin(omega * t + phase), dt, ("x",))


def _perturbed_start(base, seed):
    base = np.asarray(base, dtype=float)
    if seed is None:
        return base
    rng = np.random.default_rng(seed)
    return base + 1e-3 * rng.standard_normal(base.shape)


def _generate(sys, x0, dt, T):
    # one integration pass covering the discarded transient
    full = rk4_integrate(sys, x0, dt, TRANSIENT_STEPS + T - 1)
    return TimeSeries(full.values[:, TRANSIENT_STEPS:].copy(), dt, sys.channel_names)


def make_lorenz(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0,
                dt: float = 0.01, T: int = 10000, seed: Optional[int] = 0) -> TimeSeries:
    """Lorenz-63 sampled every ``dt`` after a 1000-step transient."""
    return _generate(lorenz_system(sigma, rho, beta), _perturbed_start([1.0, 1.0, 1.0], seed), dt, T)


def make_rossler(a: float = 0.2, b: float = 0.2, c: float = 5.7,
                 dt: float = 0.05, T: int = 10000, seed: Optional[int] = 0) -> TimeSeries:
    return _generate(rossler_system(a, b, c), _perturbed_start([1.0, 1.0, 0.0], seed), dt, T)


def make_mackey_glass(tau_mg: float = 17.0, beta: float = 0.2, gamma: float = 0.1,
                      n: float = 10.0, dt: float = 1.0, T: int = 5000,
                      seed: Optional[int] = 0, x0: float = 1.2) -> TimeSeries:
    """Mackey-Glass delay equation.

    Integrated by RK4 at a fixed internal step of 0.1 with the delayed state
    held in a ring buffer of ``round(tau_mg / 0.1)`` entries; the half-step
    delayed value is the mean of the two neighbouring buffer entries.
    ``dt`` must be a positive multiple of 0.1. The first 1000 output samples
    are discarded.
    """
    sub = int(round(dt / MG_STEP))
    if sub < 1 or abs(sub * MG_STEP - dt) > 1e-9 * max(dt, 1.0):
        raise BadConfigError(f"Mackey-Glass dt must be a multiple of {MG_STEP}")
    lag = int(round(tau_mg / MG_STEP))
    if lag < 1:
        raise BadConfigError("tau_mg must be at least one internal step")
    h = MG_STEP
    start = float(_perturbed_start([x0], seed)[0])
    hist = np.full(lag + 1, start)  # hist[i % (lag+1)]: state at internal step i - lag ... i
    x = start

    def f(xv, xd):
        return beta * xd / (1.0 + xd ** n) - gamma * xv

    n_out = TRANSIENT_STEPS + T
    out = np.empty(n_out)
    step = 0
    size = lag + 1
    for k in range(n_out):
        for _ in range(sub):
            d0 = hist[(step - lag) % size] if step >= lag else start
            d1 = hist[(step - lag + 1) % size] if step + 1 >= lag else start
            dm = 0.5 * (d0 + d1)
            k1 = f(x, d0)
            k2 = f(x + 0.5 * h * k1, dm)
            k3 = f(x + 0.5 * h * k2, dm)
            k4 = f(x + h * k3, d1)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            step += 1
            hist[step % size] = x
            if not abs(x) <= DIVERGENCE_BOUND:
                raise DivergedError(f"Mackey-Glass diverged at internal step {step}")
        out[k] = x
    return TimeSeries(out[TRANSIENT_STEPS:].copy(), dt, ("x",))


def benettin_lle(sys: OdeSystem, x0, dt: float, n_steps: int) -> float:
    """Largest Lyapunov exponent from the variational equation.

    A tangent vector is advanced with ``dv/dt = J(x) v`` inside the same RK4
    step as the state and renormalised after every step.
    """
    if n_steps < 1000:
        raise BadConfigError("benettin_lle needs n_steps >= 1000")
    f, jac = sys.vector_field, sys.jacobian
    d = sys.dim

    def aug(u, t):
        x, v = u[:d], u[d:]
        return np.concatenate([f(x, t), jac(x, t) @ v])

    v0 = np.ones(d) / math.sqrt(d)
    u = np.concatenate([np.asarray(x0, dtype=float).reshape(d), v0])
    total = 0.0
    for i in range(n_steps):
        u = _rk4_step(aug, u, i * dt, dt)
        _check_bounded(u[:d], i + 1)
        norm = math.sqrt(float(u[d:] @ u[d:]))
        total += math.log(norm)
        u[d:] /= norm
    return total / (n_steps * dt)


def add_noise(ts: TimeSeries, snr_db: float, seed: Optional[int] = 0) -> TimeSeries:
    """Additive white Gaussian noise at a per-channel SNR in dB.

    Signal power is the channel variance. ``snr_db = inf`` returns the input
    unchanged; a zero-variance channel receives unit-variance noise.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return ts
    if not math.isfinite(snr_db):
        raise BadConfigError("snr_db must be finite or +inf")
    rng = np.random.default_rng(seed)
    vals = ts.values
    power = vals.var(axis=1)
    noise_var = np.where(power > 0, power / 10.0 ** (snr_db / 10.0), 1.0)
    noise = rng.standard_normal(vals.shape) * np.sqrt(noise_var)[:, None]
    return TimeSeries(vals + noise, ts.dt, ts.channel_names)
