import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from oracles import autocorrelation, finite_difference_jacobian, quadratic_roots_max_real
from phasembed.core import BadConfigError, DivergedError, TimeSeries, char_poly
from phasembed.synth import (
    add_noise,
    benettin_lle,
    harmonic_oscillator,
    linear_system,
    lorenz_system,
    make_lorenz,
    make_mackey_glass,
    make_rossler,
    make_sine,
    rk4_integrate,
    rossler_system,
)


class TestRk4:
    def test_exponential_decay(self):
        ts = rk4_integrate(linear_system([[-1.0]]), [1.0], 0.1, 10)
        assert len(ts) == 11
        assert ts.values[0, 0] == 1.0
        assert abs(ts.values[0, -1] - math.exp(-1)) < 1e-6

    def test_fourth_order_convergence(self):
        sys = linear_system([[-1.0]])
        e1 = abs(rk4_integrate(sys, [1.0], 0.1, 10).values[0, -1] - math.exp(-1))
        e2 = abs(rk4_integrate(sys, [1.0], 0.05, 20).values[0, -1] - math.exp(-1))
        assert 12 <= e1 / e2 <= 20

    def test_harmonic_energy(self):
        ts = rk4_integrate(harmonic_oscillator(), [1.0, 0.0], 0.01, 1000)
        energy = 0.5 * (ts.values[0] ** 2 + ts.values[1] ** 2)
        assert np.max(np.abs(energy - 0.5)) < 1e-6

    def test_lorenz_bounded(self):
        ts = rk4_integrate(lorenz_system(), [1.0, 1.0, 1.0], 0.01, 10000)
        assert np.max(np.abs(ts.values)) < 60

    def test_diverged(self):
        with pytest.raises(DivergedError):
            rk4_integrate(linear_system([[5.0]]), [1.0], 0.1, 1000)

    def test_bad_inputs(self):
        with pytest.raises(BadConfigError):
            rk4_integrate(linear_system([[1.0]]), [1.0], 0.0, 10)
        with pytest.raises(BadConfigError):
            rk4_integrate(linear_system([[1.0]]), [np.nan], 0.1, 10)


@pytest.mark.parametrize("system", [lorenz_system(), rossler_system()], ids=["lorenz", "rossler"])
def test_jacobian_matches_finite_differences(system):
    rng = np.random.default_rng(3)
    for _ in range(10):
        x = rng.uniform(-10, 10, system.dim)
        J = system.jacobian(x, 0.0)
        ref = finite_difference_jacobian(system.vector_field, x)
        assert np.max(np.abs(J - ref)) < 1e-5


class TestGenerators:
    def test_sine_samples(self):
        ts = make_sine(1.0, 1.0, 0.0, math.pi / 100, 400)
        assert ts.values[0, 0] == 0.0
        assert abs(ts.values[0, 50] - 1.0) < 1e-12

    def test_zero_amplitude(self):
        assert np.all(make_sine(amplitude=0.0).values == 0.0)

    def test_period_fifty(self):
        x = make_sine(2 * math.pi / 50, dt=1.0, T=200).values[0]
        np.testing.assert_allclose(x[:150], x[50:], atol=1e-12)

    def test_bad_omega(self):
        with pytest.raises(BadConfigError):
            make_sine(omega=0.0)

    @pytest.mark.parametrize("gen", [
        lambda s: make_lorenz(T=500, seed=s),
        lambda s: make_rossler(T=500, seed=s),
        lambda s: make_mackey_glass(T=300, seed=s),
    ], ids=["lorenz", "rossler", "mackey_glass"])
    def test_deterministic(self, gen):
        a, b = gen(4), gen(4)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, gen(5).values)

    def test_lorenz_channels(self):
        assert list(make_lorenz(T=10, seed=7).names) == ["x", "y", "z"]

    def test_lorenz_z_mean_matches_reference(self, lorenz_long):
        # attractor average of z, not the fixed-point value rho - 1
        x0 = make_lorenz(T=1, seed=0).values[:, 0]
        f = lorenz_system().vector_field
        t_eval = np.arange(50000) * 0.01
        ref = solve_ivp(lambda t, y: f(y, t), (0, t_eval[-1]), x0, method="DOP853",
                        t_eval=t_eval, rtol=1e-10, atol=1e-10)
        assert abs(lorenz_long.values[2].mean() - ref.y[2].mean()) < 0.5

    def test_mackey_glass_not_periodic(self):
        x = make_mackey_glass(T=5000, dt=1.0).values[0]
        assert max(autocorrelation(x, lag) for lag in range(1, 501)) < 0.999

    def test_mackey_glass_bad_dt(self):
        with pytest.raises(BadConfigError):
            make_mackey_glass(dt=0.25, T=10)


class TestBenettin:
    def test_linear_growth(self):
        assert abs(benettin_lle(linear_system([[0.5]]), [1.0], 0.01, 1000) - 0.5) < 1e-3

    def test_harmonic_neutral(self):
        assert abs(benettin_lle(harmonic_oscillator(), [1.0, 0.0], 0.01, 10000)) < 1e-2

    @pytest.mark.parametrize("A", [
        [[-1.0, 2.0], [0.0, -3.0]],
        [[-0.1, 1.0], [-1.0, -0.1]],
        [[-0.5, 0.3], [0.3, -0.4]],
    ])
    def test_linear_matches_eigen_real_part(self, A):
        expected = quadratic_roots_max_real(char_poly(A))
        got = benettin_lle(linear_system(A), [1.0, 0.5], 0.01, 20000)
        assert abs(got - expected) < 1e-2

    def test_lorenz(self, benettin_lorenz):
        assert abs(benettin_lorenz - 0.91) <= 0.05

    @pytest.mark.slow
    def test_lorenz_halved_dt(self, lorenz_long, benettin_lorenz):
        half = benettin_lle(lorenz_system(), lorenz_long.values[:, 0], 0.005, 200000)
        assert abs(half - benettin_lorenz) < 0.02

    def test_too_few_steps(self):
        with pytest.raises(BadConfigError):
            benettin_lle(harmonic_oscillator(), [1.0, 0.0], 0.01, 999)


class TestAddNoise:
    def test_infinite_snr_identity(self):
        ts = make_sine(T=100)
        assert add_noise(ts, math.inf) is ts

    def test_zero_signal_unit_noise(self):
        out = add_noise(TimeSeries(np.zeros(10000)), 10.0, seed=1)
        assert abs(out.values.var() - 1.0) < 0.05

    def test_snr_20_db(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(10000)
        x = (x - x.mean()) / x.std()
        out = add_noise(TimeSeries(x), 20.0, seed=2)
        assert abs((out.values[0] - x).var() - 0.01) <= 0.2 * 0.01

    def test_deterministic(self):
        ts = make_sine(T=100)
        assert np.array_equal(add_noise(ts, 5, seed=3).values, add_noise(ts, 5, seed=3).values)

    def test_nan_snr(self):
        with pytest.raises(BadConfigError):
            add_noise(make_sine(T=10), math.nan)
