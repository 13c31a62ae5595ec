import math

import numpy as np
import pytest

from hlcompete import builtin_profile, from_expressions
from hlcompete.errors import DomainError, QuadratureError
from hlcompete.jump import (
    JUMP_BOUND_A, JumpState, Trajectory, _quad_pieces, asymptotic_drift, asymptotic_variance,
    kernel_drift, kernel_variance, run_ensemble, sample_jumps, seeds_for, simulate, step,
)

S4 = builtin_profile("section4")
HL0 = builtin_profile("hl0")
VAR = 32.0 / (3.0 * math.pi**3)


class FixedUniforms:
    """Stand-in generator returning a prescribed stream of uniforms."""

    def __init__(self, values):
        self.values = list(values)

    def random(self, n):
        out, self.values = self.values[:n], self.values[n:]
        return np.array(out)


def test_step_uses_waiting_time_then_angle():
    c = 1e-2
    j = step(JumpState(0.0, 1.0), HL0, c, FixedUniforms([0.5, 0.25]))
    assert j.state.t == pytest.approx(math.log(2.0) / HL0.r(c))
    assert j.theta == 0.5 and j.red
    assert j.state.n == 1


def test_step_symmetry_under_reflection():
    # x = 1 with equal sizes: angles theta' and 2 - theta' move x by opposite amounts
    c = 1e-2
    a = step(JumpState(0.0, 1.0), HL0, c, FixedUniforms([0.1, 0.2]))
    b = step(JumpState(0.0, 1.0), HL0, c, FixedUniforms([0.1, 0.8]))
    assert a.red and not b.red
    assert a.delta == pytest.approx(-b.delta, abs=1e-15)


def test_step_red_frequency():
    rng = np.random.default_rng(5)
    n, x = 20000, 0.6
    reds = sum(step(JumpState(0.0, x), HL0, 1e-3, rng).red for _ in range(n))
    p = x / 2.0
    assert abs(reds / n - p) <= 3.0 * math.sqrt(p * (1 - p) / n)


def test_step_absorbed_is_noop():
    j = step(JumpState(1.0, 0.0, 5), S4, 1e-3, np.random.default_rng(0))
    assert j.red is None and j.delta == 0.0 and j.state == JumpState(1.0, 0.0, 5)


def test_sample_jumps_red_frequency():
    delta, red = sample_jumps(S4, 1e-3, 1.4, 400_000, seed=1)
    p = 0.7
    assert abs(red.mean() - p) <= 3.0 * math.sqrt(p * (1 - p) / red.size)


@pytest.mark.parametrize("x", [0.01, 0.2, 1.0, 1.7, 1.99])
def test_jump_bound(x):
    c = 1e-4
    delta, _ = sample_jumps(S4, c, x, 200_000, seed=2)
    sp, sm = S4.sizes(x, c)
    assert np.max(np.abs(delta)) <= JUMP_BOUND_A * math.sqrt(c * max(sp, sm))


@pytest.mark.parametrize("x", [0.4, 1.5])
def test_kernel_moments_match_monte_carlo(x):
    c, n = 1e-3, 2_000_000
    r = S4.r(c)
    delta, _ = sample_jumps(S4, c, x, n, seed=7)
    b_mc, b_se = r * delta.mean(), r * delta.std() / math.sqrt(n)
    sq = delta * delta
    a_mc, a_se = r * sq.mean(), r * sq.std() / math.sqrt(n)
    assert abs(b_mc - kernel_drift(S4, c, x)) <= 3.0 * b_se
    assert abs(a_mc - kernel_variance(S4, c, x)) <= 3.0 * a_se


def test_hl0_kernel_moments():
    for x in (0.2, 1.0, 1.8):
        assert kernel_drift(HL0, 1e-4, x) == 0.0
        assert kernel_variance(HL0, 1e-7, x) == pytest.approx(VAR, rel=1e-6)


@pytest.mark.parametrize("name", ["section4", "ode-fixed-point"])
def test_asymptotic_forms(name):
    p = builtin_profile(name)
    for x in (0.3, 1.2):
        gaps = [abs(kernel_drift(p, c, x) / asymptotic_drift(p, c, x) - 1.0) for c in (1e-3, 1e-5, 1e-7)]
        assert gaps[-1] < 1e-6 and gaps[0] > gaps[-1]
        vg = [abs(kernel_variance(p, c, x) / asymptotic_variance(p, c, x) - 1.0) for c in (1e-3, 1e-7)]
        assert vg[1] < vg[0] and vg[1] < 5e-3


def test_kernel_moment_domain():
    with pytest.raises(DomainError):
        kernel_drift(S4, 1e-3, 0.0)
    with pytest.raises(DomainError):
        kernel_variance(S4, 1e-3, 2.0)


def test_quadrature_error_carries_diagnostics():
    with pytest.raises(QuadratureError) as info:
        _quad_pieces(lambda u: math.sqrt(abs(u - 0.3)), 0.0, 1.0, (), 0.1, 1e-300, "probe")
    assert info.value.diagnostics["pieces"] >= 1


def test_simulate_zero_horizon():
    tr = simulate(S4, 1e-3, 0.0, seed=1)
    assert list(tr.t) == [0.0] and list(tr.x) == [1.0]
    assert tr.absorbed_at is None


def test_simulate_deterministic_and_seed_sensitive():
    a = simulate(S4, 1e-2, 0.3, seed=9)
    b = simulate(S4, 1e-2, 0.3, seed=9)
    c = simulate(S4, 1e-2, 0.3, seed=10)
    assert np.array_equal(a.t, b.t) and np.array_equal(a.x, b.x)
    assert not np.array_equal(a.x[:50], c.x[:50])
    assert np.all(np.diff(a.t) > 0.0)
    assert np.all((a.x >= 0.0) & (a.x <= 2.0))
    assert a.t[-1] <= 0.3


def test_simulate_matches_manual_steps():
    # the block-driven loop consumes the stream exactly like repeated step()
    rng = np.random.default_rng(21)
    u = rng.random(2 * 8192)
    state = JumpState()
    fixed = FixedUniforms(u)
    xs = []
    for _ in range(300):
        state = step(state, S4, 1e-2, fixed).state
        xs.append(state.x)
    tr = simulate(S4, 1e-2, math.inf, seed=21, max_events=300)
    assert np.allclose(tr.x[1:301], xs, rtol=0, atol=1e-15)


def test_absorption_is_permanent():
    tr = simulate(HL0, 1e-2, 1e4, seed=3)
    assert tr.absorbed_at is not None
    assert tr.x[-1] in (0.0, 2.0)
    assert tr.t[-1] == tr.absorbed_at


def test_grid_sampling_matches_event_record():
    full = simulate(S4, 1e-2, 2.0, seed=8)
    grid = simulate(S4, 1e-2, 2.0, seed=8, sample_dt=0.1)
    idx = np.searchsorted(full.t, grid.t, side="right") - 1
    assert np.array_equal(grid.x, full.x[idx])
    assert grid.n_events == full.n_events


def test_grid_sampling_inserts_absorption():
    tr = simulate(HL0, 1e-2, 1e4, seed=3, sample_dt=1.0)
    assert tr.absorbed_at in tr.t
    after = tr.t >= tr.absorbed_at
    assert np.all(tr.x[after] == tr.x[-1])


def test_trajectory_csv_roundtrip(tmp_path):
    tr = simulate(S4, 1e-2, 0.2, seed=[1, 2])
    tr.to_csv(tmp_path / "t.csv")
    tr.to_json(tmp_path / "t.json")
    back = Trajectory.from_csv(tmp_path / "t.csv", tmp_path / "t.json")
    assert np.array_equal(back.t, tr.t) and np.array_equal(back.x, tr.x)
    assert back.seed == [1, 2] and back.n_events == tr.n_events


def test_ensemble_independent_of_threads():
    a = run_ensemble(S4, 1e-2, 0.5, 6, 42, sample_times=[0.1, 0.5], threads=1)
    b = run_ensemble(S4, 1e-2, 0.5, 6, 42, sample_times=[0.1, 0.5], threads=3)
    assert np.array_equal(a.final_x, b.final_x)
    assert np.array_equal(a.samples, b.samples)
    one = simulate(S4, 1e-2, 0.5, seed=seeds_for(42, 6)[2])
    assert a.final_x[2] == one.x[-1]


def test_hl0_martingale():
    ens = run_ensemble(HL0, 1e-2, 1.0, 2000, 17, sample_times=[0.1, 0.5, 1.0])
    means = ens.samples.mean(axis=0)
    se = ens.samples.std(axis=0, ddof=1) / math.sqrt(2000)
    assert np.all(np.abs(means - 1.0) <= 4.0 * se)
    # variance grows like the limit variance times t while paths are inside
    assert ens.samples[:, 0].var() == pytest.approx(VAR * 0.1, rel=0.15)


def test_custom_profile_runs_on_python_loop():
    p = from_expressions("2 - x", "x", "ode")
    tr = simulate(p, 1e-2, 0.1, seed=0)
    assert tr.params["backend"] == "python"
    assert len(tr.t) > 1
