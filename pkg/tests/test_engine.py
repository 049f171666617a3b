import math

import pytest

from stockflow import (
    SimSpec,
    SimulationError,
    SpecError,
    classify,
    compile_model,
    initialize,
    parse_model,
    run,
)
from stockflow.engine import OverrideError


def build(source):
    return compile_model(classify(parse_model(source)))


# --- compile -------------------------------------------------------------------


def test_spec_defaults_from_controls(baseline_compiled):
    spec = baseline_compiled.spec_defaults
    assert (spec.initial_time, spec.final_time, spec.dt, spec.saveper) == (
        0.0,
        120.0,
        0.125,
        0.125,
    )


def test_spec_defaults_without_controls():
    c = build("x = 1\n")
    spec = c.spec_defaults
    assert (spec.initial_time, spec.final_time, spec.dt, spec.saveper) == (
        0.0,
        100.0,
        1.0,
        1.0,
    )


def test_baseline_slot_counts(baseline_compiled):
    assert len(baseline_compiled.stock_plans) == 2
    assert len(baseline_compiled.smooth_plans) == 2
    assert len(baseline_compiled.delay_plans) == 1
    assert baseline_compiled.n_rng_streams == 1


def test_constant_folding_follows_dependencies():
    c = build("a = 2\nb = a * 3\nFINAL TIME = b\nx = time\n")
    assert c.spec_defaults.final_time == 6.0


def test_spec_invariants():
    with pytest.raises(SpecError):
        SimSpec(0, 10, 0, 1).validate()
    with pytest.raises(SpecError):
        SimSpec(10, 0, 1, 1).validate()
    with pytest.raises(SpecError):
        SimSpec(0, 10, 1, 0.4).validate()
    SimSpec(0, 10, 0.125, 0.25).validate()


# --- initialize ----------------------------------------------------------------


def test_baseline_initial_values(baseline_compiled):
    s = initialize(baseline_compiled)
    assert s.values["trained testers"] == pytest.approx(2400 / 23, rel=1e-15)
    assert s.values["trainee testers"] == pytest.approx(200 / 23, rel=1e-15)
    assert s.values["quality perceived by customers"] == 1.0
    # SMOOTH initial state is its input at t0: complaints(t0) = 3/1 - 2 = 1.
    assert s.values["averaged complaints"] == 1.0


def test_stock_initial_override(baseline_compiled):
    s = initialize(baseline_compiled, {"Trainee Testers": 20.0})
    assert s.values["trainee testers"] == 20.0


def test_override_of_auxiliary_rejected(baseline_compiled):
    with pytest.raises(OverrideError):
        initialize(baseline_compiled, {"complaints": 0.0})


def test_override_of_unknown_rejected(baseline_compiled):
    with pytest.raises(OverrideError):
        initialize(baseline_compiled, {"nonexistent": 1.0})


def test_init_failure_reports_variable():
    c = build("x = time + 1 / a\na = 0\n")
    with pytest.raises(SimulationError) as exc:
        initialize(c)
    assert exc.value.variable == "x"


def test_constant_division_by_zero_fails_at_compile():
    from stockflow import CompileError

    with pytest.raises(CompileError):
        build("x = 1 / a\na = 0\n")


# --- step / run ----------------------------------------------------------------


def test_equilibrium_before_shock(baseline_run):
    # The fixed point must hold to high precision for every saved t < 5.
    expect = {
        "trained testers": 2400 / 23,
        "trainee testers": 200 / 23,
        "effective testing capacity": 100.0,
        "complaints": 1.0,
        "testers needed": 100.0,
        "hiring rate": 200 / 69,
        "quitting rate": 200 / 69,
    }
    idx = [i for i, t in enumerate(baseline_run.times) if t < 5]
    assert len(idx) == 40
    for key, value in expect.items():
        series = baseline_run.series(key)
        for i in idx:
            assert series[i] == pytest.approx(value, rel=1e-9), (key, i)


def test_step_shock_in_order_rate(baseline_run):
    orate = baseline_run.series("order rate")
    for i, t in enumerate(baseline_run.times):
        if t < 5:
            assert orate[i] == pytest.approx(10000.0, rel=1e-9)
    at5 = baseline_run.times.index(5.0)
    assert orate[at5] == pytest.approx(12000.0, rel=1e-9)


def test_row_count_and_grid(baseline_run):
    assert len(baseline_run.rows) == 961
    assert baseline_run.times[0] == 0.0
    assert baseline_run.times[-1] == 120.0
    deltas = {
        round(b - a, 12)
        for a, b in zip(baseline_run.times, baseline_run.times[1:])
    }
    assert deltas == {0.125}


def test_single_step_run(baseline_compiled):
    spec = SimSpec(0.0, 0.125, 0.125, 0.125)
    r = run(baseline_compiled, spec=spec)
    assert len(r.rows) == 2


def test_euler_exactness_constant_flow():
    # INTEG of a constant integrates a straight line; with power-of-two
    # dt and flow every float op below is exact.
    c = build("s = INTEG(rate, 1)\nrate = 0.25\nFINAL TIME = 16\nTIME STEP = 0.125\n")
    r = run(c)
    for t, value in zip(r.times, r.series("s")):
        assert value == 1.0 + 0.25 * t


def test_smooth_matches_geometric_closed_form():
    # dt/T = 0.25 exactly, so S_n = u + (S0-u)(1-dt/T)^n is exact in floats
    # for as long as 3^n fits a double's mantissa.
    c = build(
        "s = SMOOTHI(u, 0.5, 0)\nu = 1\nFINAL TIME = 2\nTIME STEP = 0.125\n"
    )
    r = run(c)
    series = r.series("s")
    for n in range(17):
        assert series[n] == 1.0 - 0.75**n


def test_delay_fixed_shift_identity():
    # Ramp input: output(t) must equal input(t - 1) once the buffer fills,
    # and the init value before that.
    c = build(
        "ramp = 2 * time\nd = DELAY FIXED(ramp, 1, ramp)\n"
        "FINAL TIME = 4\nTIME STEP = 0.25\n"
    )
    r = run(c)
    ramp = r.series("ramp")
    d = r.series("d")
    k = 4
    for i in range(len(d)):
        expected = ramp[i - k] if i >= k else 0.0
        assert d[i] == expected


def test_delay_rounding_warning():
    c = build("d = DELAY FIXED(u, 0.3, u)\nu = time\nTIME STEP = 0.125\nFINAL TIME = 1\n")
    r = run(c)
    assert any("rounded" in w for w in r.warnings)


def test_equilibrium_preserved_960_steps(baseline_compiled):
    # Remove the shock by zeroing its height: the t0 fixed point must then
    # persist for the whole horizon within relative 1e-9.
    import stockflow

    src = []
    for eq in baseline_compiled.classified.ast.equations:
        if eq.name.key == "test variation":
            src.append("test variation = 0")
        else:
            src.append(f"{eq.name.canonical} = {stockflow.print_expr(eq.rhs)}")
    c = build("\n".join(src))
    r = run(c)
    first = r.rows[0]
    for row in r.rows:
        for a, b in zip(first, row):
            assert b == pytest.approx(a, rel=1e-9)


def test_determinism_bit_identical(baseline_compiled):
    a = run(baseline_compiled, {"A": 1}, baseline_compiled.spec_with({"A": 1}, seed=7))
    b = run(baseline_compiled, {"A": 1}, baseline_compiled.spec_with({"A": 1}, seed=7))
    assert a.rows == b.rows and a.times == b.times


def test_seed_irrelevant_when_deterministic(baseline_compiled):
    # With A = 0 the stochastic path is multiplied by zero.
    a = run(baseline_compiled, spec=baseline_compiled.spec_with(seed=1))
    b = run(baseline_compiled, spec=baseline_compiled.spec_with(seed=2))
    assert a.rows == b.rows


def test_test_variation_range_under_noise(baseline_compiled):
    spec = baseline_compiled.spec_with({"A": 1}, seed=958)
    r = run(baseline_compiled, {"A": 1}, spec)
    tv = r.series("test variation")
    for t, value in zip(r.times, tv):
        if t >= 5:
            assert -0.1 <= value < 0.1
        else:
            assert value == 0.0


def test_nan_abort_names_variable_and_time():
    c = build("x = 1 / (5 - time)\nFINAL TIME = 10\nTIME STEP = 1\n")
    with pytest.raises(SimulationError) as exc:
        run(c)
    assert exc.value.variable == "x"
    assert exc.value.time == 5.0


def test_nonpositive_smooth_time_constant_aborts():
    c = build("s = SMOOTH(u, time - 2)\nu = 1\nFINAL TIME = 10\nTIME STEP = 1\n")
    with pytest.raises(SimulationError):
        run(c)


def test_values_complete_after_each_step(baseline_compiled):
    s = initialize(baseline_compiled)
    keys = {eq.name.key for eq in baseline_compiled.classified.ast.equations}
    assert keys <= set(s.values)
    from stockflow import step

    step(s, baseline_compiled)
    assert keys <= set(s.values)
    assert s.t == 0.125


def test_negative_values_flagged(baseline_compiled):
    spec = baseline_compiled.spec_with({"A": 1}, seed=0)
    r = run(baseline_compiled, {"A": 1}, spec)
    assert any("test variation" in w and "negative" in w for w in r.warnings)


def test_time_variable_readable():
    c = build("x = time * 2\nFINAL TIME = 3\n")
    r = run(c)
    assert r.series("x") == [0.0, 2.0, 4.0, 6.0]


def test_control_values_published(baseline_compiled):
    s = initialize(baseline_compiled)
    assert s.values["final time"] == 120.0
    assert s.values["time step"] == 0.125
