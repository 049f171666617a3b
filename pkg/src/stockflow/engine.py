"""Fixed-step simulation engine.

A ClassifiedModel compiles to closures once; each run then owns a mutable
SimState.  Semantics per step, in order: integrate stocks with explicit
Euler, update first-order smoothing states, push delay-buffer inputs (all
three using the step-n values), advance time, then evaluate auxiliaries in
dependency order.  Saved values at time t are therefore computed from state
at t, and the t0 row is well defined.

Random draws are counter-based (see rng.py): one value per (site, step),
independent of evaluation order and of which IF THEN ELSE branches run.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .analyzer import ClassifiedModel, SiteKind, StateSite, VarKind
from .ast import (
    Binary,
    BuiltinKind,
    Call,
    Compare,
    CONTROL_KEYS,
    Expr,
    NameKey,
    NumberLit,
    StockflowError,
    TIME_KEY,
    Unary,
    VarRef,
)
from .rng import seed_to_u64, uniform_draw


class SpecError(StockflowError):
    pass


class CompileError(StockflowError):
    pass


class OverrideError(StockflowError):
    pass


class SimulationError(StockflowError):
    """Non-finite value or invalid state constant during a run."""

    def __init__(self, variable: str, time: float, message: str | None = None):
        self.variable = variable
        self.time = time
        super().__init__(
            message or f"non-finite value in '{variable}' at time {time:g}"
        )


class InitializationError(SimulationError):
    pass


@dataclass(frozen=True)
class SimSpec:
    initial_time: float
    final_time: float
    dt: float
    saveper: float
    global_seed: int = 0

    def validate(self) -> None:
        if not self.dt > 0:
            raise SpecError(f"TIME STEP must be positive, got {self.dt:g}")
        if not self.final_time > self.initial_time:
            raise SpecError("FINAL TIME must be greater than INITIAL TIME")
        ratio = self.saveper / self.dt
        if round(ratio) < 1 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, abs(ratio)):
            raise SpecError(
                f"SAVEPER ({self.saveper:g}) must be a positive integer multiple "
                f"of TIME STEP ({self.dt:g})"
            )
        if self.step_count < 1:
            raise SpecError("the run must contain at least one step")
        if self.step_count % self.save_every != 0:
            raise SpecError(
                "the simulation horizon must be a whole number of SAVEPER intervals"
            )
        if not 0 <= self.global_seed < (1 << 64):
            raise SpecError("seed must fit in 64 bits")

    @property
    def step_count(self) -> int:
        return round((self.final_time - self.initial_time) / self.dt)

    @property
    def save_every(self) -> int:
        return round(self.saveper / self.dt)


_SPEC_DEFAULTS = {"initial time": 0.0, "final time": 100.0, "time step": 1.0}


@dataclass
class SimState:
    spec: SimSpec
    t: float
    step_index: int = 0
    values: dict[str, float] = field(default_factory=dict)
    stocks: list[float] = field(default_factory=list)
    smooths: list[float] = field(default_factory=list)
    delays: list[deque] = field(default_factory=list)
    rng_site_seeds: list[int] = field(default_factory=list)
    stock_overrides: dict[int, float] = field(default_factory=dict)
    run_warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class _StockPlan:
    slot: int
    name: NameKey
    net_flow: object  # step-mode closure
    init: object


@dataclass(frozen=True)
class _SmoothPlan:
    slot: int
    owner: NameKey
    input_fn: object
    time_const_fn: object


@dataclass(frozen=True)
class _DelayPlan:
    slot: int
    owner: NameKey
    input_fn: object


class CompiledModel:
    """Executable plan: per-equation closures plus state-slot layout."""

    def __init__(self, classified: ClassifiedModel):
        self.classified = classified
        comp = _Compiler(classified)
        comp.run()
        self.step_fns = comp.step_fns
        self.init_fns = comp.init_fns
        self.stock_plans = comp.stock_plans
        self.smooth_plans = comp.smooth_plans
        self.delay_plans = comp.delay_plans
        self.n_rng_streams = comp.n_rng
        self.canonical = {
            eq.name.key: eq.name.canonical for eq in classified.ast.equations
        }
        self.const_defaults = self._fold_constants({})
        dt = self.const_defaults.get("time step", _SPEC_DEFAULTS["time step"])
        self.spec_defaults = SimSpec(
            initial_time=self.const_defaults.get(
                "initial time", _SPEC_DEFAULTS["initial time"]
            ),
            final_time=self.const_defaults.get(
                "final time", _SPEC_DEFAULTS["final time"]
            ),
            dt=dt,
            saveper=self.const_defaults.get("saveper", dt),
        )

    # All constants (controls included) fold at compile time; overrides
    # substitute values before dependents are evaluated.
    def _fold_constants(self, overrides: dict[str, float]) -> dict[str, float]:
        m = self.classified
        out: dict[str, float] = {}
        frame = _FoldFrame(out)
        for name in m.init_order:
            kind = m.kinds[name.key]
            if kind not in (VarKind.CONSTANT, VarKind.CONTROL):
                continue
            if name.key in overrides:
                out[name.key] = overrides[name.key]
                continue
            try:
                out[name.key] = self.init_fns[name.key](frame)
            except (KeyError, ZeroDivisionError, TypeError) as exc:
                label = "control" if kind is VarKind.CONTROL else "constant"
                raise CompileError(
                    f"{label} '{name.canonical}' does not fold to a number: {exc}"
                ) from None
        return out

    def spec_with(self, overrides: dict | None = None, seed: int = 0) -> SimSpec:
        """Run spec from the model's control equations plus any overrides."""
        consts = self._fold_constants(_normalize_overrides(self, overrides))
        dt = consts.get("time step", _SPEC_DEFAULTS["time step"])
        return SimSpec(
            initial_time=consts.get("initial time", _SPEC_DEFAULTS["initial time"]),
            final_time=consts.get("final time", _SPEC_DEFAULTS["final time"]),
            dt=dt,
            saveper=consts.get("saveper", dt),
            global_seed=seed,
        )


class _FoldFrame:
    """Just enough of SimState for evaluating constant expressions."""

    def __init__(self, values: dict[str, float]):
        self.values = values
        self.t = 0.0


class _Compiler:
    def __init__(self, m: ClassifiedModel):
        self.m = m
        self.cursor = 0
        self.step_fns: dict[str, object] = {}
        self.init_fns: dict[str, object] = {}
        self.stock_plans: list[_StockPlan] = []
        self.smooth_plans: list[_SmoothPlan] = []
        self.delay_plans: list[_DelayPlan] = []
        self.n_rng = 0

    def run(self) -> None:
        for eq in self.m.ast.equations:
            step, init = self._compile(eq.rhs, eq.name)
            self.step_fns[eq.name.key] = step
            self.init_fns[eq.name.key] = init
        if self.cursor != len(self.m.state_sites):
            raise CompileError("state site enumeration mismatch")

    def _take(self, kind: SiteKind) -> StateSite:
        site = self.m.state_sites[self.cursor]
        if site.kind is not kind:
            raise CompileError("state site enumeration mismatch")
        self.cursor += 1
        return site

    def _compile(self, e: Expr, owner: NameKey):
        """Build (step-mode, init-mode) closures; allocates sites in the
        same pre-order walk the analyzer used to number them."""
        if isinstance(e, NumberLit):
            v = e.value
            fn = lambda s, v=v: v
            return fn, fn
        if isinstance(e, VarRef):
            if e.name.key == TIME_KEY:
                fn = lambda s: s.t
                return fn, fn
            key = e.name.key
            fn = lambda s, key=key: s.values[key]
            return fn, fn
        if isinstance(e, Unary):
            fs, fi = self._compile(e.operand, owner)
            return (lambda s: -fs(s)), (lambda s: -fi(s))
        if isinstance(e, Binary):
            ls, li = self._compile(e.lhs, owner)
            rs, ri = self._compile(e.rhs, owner)
            return _binary_fn(e.op, ls, rs), _binary_fn(e.op, li, ri)
        if isinstance(e, Compare):
            ls, li = self._compile(e.lhs, owner)
            rs, ri = self._compile(e.rhs, owner)
            return _compare_fn(e.op, ls, rs), _compare_fn(e.op, li, ri)
        if isinstance(e, Call):
            return self._compile_call(e, owner)
        raise CompileError(f"unknown expression node {e!r}")

    def _compile_call(self, e: Call, owner: NameKey):
        b = e.builtin
        if b is BuiltinKind.INTEG:
            self._take(SiteKind.INTEG_STATE)
            slot = len(self.stock_plans)
            net_step, _ = self._compile(e.args[0], owner)
            _, init_init = self._compile(e.args[1], owner)

            def init(s, slot=slot, init_init=init_init):
                computed = init_init(s)
                v = s.stock_overrides.get(slot, computed)
                s.stocks[slot] = v
                return v

            self.stock_plans.append(_StockPlan(slot, owner, net_step, init))
            return (lambda s, slot=slot: s.stocks[slot]), init

        if b in (BuiltinKind.SMOOTH, BuiltinKind.SMOOTHI):
            self._take(SiteKind.SMOOTH_STATE)
            slot = len(self.smooth_plans)
            u_step, u_init = self._compile(e.args[0], owner)
            t_step, _ = self._compile(e.args[1], owner)
            if b is BuiltinKind.SMOOTHI:
                _, start_init = self._compile(e.args[2], owner)
            else:
                start_init = u_init
            self.smooth_plans.append(_SmoothPlan(slot, owner, u_step, t_step))

            def init(s, slot=slot, start_init=start_init):
                v = start_init(s)
                s.smooths[slot] = v
                return v

            return (lambda s, slot=slot: s.smooths[slot]), init

        if b is BuiltinKind.DELAY_FIXED:
            self._take(SiteKind.DELAY_BUFFER)
            slot = len(self.delay_plans)
            u_step, _ = self._compile(e.args[0], owner)
            d_step, _ = self._compile(e.args[1], owner)
            _, i_init = self._compile(e.args[2], owner)
            self.delay_plans.append(_DelayPlan(slot, owner, u_step))
            owner_name = owner.canonical

            def init(s, slot=slot, d_step=d_step, i_init=i_init, owner_name=owner_name):
                delay = d_step(s)
                k = max(1, round(delay / s.spec.dt))
                if abs(k * s.spec.dt - delay) > 1e-9 * max(1.0, abs(delay)):
                    s.run_warnings.append(
                        f"DELAY FIXED in '{owner_name}': delay {delay:g} is not a "
                        f"multiple of TIME STEP, rounded to {k} steps"
                    )
                v = i_init(s)
                s.delays[slot] = deque([v] * k, maxlen=k)
                return v

            return (lambda s, slot=slot: s.delays[slot][0]), init

        if b is BuiltinKind.RANDOM_UNIFORM:
            site = self._take(SiteKind.RNG_STREAM)
            slot = self.n_rng
            self.n_rng += 1
            lo_step, _ = self._compile(e.args[0], owner)
            hi_step, _ = self._compile(e.args[1], owner)
            seed_step, _ = self._compile(e.args[2], owner)
            site_id = site.site_id

            def step(s, lo_step=lo_step, hi_step=hi_step, slot=slot, site_id=site_id):
                return uniform_draw(
                    lo_step(s),
                    hi_step(s),
                    s.spec.global_seed,
                    s.rng_site_seeds[slot],
                    site_id,
                    s.step_index,
                )

            def init(s, seed_step=seed_step, slot=slot, step=step):
                s.rng_site_seeds[slot] = seed_to_u64(seed_step(s))
                return step(s)

            return step, init

        if b is BuiltinKind.STEP:
            h_s, h_i = self._compile(e.args[0], owner)
            t_s, t_i = self._compile(e.args[1], owner)
            return (
                lambda s: builtin_step(h_s(s), t_s(s), s.t),
                lambda s: builtin_step(h_i(s), t_i(s), s.t),
            )

        if b is BuiltinKind.IF_THEN_ELSE:
            c_s, c_i = self._compile(e.args[0], owner)
            a_s, a_i = self._compile(e.args[1], owner)
            b_s, b_i = self._compile(e.args[2], owner)
            return (
                lambda s: builtin_if_then_else(c_s(s), a_s(s), b_s(s)),
                lambda s: builtin_if_then_else(c_i(s), a_i(s), b_i(s)),
            )

        if b is BuiltinKind.MAX:
            a_s, a_i = self._compile(e.args[0], owner)
            b_s, b_i = self._compile(e.args[1], owner)
            return (lambda s: max(a_s(s), b_s(s))), (lambda s: max(a_i(s), b_i(s)))

        if b is BuiltinKind.MIN:
            a_s, a_i = self._compile(e.args[0], owner)
            b_s, b_i = self._compile(e.args[1], owner)
            return (lambda s: min(a_s(s), b_s(s))), (lambda s: min(a_i(s), b_i(s)))

        raise CompileError(f"unhandled builtin {b}")


def _binary_fn(op: str, lf, rf):
    if op == "+":
        return lambda s: lf(s) + rf(s)
    if op == "-":
        return lambda s: lf(s) - rf(s)
    if op == "*":
        return lambda s: lf(s) * rf(s)
    return lambda s: lf(s) / rf(s)


def _compare_fn(op: str, lf, rf):
    if op == "<":
        return lambda s: lf(s) < rf(s)
    if op == "<=":
        return lambda s: lf(s) <= rf(s)
    if op == ">":
        return lambda s: lf(s) > rf(s)
    if op == ">=":
        return lambda s: lf(s) >= rf(s)
    if op == "=":
        return lambda s: lf(s) == rf(s)
    return lambda s: lf(s) != rf(s)


# --- builtins exposed for direct use and testing -----------------------------


def builtin_step(height: float, start: float, t: float) -> float:
    """0 before start, height from start onward (inclusive)."""
    return height if t >= start else 0.0


def builtin_if_then_else(cond: bool, a: float, b: float) -> float:
    return a if cond else b


def builtin_random_uniform(
    lo: float,
    hi: float,
    global_seed: int,
    site_seed: int,
    site_id: int,
    step_index: int,
) -> float:
    return uniform_draw(lo, hi, global_seed, site_seed, site_id, step_index)


# --- run lifecycle ------------------------------------------------------------


def compile_model(m: ClassifiedModel) -> CompiledModel:
    return CompiledModel(m)


def _normalize_overrides(
    c: CompiledModel, overrides: dict | None
) -> dict[str, float]:
    out: dict[str, float] = {}
    for raw, value in (overrides or {}).items():
        key = raw.key if isinstance(raw, NameKey) else " ".join(str(raw).lower().split())
        kind = c.classified.kinds.get(key)
        if kind is None:
            raise OverrideError(f"cannot override unknown variable '{raw}'")
        if kind is VarKind.AUXILIARY:
            raise OverrideError(
                f"cannot override '{c.canonical[key]}': only constants and "
                "stock initial values may be overridden"
            )
        out[key] = float(value)
    return out


def initialize(
    c: CompiledModel, overrides: dict | None = None, spec: SimSpec | None = None
) -> SimState:
    """Evaluate constants, stock initials and builtin state at the initial
    time, then run one full evaluation so values is complete at t0."""
    norm = _normalize_overrides(c, overrides)
    if spec is None:
        spec = c.spec_with(norm)
    spec.validate()

    m = c.classified
    s = SimState(
        spec=spec,
        t=spec.initial_time,
        stocks=[0.0] * len(c.stock_plans),
        smooths=[0.0] * len(c.smooth_plans),
        delays=[None] * len(c.delay_plans),
        rng_site_seeds=[0] * c.n_rng_streams,
    )
    s.run_warnings.extend(m.warnings)

    stock_slot = {plan.name.key: plan.slot for plan in c.stock_plans}
    control_values = {
        "initial time": spec.initial_time,
        "final time": spec.final_time,
        "time step": spec.dt,
        "saveper": spec.saveper,
    }
    for key, value in norm.items():
        if m.kinds[key] is VarKind.STOCK:
            s.stock_overrides[stock_slot[key]] = value

    for name in m.init_order:
        key = name.key
        kind = m.kinds[key]
        try:
            if kind is VarKind.CONTROL:
                v = control_values[key]
            elif kind is VarKind.CONSTANT and key in norm:
                v = norm[key]
            else:
                v = c.init_fns[key](s)
        except ZeroDivisionError:
            raise InitializationError(
                name.canonical, spec.initial_time, f"division by zero initializing '{name.canonical}'"
            ) from None
        if not math.isfinite(v):
            raise InitializationError(
                name.canonical,
                spec.initial_time,
                f"non-finite initial value for '{name.canonical}'",
            )
        s.values[key] = v

    _publish(s, c)
    return s


def _publish(s: SimState, c: CompiledModel) -> None:
    """Refresh the values map from state: stocks from their slots, then
    auxiliaries in dependency order."""
    m = c.classified
    for plan in c.stock_plans:
        v = s.stocks[plan.slot]
        if not math.isfinite(v):
            raise SimulationError(plan.name.canonical, s.t)
        s.values[plan.name.key] = v
    for name in m.step_order:
        try:
            v = c.step_fns[name.key](s)
        except ZeroDivisionError:
            raise SimulationError(
                name.canonical, s.t, f"division by zero in '{name.canonical}' at time {s.t:g}"
            ) from None
        if not math.isfinite(v):
            raise SimulationError(name.canonical, s.t)
        s.values[name.key] = v


def step(s: SimState, c: CompiledModel) -> SimState:
    """Advance one TIME STEP."""
    spec = s.spec
    dt = spec.dt

    # Phase one: evaluate everything that feeds state from the step-n values,
    # before any state is mutated.
    try:
        flows = [plan.net_flow(s) for plan in c.stock_plans]
        smooth_inputs = [
            (plan.input_fn(s), plan.time_const_fn(s)) for plan in c.smooth_plans
        ]
        delay_inputs = [plan.input_fn(s) for plan in c.delay_plans]
    except ZeroDivisionError:
        raise SimulationError(
            "state update", s.t, f"division by zero in a state update at time {s.t:g}"
        ) from None

    # Phase two: integrate and shift.
    for plan, flow in zip(c.stock_plans, flows):
        s.stocks[plan.slot] += dt * flow
    for plan, (u, time_const) in zip(c.smooth_plans, smooth_inputs):
        if not time_const > 0:
            raise SimulationError(
                plan.owner.canonical,
                s.t,
                f"SMOOTH time constant must be positive in '{plan.owner.canonical}' "
                f"at time {s.t:g}, got {time_const:g}",
            )
        s.smooths[plan.slot] += dt * (u - s.smooths[plan.slot]) / time_const
    for plan, u in zip(c.delay_plans, delay_inputs):
        s.delays[plan.slot].append(u)

    s.step_index += 1
    s.t = spec.initial_time + s.step_index * dt
    _publish(s, c)
    return s


@dataclass
class RunResult:
    """Time-indexed table of saved values plus run metadata."""

    model_id: str
    var_names: tuple[str, ...]  # canonical spellings, model order
    var_keys: tuple[str, ...]
    times: list[float]
    rows: list[list[float]]
    overrides: dict[str, float]
    seed: int
    spec: SimSpec
    label: str = ""
    warnings: tuple[str, ...] = ()

    @property
    def columns(self) -> list[str]:
        return ["Time", *self.var_names]

    def index_of(self, name: str) -> int:
        from .analyzer import UnknownVariableError

        key = " ".join(name.lower().split())
        try:
            return self.var_keys.index(key)
        except ValueError:
            raise UnknownVariableError(f"no variable named '{name}' in this run") from None

    def series(self, name: str) -> list[float]:
        i = self.index_of(name)
        return [row[i] for row in self.rows]

    def has_var(self, name: str) -> bool:
        key = " ".join(name.lower().split())
        return key in self.var_keys


def run(
    c: CompiledModel,
    overrides: dict | None = None,
    spec: SimSpec | None = None,
    label: str = "",
) -> RunResult:
    """Initialize and simulate to FINAL TIME, recording a row every SAVEPER."""
    norm = _normalize_overrides(c, overrides)
    if spec is None:
        spec = c.spec_with(norm)
    s = initialize(c, norm, spec)

    m = c.classified
    var_keys = tuple(eq.name.key for eq in m.ast.equations)
    var_names = tuple(eq.name.canonical for eq in m.ast.equations)

    times = [s.t]
    rows = [[s.values[k] for k in var_keys]]
    save_every = spec.save_every
    for i in range(spec.step_count):
        step(s, c)
        if (i + 1) % save_every == 0:
            times.append(s.t)
            rows.append([s.values[k] for k in var_keys])

    warnings = list(s.run_warnings)
    for j, key in enumerate(var_keys):
        low = min(row[j] for row in rows)
        if low < 0:
            warnings.append(
                f"'{var_names[j]}' took negative values (min {low:g})"
            )

    return RunResult(
        model_id=m.ast.model_id,
        var_names=var_names,
        var_keys=var_keys,
        times=times,
        rows=rows,
        overrides={c.canonical[k]: v for k, v in norm.items()},
        seed=spec.global_seed,
        spec=spec,
        label=label,
        warnings=tuple(warnings),
    )
