"""Named runs, one-parameter sweeps, and multi-run comparison."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from . import corpus
from .analyzer import classify
from .ast import StockflowError
from .engine import CompiledModel, RunResult, compile_model, run


class ComparisonError(StockflowError):
    pass


@dataclass(frozen=True)
class Scenario:
    label: str
    model_id: str
    overrides: dict[str, float] = field(default_factory=dict)
    seed: int = 0


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    param: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class MetricRow:
    label: str
    variable: str  # as requested
    resolved: str  # canonical name in that run
    mean: float
    min: float
    max: float
    final: float
    peak_time: float  # time of the first occurrence of the max


@dataclass(frozen=True)
class ComparisonReport:
    runs: tuple[tuple[Scenario, RunResult], ...]
    variables: tuple[str, ...]
    window: tuple[float, float]
    metrics: tuple[MetricRow, ...]

    def metric(self, label: str, variable: str) -> MetricRow:
        for row in self.metrics:
            if row.label == label and row.variable == variable:
                return row
        raise KeyError(f"no metric row for ({label!r}, {variable!r})")


@lru_cache(maxsize=None)
def _compiled_bundled(model_id: str) -> CompiledModel:
    return compile_model(classify(corpus.load_bundled(model_id)))


def run_scenario(s: Scenario, compiled: CompiledModel | None = None) -> RunResult:
    """Run a scenario; bundled ids resolve automatically."""
    c = compiled if compiled is not None else _compiled_bundled(s.model_id)
    spec = c.spec_with(s.overrides, seed=s.seed)
    return run(c, s.overrides, spec, label=s.label)


def sweep(
    spec: SweepSpec, compiled: CompiledModel | None = None
) -> list[tuple[float, RunResult]]:
    """One run per value of the swept parameter, everything else fixed."""
    if not spec.values:
        raise ValueError("sweep needs at least one value")
    out = []
    for value in spec.values:
        overrides = dict(spec.base.overrides)
        overrides[spec.param] = value
        scenario = Scenario(
            label=f"{spec.base.label} [{spec.param}={value:g}]",
            model_id=spec.base.model_id,
            overrides=overrides,
            seed=spec.base.seed,
        )
        out.append((value, run_scenario(scenario, compiled)))
    return out


def _norm_key(name: str) -> str:
    return " ".join(name.lower().split())


def _depluralized(key: str) -> str:
    return " ".join(w[:-1] if w.endswith("s") else w for w in key.split())


def _resolve_var(result: RunResult, requested: str) -> int:
    """Column index for a requested variable name.

    Exact (case/whitespace-insensitive) match first; failing that, a unique
    match ignoring trailing 's' per word, which bridges spelling drift such
    as "Trainee Testers" vs "Trainees Testers" between model revisions.
    """
    key = _norm_key(requested)
    if key in result.var_keys:
        return result.var_keys.index(key)
    target = _depluralized(key)
    hits = [i for i, k in enumerate(result.var_keys) if _depluralized(k) == target]
    if len(hits) == 1:
        return hits[0]
    raise ComparisonError(
        f"variable '{requested}' not found in run '{result.label or result.model_id}'"
    )


def compare(
    runs: list[tuple[Scenario, RunResult]],
    variables: list[str],
    window: tuple[float, float] | None = None,
) -> ComparisonReport:
    """Aligned series plus summary metrics over saved rows in the window."""
    if len(runs) < 2:
        raise ComparisonError("compare needs at least two runs")
    labels = [s.label for s, _ in runs]
    if len(set(labels)) != len(labels):
        raise ComparisonError("scenario labels must be unique within a comparison")
    base_times = runs[0][1].times
    for _, result in runs[1:]:
        if result.times != base_times:
            raise ComparisonError("runs must share an identical time grid")

    if window is None:
        window = (base_times[0], base_times[-1])
    w0, w1 = window
    idx = [i for i, t in enumerate(base_times) if w0 <= t <= w1]
    if not idx:
        raise ComparisonError(f"window [{w0:g}, {w1:g}] selects no saved rows")

    metrics: list[MetricRow] = []
    for scenario, result in runs:
        for requested in variables:
            col = _resolve_var(result, requested)
            values = [result.rows[i][col] for i in idx]
            peak = max(values)
            peak_at = base_times[idx[values.index(peak)]]
            metrics.append(
                MetricRow(
                    label=scenario.label,
                    variable=requested,
                    resolved=result.var_names[col],
                    mean=sum(values) / len(values),
                    min=min(values),
                    max=peak,
                    final=values[-1],
                    peak_time=peak_at,
                )
            )
    return ComparisonReport(
        runs=tuple(runs),
        variables=tuple(variables),
        window=(w0, w1),
        metrics=tuple(metrics),
    )
