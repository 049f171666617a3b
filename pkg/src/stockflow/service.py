"""JSON-over-HTTP API for the web UI.

Stateless: every request carries the full model reference, overrides and
seed, and equal requests produce identical responses.  Numbers serialize
with shortest round-trip formatting, so API output matches CLI CSV output
exactly for equal inputs.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import corpus
from .analyzer import AnalysisError, VarKind, classify
from .ast import StockflowError
from .engine import (
    CompiledModel,
    RunResult,
    SimulationError,
    compile_model,
    run,
)
from .lang import ModelParseError, parse_model
from .scenario import ComparisonError, Scenario, compare


class SimulateRequest(BaseModel):
    model: str | None = None  # bundled id, or inline source for convenience
    source: str | None = None  # explicit inline source text
    overrides: dict[str, float] = Field(default_factory=dict)
    seed: int = 0
    save_vars: list[str] | None = None
    label: str | None = None


class CompareRequest(BaseModel):
    runs: list[SimulateRequest]
    vars: list[str]
    window: tuple[float, float] | None = None


@lru_cache(maxsize=None)
def _bundled_compiled(model_id: str) -> CompiledModel:
    return compile_model(classify(corpus.load_bundled(model_id)))


def _resolve_compiled(req: SimulateRequest) -> CompiledModel:
    if (req.model is None) == (req.source is None):
        raise _HttpError(400, "exactly one of 'model' and 'source' must be present")
    if req.source is not None:
        return compile_model(classify(parse_model(req.source, model_id="inline")))
    assert req.model is not None
    if req.model in corpus.BUNDLED_IDS:
        return _bundled_compiled(req.model)
    if "=" in req.model or "\n" in req.model:
        # Looks like source text passed through the model field.
        return compile_model(classify(parse_model(req.model, model_id="inline")))
    raise _HttpError(404, f"unknown model '{req.model}'")


class _HttpError(Exception):
    def __init__(self, status: int, detail: Any):
        self.status = status
        self.detail = detail


def _simulate(req: SimulateRequest) -> tuple[RunResult, CompiledModel]:
    compiled = _resolve_compiled(req)
    spec = compiled.spec_with(req.overrides, seed=req.seed)
    result = run(compiled, req.overrides, spec, label=req.label or "")
    return result, compiled


def _series_payload(result: RunResult, save_vars: list[str] | None) -> dict[str, list[float]]:
    if save_vars is None:
        names = result.var_names
    else:
        names = [result.var_names[result.index_of(v)] for v in save_vars]
    return {name: result.series(name) for name in names}


def create_app() -> FastAPI:
    app = FastAPI(title="stockflow", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.exception_handler(_HttpError)
    async def http_error(request: Request, exc: _HttpError):
        return JSONResponse(status_code=exc.status, content={"detail": exc.detail})

    @app.exception_handler(ModelParseError)
    async def parse_error(request: Request, exc: ModelParseError):
        return JSONResponse(
            status_code=422,
            content={
                "detail": "model does not parse",
                "errors": [
                    {
                        "line": e.line,
                        "column": e.column,
                        "kind": e.kind,
                        "message": e.message,
                    }
                    for e in exc.errors
                ],
            },
        )

    @app.exception_handler(AnalysisError)
    async def analysis_error(request: Request, exc: AnalysisError):
        return JSONResponse(
            status_code=422,
            content={
                "detail": "model does not classify",
                "errors": [str(d) for d in exc.diagnostics],
            },
        )

    @app.exception_handler(SimulationError)
    async def runtime_error(request: Request, exc: SimulationError):
        return JSONResponse(
            status_code=409,
            content={
                "detail": str(exc),
                "variable": exc.variable,
                "time": exc.time,
            },
        )

    @app.exception_handler(ComparisonError)
    async def comparison_error(request: Request, exc: ComparisonError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(StockflowError)
    async def model_error(request: Request, exc: StockflowError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/api/models")
    def models() -> list[dict]:
        out = []
        for bundled in corpus.list_bundled():
            compiled = _bundled_compiled(bundled.id)
            m = compiled.classified
            sliders = [
                {
                    "name": d.target.canonical,
                    "default": compiled.const_defaults.get(d.target.key),
                    "min": d.min,
                    "max": d.max,
                    "step": d.step,
                }
                for d in m.ast.directives
            ]
            variables = [
                {"name": eq.name.canonical, "kind": m.kinds[eq.name.key].value}
                for eq in m.ast.equations
            ]
            out.append(
                {
                    "id": bundled.id,
                    "description": bundled.description,
                    "sliders": sliders,
                    "variables": variables,
                }
            )
        return out

    @app.post("/api/simulate")
    def simulate(req: SimulateRequest) -> dict:
        result, _ = _simulate(req)
        return {
            "time": result.times,
            "series": _series_payload(result, req.save_vars),
            "warnings": list(result.warnings),
        }

    @app.post("/api/compare")
    def compare_runs(req: CompareRequest) -> dict:
        if len(req.runs) < 2:
            raise _HttpError(400, "compare needs at least two runs")
        pairs = []
        for i, sub in enumerate(req.runs):
            result, _ = _simulate(sub)
            label = sub.label or f"run {i + 1}"
            scenario = Scenario(
                label=label,
                model_id=sub.model or "inline",
                overrides=dict(sub.overrides),
                seed=sub.seed,
            )
            pairs.append((scenario, result))
        report = compare(pairs, req.vars, req.window)
        results_by_label = {s.label: r for s, r in pairs}
        series = [
            {
                "label": row.label,
                "variable": row.variable,
                "resolved": row.resolved,
                "values": results_by_label[row.label].series(row.resolved),
            }
            for row in report.metrics
        ]
        return {
            "window": list(report.window),
            "time": pairs[0][1].times,
            "runs": [
                {
                    "label": s.label,
                    "model": s.model_id,
                    "overrides": s.overrides,
                    "seed": s.seed,
                }
                for s, _ in pairs
            ],
            "series": series,
            "metrics": [
                {
                    "label": row.label,
                    "variable": row.variable,
                    "resolved": row.resolved,
                    "mean": row.mean,
                    "min": row.min,
                    "max": row.max,
                    "final": row.final,
                    "peak_time": row.peak_time,
                }
                for row in report.metrics
            ],
        }

    return app


app = create_app()
