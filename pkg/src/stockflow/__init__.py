"""Stock-and-flow simulation toolkit.

Parse .sd models, analyze their dependency structure, run fixed-step
simulations with deterministic stateful builtins, and compare what-if
scenarios.  See the README for the CLI and HTTP service.
"""

from .ast import (
    Binary,
    BuiltinKind,
    Call,
    Compare,
    Equation,
    Expr,
    InvalidNameError,
    ModelAst,
    NameKey,
    NumberLit,
    SliderDirective,
    StockflowError,
    Unary,
    VarRef,
    expr_free_vars,
    normalize_name,
)
from .analyzer import (
    AnalysisError,
    ClassifiedModel,
    LoopDiagnostic,
    StateSite,
    TextTree,
    UnknownVariableError,
    VarKind,
    causes_tree,
    classify,
    uses_tree,
)
from .corpus import BundledModel, UnknownModelError, list_bundled, load_bundled
from .csvio import read_csv, write_csv
from .engine import (
    CompiledModel,
    CompileError,
    InitializationError,
    OverrideError,
    RunResult,
    SimSpec,
    SimState,
    SimulationError,
    SpecError,
    builtin_if_then_else,
    builtin_random_uniform,
    builtin_step,
    compile_model,
    initialize,
    run,
    step,
)
from .lang import (
    ModelParseError,
    ParseError,
    parse_expr,
    parse_model,
    print_expr,
    print_model,
)
from .scenario import (
    ComparisonError,
    ComparisonReport,
    MetricRow,
    Scenario,
    SweepSpec,
    compare,
    run_scenario,
    sweep,
)

__version__ = "0.1.0"
