"""Variable classification, dependency graphs, evaluation orders and
causes/uses trees.

Two graphs are built.  The step-time graph orders the per-step evaluation
of auxiliaries: reads of stocks and of stateful-builtin outputs are not
edges, because those values come from state carried over from the previous
step.  The initialization graph adds the edges needed to compute values at
the initial time: stock init expressions, SMOOTH inputs (its initial state
is the input at t0) and DELAY FIXED init expressions.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum

from .ast import (
    Binary,
    BuiltinKind,
    Call,
    Compare,
    CONTROL_KEYS,
    Equation,
    Expr,
    ModelAst,
    NameKey,
    NumberLit,
    StockflowError,
    TIME_KEY,
    Unary,
    VarRef,
)


class VarKind(Enum):
    STOCK = "stock"
    CONSTANT = "constant"
    CONTROL = "control"
    AUXILIARY = "auxiliary"


class SiteKind(Enum):
    INTEG_STATE = "IntegState"
    SMOOTH_STATE = "SmoothState"
    DELAY_BUFFER = "DelayBuffer"
    RNG_STREAM = "RngStream"


_SITE_KIND_FOR = {
    BuiltinKind.INTEG: SiteKind.INTEG_STATE,
    BuiltinKind.SMOOTH: SiteKind.SMOOTH_STATE,
    BuiltinKind.SMOOTHI: SiteKind.SMOOTH_STATE,
    BuiltinKind.DELAY_FIXED: SiteKind.DELAY_BUFFER,
    BuiltinKind.RANDOM_UNIFORM: SiteKind.RNG_STREAM,
}


@dataclass(frozen=True)
class StateSite:
    site_id: int  # dense, 0-based, in equation order then left-to-right
    kind: SiteKind
    owner: NameKey


@dataclass(frozen=True)
class LoopDiagnostic:
    cycle: tuple[NameKey, ...]
    phase: str  # StepTime or InitTime
    hint: str

    def __str__(self) -> str:
        chain = " -> ".join(n.canonical for n in self.cycle)
        return f"{self.phase} loop: {chain} ({self.hint})"


@dataclass(frozen=True)
class UndefinedVariable:
    name: NameKey
    used_by: NameKey

    def __str__(self) -> str:
        return f"undefined variable '{self.name.canonical}' referenced by '{self.used_by.canonical}'"


@dataclass(frozen=True)
class NonConstantArg:
    builtin: BuiltinKind
    owner: NameKey
    which: str

    def __str__(self) -> str:
        return (
            f"the {self.which} argument of {self.builtin.keyword} in "
            f"'{self.owner.canonical}' must be a constant expression"
        )


Diagnostic = LoopDiagnostic | UndefinedVariable | NonConstantArg


class AnalysisError(StockflowError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class ClassifiedModel:
    ast: ModelAst
    kinds: dict[str, VarKind]
    step_order: tuple[NameKey, ...]  # auxiliaries only
    init_order: tuple[NameKey, ...]  # every variable
    state_sites: tuple[StateSite, ...]
    warnings: tuple[str, ...]
    flows: frozenset[str]  # auxiliaries referenced by INTEG net-flow expressions

    def kind_of(self, key: str) -> VarKind | None:
        return self.kinds.get(key)

    def equation_for(self, key: str) -> Equation | None:
        return self.ast.equation_for(key)


def _is_const_expr(e: Expr, const_keys: set[str]) -> bool:
    """Foldable at compile time: literals, arithmetic, MAX/MIN and constant refs."""
    if isinstance(e, NumberLit):
        return True
    if isinstance(e, VarRef):
        return e.name.key in const_keys
    if isinstance(e, Unary):
        return _is_const_expr(e.operand, const_keys)
    if isinstance(e, Binary):
        return _is_const_expr(e.lhs, const_keys) and _is_const_expr(e.rhs, const_keys)
    if isinstance(e, Call) and e.builtin in (BuiltinKind.MAX, BuiltinKind.MIN):
        return all(_is_const_expr(a, const_keys) for a in e.args)
    return False


def _step_reads(e: Expr, out: list[NameKey]) -> None:
    # Stateful builtin arguments are not same-step reads: their value within
    # a step comes from the state slot, so traversal stops there.
    if isinstance(e, VarRef):
        out.append(e.name)
    elif isinstance(e, Unary):
        _step_reads(e.operand, out)
    elif isinstance(e, (Binary, Compare)):
        _step_reads(e.lhs, out)
        _step_reads(e.rhs, out)
    elif isinstance(e, Call):
        if e.builtin in (
            BuiltinKind.SMOOTH,
            BuiltinKind.SMOOTHI,
            BuiltinKind.DELAY_FIXED,
            BuiltinKind.RANDOM_UNIFORM,
            BuiltinKind.INTEG,
        ):
            return
        for a in e.args:
            _step_reads(a, out)


def _init_reads(e: Expr, out: list[NameKey]) -> None:
    # What must already hold a value at t0 before this expression's initial
    # value can be computed.
    if isinstance(e, VarRef):
        out.append(e.name)
    elif isinstance(e, Unary):
        _init_reads(e.operand, out)
    elif isinstance(e, (Binary, Compare)):
        _init_reads(e.lhs, out)
        _init_reads(e.rhs, out)
    elif isinstance(e, Call):
        if e.builtin is BuiltinKind.INTEG:
            _init_reads(e.args[1], out)
        elif e.builtin is BuiltinKind.SMOOTH:
            _init_reads(e.args[0], out)
        elif e.builtin in (BuiltinKind.SMOOTHI, BuiltinKind.DELAY_FIXED):
            _init_reads(e.args[2], out)
        elif e.builtin is BuiltinKind.RANDOM_UNIFORM:
            _init_reads(e.args[0], out)
            _init_reads(e.args[1], out)
        else:
            for a in e.args:
                _init_reads(a, out)


def _collect_sites(ast: ModelAst) -> list[StateSite]:
    sites: list[StateSite] = []

    def walk(e: Expr, owner: NameKey) -> None:
        if isinstance(e, Call):
            kind = _SITE_KIND_FOR.get(e.builtin)
            if kind is not None:
                sites.append(StateSite(len(sites), kind, owner))
            for a in e.args:
                walk(a, owner)
        elif isinstance(e, Unary):
            walk(e.operand, owner)
        elif isinstance(e, (Binary, Compare)):
            walk(e.lhs, owner)
            walk(e.rhs, owner)

    for eq in ast.equations:
        walk(eq.rhs, eq.name)
    return sites


def _uses_compare_eq(e: Expr) -> bool:
    if isinstance(e, Compare):
        return e.op == "=" or _uses_compare_eq(e.lhs) or _uses_compare_eq(e.rhs)
    if isinstance(e, Unary):
        return _uses_compare_eq(e.operand)
    if isinstance(e, Binary):
        return _uses_compare_eq(e.lhs) or _uses_compare_eq(e.rhs)
    if isinstance(e, Call):
        return any(_uses_compare_eq(a) for a in e.args)
    return False


def _topo_order(
    nodes: list[NameKey], edges: dict[str, set[str]], index_of: dict[str, int]
) -> tuple[list[NameKey], list[NameKey] | None]:
    """Kahn's algorithm, deterministic by equation order.

    Returns (order, cycle) where cycle is None when the graph is acyclic.
    ``edges[a]`` holds the keys a depends on (must come before a).
    """
    by_key = {n.key: n for n in nodes}
    indegree = {n.key: 0 for n in nodes}
    dependents: dict[str, list[str]] = {n.key: [] for n in nodes}
    for key, deps in edges.items():
        for dep in deps:
            if dep in indegree:
                indegree[key] += 1
                dependents[dep].append(key)
    ready = [(index_of[k], k) for k, deg in indegree.items() if deg == 0]
    heapq.heapify(ready)
    order: list[NameKey] = []
    while ready:
        _, key = heapq.heappop(ready)
        order.append(by_key[key])
        for dep in dependents[key]:
            indegree[dep] -= 1
            if indegree[dep] == 0:
                heapq.heappush(ready, (index_of[dep], dep))
    if len(order) == len(nodes):
        return order, None
    remaining = {k for k, deg in indegree.items() if deg > 0}
    return order, _find_cycle(remaining, edges, by_key, index_of)


def _find_cycle(
    remaining: set[str],
    edges: dict[str, set[str]],
    by_key: dict[str, NameKey],
    index_of: dict[str, int],
) -> list[NameKey]:
    start = min(remaining, key=lambda k: index_of[k])
    path: list[str] = []
    on_path: dict[str, int] = {}
    node = start
    while node not in on_path:
        on_path[node] = len(path)
        path.append(node)
        node = min(
            (d for d in edges.get(node, ()) if d in remaining),
            key=lambda k: index_of[k],
        )
    cycle = path[on_path[node] :]
    return [by_key[k] for k in cycle]


def classify(ast: ModelAst) -> ClassifiedModel:
    """Assign kinds, build both dependency graphs and evaluation orders.

    Raises AnalysisError carrying every diagnostic found: undefined
    references, non-constant DELAY FIXED delays or RANDOM UNIFORM seeds,
    and algebraic (step-time) or initialization loops.
    """
    diagnostics: list[Diagnostic] = []
    warnings: list[str] = []

    defined: dict[str, Equation] = {eq.name.key: eq for eq in ast.equations}
    index_of = {eq.name.key: i for i, eq in enumerate(ast.equations)}

    for eq in ast.equations:
        for ref in sorted(
            {r for r in _free_vars_ordered(eq.rhs)}, key=lambda n: n.key
        ):
            if ref.key not in defined and ref.key != TIME_KEY:
                diagnostics.append(UndefinedVariable(ref, eq.name))
    for d in ast.directives:
        if d.target.key not in defined:
            diagnostics.append(UndefinedVariable(d.target, d.target))

    # Kinds: controls by name, stocks by top-level INTEG, constants by a
    # foldability fixpoint, auxiliaries otherwise.
    kinds: dict[str, VarKind] = {}
    for eq in ast.equations:
        if eq.name.key in CONTROL_KEYS:
            kinds[eq.name.key] = VarKind.CONTROL
        elif isinstance(eq.rhs, Call) and eq.rhs.builtin is BuiltinKind.INTEG:
            kinds[eq.name.key] = VarKind.STOCK

    const_keys = set(CONTROL_KEYS) & set(defined)
    changed = True
    while changed:
        changed = False
        for eq in ast.equations:
            if eq.name.key in kinds or eq.name.key in const_keys:
                continue
            if _is_const_expr(eq.rhs, const_keys):
                const_keys.add(eq.name.key)
                changed = True
    for key in const_keys:
        kinds.setdefault(key, VarKind.CONSTANT)
    for eq in ast.equations:
        kinds.setdefault(eq.name.key, VarKind.AUXILIARY)

    # Stateful-builtin argument constraints.
    for eq in ast.equations:
        for call, which, arg_idx in _constant_arg_requirements(eq.rhs):
            if not _is_const_expr(call.args[arg_idx], const_keys):
                diagnostics.append(NonConstantArg(call.builtin, eq.name, which))

    for eq in ast.equations:
        if _uses_compare_eq(eq.rhs):
            warnings.append(
                f"'{eq.name.canonical}' compares floats with '=', which is numerically fragile"
            )
    for d in ast.directives:
        kind = kinds.get(d.target.key)
        if kind not in (VarKind.CONSTANT, VarKind.CONTROL, VarKind.STOCK, None):
            warnings.append(
                f"slider targets '{d.target.canonical}', which is not a constant or stock"
            )

    # Step-time graph over auxiliaries.
    aux = [eq.name for eq in ast.equations if kinds[eq.name.key] is VarKind.AUXILIARY]
    aux_keys = {n.key for n in aux}
    step_edges: dict[str, set[str]] = {}
    for eq in ast.equations:
        if kinds[eq.name.key] is not VarKind.AUXILIARY:
            continue
        reads: list[NameKey] = []
        _step_reads(eq.rhs, reads)
        step_edges[eq.name.key] = {r.key for r in reads if r.key in aux_keys}
    step_order, cycle = _topo_order(aux, step_edges, index_of)
    if cycle is not None:
        diagnostics.append(
            LoopDiagnostic(
                tuple(cycle),
                "StepTime",
                "break the algebraic loop with a stock or a state function "
                "(SMOOTH, DELAY FIXED)",
            )
        )

    # Initialization graph over every variable.
    all_names = [eq.name for eq in ast.equations]
    init_edges: dict[str, set[str]] = {}
    for eq in ast.equations:
        reads = []
        _init_reads(eq.rhs, reads)
        init_edges[eq.name.key] = {r.key for r in reads if r.key in defined}
    init_order, cycle = _topo_order(all_names, init_edges, index_of)
    if cycle is not None:
        diagnostics.append(
            LoopDiagnostic(
                tuple(cycle),
                "InitTime",
                "replace SMOOTH with SMOOTHI or give an explicit initial value",
            )
        )

    if diagnostics:
        raise AnalysisError(diagnostics)

    flows: set[str] = set()
    for eq in ast.equations:
        if kinds[eq.name.key] is VarKind.STOCK:
            for ref in _free_vars_ordered(eq.rhs.args[0]):
                if kinds.get(ref.key) is VarKind.AUXILIARY:
                    flows.add(ref.key)

    return ClassifiedModel(
        ast=ast,
        kinds=kinds,
        step_order=tuple(step_order),
        init_order=tuple(init_order),
        state_sites=tuple(_collect_sites(ast)),
        warnings=tuple(warnings),
        flows=frozenset(flows),
    )


def _constant_arg_requirements(e: Expr):
    """Yield (call, description, arg index) for args that must fold to constants."""
    if isinstance(e, Call):
        if e.builtin is BuiltinKind.DELAY_FIXED:
            yield e, "delay", 1
        elif e.builtin is BuiltinKind.RANDOM_UNIFORM:
            yield e, "seed", 2
        for a in e.args:
            yield from _constant_arg_requirements(a)
    elif isinstance(e, Unary):
        yield from _constant_arg_requirements(e.operand)
    elif isinstance(e, (Binary, Compare)):
        yield from _constant_arg_requirements(e.lhs)
        yield from _constant_arg_requirements(e.rhs)


def _free_vars_ordered(e: Expr) -> list[NameKey]:
    """Structural reads in left-to-right reading order, duplicates removed."""
    out: list[NameKey] = []
    seen: set[str] = set()

    def walk(node: Expr) -> None:
        if isinstance(node, VarRef):
            if node.name.key not in seen:
                seen.add(node.name.key)
                out.append(node.name)
        elif isinstance(node, Unary):
            walk(node.operand)
        elif isinstance(node, (Binary, Compare)):
            walk(node.lhs)
            walk(node.rhs)
        elif isinstance(node, Call):
            for a in node.args:
                walk(a)

    walk(e)
    return out


# --- causes / uses trees ------------------------------------------------------


@dataclass
class TextTree:
    name: NameKey
    children: list["TextTree"] = field(default_factory=list)
    marker: str = ""  # "(loop)" on a repeated node, "(flow)" annotation

    def child_names(self) -> list[str]:
        return [c.name.key for c in self.children]

    def render(self) -> str:
        lines: list[str] = []
        self._render(lines, 0)
        return "\n".join(lines) + "\n"

    def _render(self, lines: list[str], depth: int) -> None:
        label = self.name.canonical
        if self.marker:
            label = f"{label} {self.marker}"
        lines.append("  " * depth + label)
        for child in self.children:
            child._render(lines, depth + 1)


class UnknownVariableError(StockflowError, KeyError):
    def __str__(self) -> str:  # KeyError would repr() the message
        return Exception.__str__(self)


def _tree_marker(m: ClassifiedModel, key: str) -> str:
    return "(flow)" if key in m.flows else ""


def causes_tree(m: ClassifiedModel, var: NameKey, depth: int) -> TextTree:
    """Tree of the variables feeding into var, to the given depth.

    Expansion stops at constants and at nodes already on the current path,
    which are marked "(loop)".
    """
    if var.key not in m.kinds and var.key != TIME_KEY:
        raise UnknownVariableError(f"unknown variable '{var.canonical}'")
    if depth < 1:
        raise ValueError("depth must be >= 1")

    def children_of(key: str) -> list[NameKey]:
        eq = m.equation_for(key)
        return [] if eq is None else _free_vars_ordered(eq.rhs)

    def build(name: NameKey, level: int, path: set[str], root: bool) -> TextTree:
        node = TextTree(name, marker=_tree_marker(m, name.key))
        if name.key in path:
            node.marker = "(loop)"
            return node
        if level >= depth:
            return node
        if not root and m.kinds.get(name.key) in (VarKind.CONSTANT, VarKind.CONTROL):
            return node
        if name.key not in m.kinds:  # "time" or other pseudo-leaf
            return node
        path = path | {name.key}
        node.children = [build(c, level + 1, path, False) for c in children_of(name.key)]
        return node

    return build(var, 0, set(), True)


def uses_tree(m: ClassifiedModel, var: NameKey, depth: int) -> TextTree:
    """Mirror of causes_tree over reversed edges: who reads var, transitively."""
    if var.key not in m.kinds and var.key != TIME_KEY:
        raise UnknownVariableError(f"unknown variable '{var.canonical}'")
    if depth < 1:
        raise ValueError("depth must be >= 1")

    users: dict[str, list[NameKey]] = {}
    for eq in m.ast.equations:
        for ref in _free_vars_ordered(eq.rhs):
            users.setdefault(ref.key, []).append(eq.name)

    def build(name: NameKey, level: int, path: set[str], root: bool) -> TextTree:
        node = TextTree(name, marker=_tree_marker(m, name.key))
        if name.key in path:
            node.marker = "(loop)"
            return node
        if level >= depth:
            return node
        if not root and m.kinds.get(name.key) in (VarKind.CONSTANT, VarKind.CONTROL):
            return node
        path = path | {name.key}
        node.children = [
            build(u, level + 1, path, False) for u in users.get(name.key, [])
        ]
        return node

    return build(var, 0, set(), True)
