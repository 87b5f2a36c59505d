"""First-order formula and term representation used by the target IR,
the VC generator, and the SMT printer.

Formulas are immutable trees.  Specification formulas stored on IR
declarations use the reserved variables `state`, `old_state`, `result`
and the declaration's parameter names as slots; the VC generator
instantiates them by substitution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .syntax import Type


class Formula:
    pass


@dataclass(frozen=True)
class FVar(Formula):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class FInt(Formula):
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class FBool(Formula):
    value: bool

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class FUnit(Formula):
    def __str__(self) -> str:
        return "()"


@dataclass(frozen=True)
class FApp(Formula):
    """Application of a builtin operator, predicate, constructor or
    selector.  Builtins: and or not -> <-> = < <= > >= + - * div mod neg
    ite select store."""

    op: str
    args: tuple[Formula, ...]

    def __str__(self) -> str:
        from .target import pp_formula
        return pp_formula(self)


@dataclass(frozen=True)
class FField(Formula):
    """State record field access: `rec._x`."""

    record: Formula
    var: str

    def __str__(self) -> str:
        return f"{self.record}._{self.var}"


@dataclass(frozen=True)
class FMkState(Formula):
    """A state record literal over all state vars, in model order."""

    fields: tuple[Formula, ...]

    def __str__(self) -> str:
        from .target import pp_formula
        return pp_formula(self)


@dataclass(frozen=True)
class FQuant(Formula):
    kind: str  # 'forall' | 'exists'
    binders: tuple[tuple[str, "IRType"], ...]
    body: Formula
    trigger: Optional[Formula] = None

    def __str__(self) -> str:
        from .target import pp_formula
        return pp_formula(self)


TRUE = FBool(True)
FALSE = FBool(False)


def fand(*fs: Formula) -> Formula:
    parts = [f for f in fs if f != TRUE]
    if not parts:
        return TRUE
    if any(f == FALSE for f in parts):
        return FALSE
    result = parts[0]
    for f in parts[1:]:
        result = FApp("and", (result, f))
    return result


def fimplies(a: Formula, b: Formula) -> Formula:
    if a == TRUE:
        return b
    if b == TRUE:
        return TRUE
    return FApp("->", (a, b))


def fnot(a: Formula) -> Formula:
    if a == TRUE:
        return FALSE
    if a == FALSE:
        return TRUE
    return FApp("not", (a,))


def fiff(a: Formula, b: Formula) -> Formula:
    return FApp("<->", (a, b))


def feq(a: Formula, b: Formula) -> Formula:
    if a == b:
        return TRUE
    return FApp("=", (a, b))


def subst(f: Formula, mapping: dict[str, Formula]) -> Formula:
    """Capture-avoiding substitution of free variables.

    Binder names are drawn from a reserved namespace (`q@...`), so they
    never collide with substituted terms.
    """
    if isinstance(f, FVar):
        return mapping.get(f.name, f)
    if isinstance(f, (FInt, FBool, FUnit)):
        return f
    if isinstance(f, FApp):
        return FApp(f.op, tuple(subst(a, mapping) for a in f.args))
    if isinstance(f, FField):
        return FField(subst(f.record, mapping), f.var)
    if isinstance(f, FMkState):
        return FMkState(tuple(subst(a, mapping) for a in f.fields))
    if isinstance(f, FQuant):
        inner = {k: v for k, v in mapping.items()
                 if k not in {n for n, _ in f.binders}}
        trig = subst(f.trigger, inner) if f.trigger is not None else None
        return FQuant(f.kind, f.binders, subst(f.body, inner), trig)
    raise AssertionError(type(f))


def free_vars(f: Formula, acc: Optional[set] = None,
              bound: frozenset = frozenset()) -> set[str]:
    if acc is None:
        acc = set()
    if isinstance(f, FVar):
        if f.name not in bound:
            acc.add(f.name)
    elif isinstance(f, FApp):
        for a in f.args:
            free_vars(a, acc, bound)
    elif isinstance(f, FField):
        free_vars(f.record, acc, bound)
    elif isinstance(f, FMkState):
        for a in f.fields:
            free_vars(a, acc, bound)
    elif isinstance(f, FQuant):
        inner = bound | {n for n, _ in f.binders}
        free_vars(f.body, acc, inner)
        if f.trigger is not None:
            free_vars(f.trigger, acc, inner)
    return acc


def simplify_formula(f: Formula) -> Formula:
    """Equisatisfiable simplification: constant folding and and-true
    elimination."""
    if isinstance(f, FApp):
        args = tuple(simplify_formula(a) for a in f.args)
        if f.op == "and":
            return fand(*args)
        if f.op == "or":
            parts = [a for a in args if a != FALSE]
            if any(a == TRUE for a in parts):
                return TRUE
            if not parts:
                return FALSE
            result = parts[0]
            for a in parts[1:]:
                result = FApp("or", (result, a))
            return result
        if f.op == "->":
            return fimplies(args[0], args[1])
        if f.op == "not":
            return fnot(args[0])
        if f.op == "<->":
            a, b = args
            if a == TRUE:
                return b
            if b == TRUE:
                return a
            if a == b:
                return TRUE
            return FApp("<->", (a, b))
        if f.op == "=":
            return feq(args[0], args[1])
        if f.op == "ite" and args[0] in (TRUE, FALSE):
            return args[1] if args[0] == TRUE else args[2]
        if f.op == "+" and all(isinstance(a, FInt) for a in args):
            return FInt(args[0].value + args[1].value)
        if f.op == "-" and all(isinstance(a, FInt) for a in args):
            return FInt(args[0].value - args[1].value)
        if f.op == "*" and all(isinstance(a, FInt) for a in args):
            return FInt(args[0].value * args[1].value)
        if f.op in ("<", "<=", ">", ">=") and all(isinstance(a, FInt) for a in args):
            x, y = args[0].value, args[1].value
            return FBool({"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[f.op])
        return FApp(f.op, args)
    if isinstance(f, FQuant):
        body = simplify_formula(f.body)
        if body in (TRUE, FALSE):
            return body
        return FQuant(f.kind, f.binders, body, f.trigger)
    if isinstance(f, FMkState):
        return FMkState(tuple(simplify_formula(a) for a in f.fields))
    if isinstance(f, FField):
        rec = simplify_formula(f.record)
        if isinstance(rec, FMkState):
            # field access on a literal record is resolved positionally by
            # the caller; kept as-is here because the index needs the model
            return FField(rec, f.var)
        return FField(rec, f.var)
    return f
