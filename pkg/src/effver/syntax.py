"""Abstract syntax for the mini-ML surface language and its spec sublanguage.

Expressions and specification terms share one node hierarchy; term-only
forms (quantifiers, `old`, `result`, `reply`, implication) are rejected by
the type checker when they occur in program positions.  Nodes compare by
identity and carry a source span.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NO_SPAN = Span(0, 0, 0, 0)


# ---------------------------------------------------------------------------
# Types


class Type:
    pass


@dataclass(frozen=True)
class TInt(Type):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class TBool(Type):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class TUnit(Type):
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class TCon(Type):
    """A user-declared algebraic data type, referenced by name."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TRef(Type):
    elem: Type

    def __str__(self) -> str:
        return f"{atom_str(self.elem)} ref"


@dataclass(frozen=True)
class TArray(Type):
    elem: Type

    def __str__(self) -> str:
        return f"{atom_str(self.elem)} array"


@dataclass(frozen=True)
class TList(Type):
    elem: Type

    def __str__(self) -> str:
        return f"{atom_str(self.elem)} list"


@dataclass(frozen=True)
class TArrow(Type):
    param: Type
    result: Type

    def __str__(self) -> str:
        return f"{atom_str(self.param)} -> {self.result}"


def atom_str(t: Type) -> str:
    s = str(t)
    return f"({s})" if isinstance(t, TArrow) else s


INT = TInt()
BOOL = TBool()
UNIT = TUnit()


def arrow_chain(t: Type) -> tuple[list[Type], Type]:
    """Uncurry an arrow chain into (parameter list, final result)."""
    params: list[Type] = []
    while isinstance(t, TArrow):
        params.append(t.param)
        t = t.result
    return params, t


def make_arrow(params: list[Type], result: Type) -> Type:
    for p in reversed(params):
        result = TArrow(p, result)
    return result


# ---------------------------------------------------------------------------
# Expressions / terms


@dataclass(eq=False)
class Expr:
    span: Span = field(default=NO_SPAN, kw_only=True)


@dataclass(eq=False)
class Lit(Expr):
    value: Union[int, bool, None]  # None encodes ()


@dataclass(eq=False)
class Var(Expr):
    name: str


@dataclass(eq=False)
class Unop(Expr):
    op: str  # 'not' | '-' | '!'
    arg: Expr


@dataclass(eq=False)
class Binop(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(eq=False)
class Assign(Expr):
    """`x := e` where x names a top-level reference."""

    name: str
    value: Expr


@dataclass(eq=False)
class ArrayGet(Expr):
    array: str
    index: Expr


@dataclass(eq=False)
class ArraySet(Expr):
    array: str
    index: Expr
    value: Expr


@dataclass(eq=False)
class ArrayLen(Expr):
    array: str


@dataclass(eq=False)
class Constr(Expr):
    name: str
    args: list[Expr]


@dataclass(eq=False)
class ListLit(Expr):
    items: list[Expr]


@dataclass(eq=False)
class App(Expr):
    callee: Expr
    args: list[Expr]


@dataclass(eq=False)
class Param:
    name: str
    type: Optional[Type]
    ghost: bool = False
    span: Span = NO_SPAN


@dataclass(eq=False)
class LetIn(Expr):
    name: str
    params: list[Param]
    rettype: Optional[Type]
    rec: bool
    bound: Expr
    spec: Optional["SpecClauses"]
    body: Expr


@dataclass(eq=False)
class Fun(Expr):
    params: list[Param]
    rettype: Optional[Type]
    spec: Optional["SpecClauses"]
    body: Expr


@dataclass(eq=False)
class If(Expr):
    cond: Expr
    then: Expr
    els: Expr


@dataclass(eq=False)
class Seq(Expr):
    first: Expr
    second: Expr


class Pattern:
    pass


@dataclass(eq=False)
class PWild(Pattern):
    span: Span = NO_SPAN


@dataclass(eq=False)
class PVar(Pattern):
    name: str
    span: Span = NO_SPAN


@dataclass(eq=False)
class PLit(Pattern):
    value: Union[int, bool, None]
    span: Span = NO_SPAN


@dataclass(eq=False)
class PConstr(Pattern):
    name: str  # includes '::' and '[]' for lists
    args: list[Pattern] = field(default_factory=list)
    span: Span = NO_SPAN


@dataclass(eq=False)
class Match(Expr):
    scrutinee: Expr
    branches: list[tuple[Pattern, Expr]]


@dataclass(eq=False)
class EffBranch:
    effect: str
    payload: list[str]  # binders for the effect arguments
    k: str
    body: Expr
    span: Span = NO_SPAN


@dataclass(eq=False)
class TryHandle(Expr):
    scrutinee: Expr
    branches: list[EffBranch]
    value_branch: Optional[tuple[str, Expr]]
    spec: Optional["HandlerSpec"]


@dataclass(eq=False)
class Perform(Expr):
    effect: str
    args: list[Expr]


@dataclass(eq=False)
class Continue(Expr):
    k: str
    arg: Expr


# --- term-only forms -------------------------------------------------------


@dataclass(eq=False)
class Old(Expr):
    arg: Expr


@dataclass(eq=False)
class ResultVar(Expr):
    pass


@dataclass(eq=False)
class ReplyVar(Expr):
    pass


@dataclass(eq=False)
class Quant(Expr):
    kind: str  # 'forall' | 'exists'
    binders: list[tuple[str, Type]]
    body: Expr


Term = Expr


# ---------------------------------------------------------------------------
# Specification clauses and declarations


@dataclass(eq=False)
class Protocol:
    effect: str
    params: list[tuple[str, Type]]
    requires: list[Term]
    ensures: list[Term]
    modifies: list[str]
    span: Span = NO_SPAN
    local_owner: Optional[str] = None  # set for protocols declared in a function spec


@dataclass(eq=False)
class SpecClauses:
    requires: list[Term] = field(default_factory=list)
    ensures: list[Term] = field(default_factory=list)
    modifies: list[str] = field(default_factory=list)
    performs: list[str] = field(default_factory=list)
    variant: Optional[Term] = None
    protocols: list[Protocol] = field(default_factory=list)
    span: Span = NO_SPAN


@dataclass(eq=False)
class HandlerSpec:
    try_ensures: list[Term] = field(default_factory=list)
    returns: Optional[Type] = None
    span: Span = NO_SPAN


class Decl:
    pass


@dataclass(eq=False)
class DEffect(Decl):
    name: str
    signature: Type
    span: Span = NO_SPAN


@dataclass(eq=False)
class DType(Decl):
    name: str
    constructors: list[tuple[str, list[Type]]]
    span: Span = NO_SPAN


@dataclass(eq=False)
class DGlobal(Decl):
    """Top-level mutable state: `let x : t ref = ref e` or an array `make`."""

    name: str
    type: Type  # TRef or TArray
    init: Expr
    size: Optional[int] = None  # static array size
    span: Span = NO_SPAN


@dataclass(eq=False)
class DFun(Decl):
    name: str
    params: list[Param]
    rettype: Optional[Type]
    rec: bool
    body: Expr
    spec: Optional[SpecClauses]
    span: Span = NO_SPAN


@dataclass(eq=False)
class DProtocol(Decl):
    protocol: Protocol
    span: Span = NO_SPAN


@dataclass(eq=False)
class SourceProgram:
    decls: list[Decl]

    def effects(self) -> list[DEffect]:
        return [d for d in self.decls if isinstance(d, DEffect)]

    def functions(self) -> list[DFun]:
        return [d for d in self.decls if isinstance(d, DFun)]

    def globals(self) -> list[DGlobal]:
        return [d for d in self.decls if isinstance(d, DGlobal)]


# ---------------------------------------------------------------------------
# Structural equality modulo spans (used by the round-trip tests)


def _fields_of(node):
    if isinstance(node, Expr):
        d = dict(vars(node))
        d.pop("span", None)
        return d
    return None


def ast_eq(a, b) -> bool:
    """Structural equality of AST pieces, ignoring source spans."""
    if type(a) is not type(b):
        return False
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(ast_eq(x, y) for x, y in zip(a, b))
    if isinstance(a, (Expr, Pattern, Param, SpecClauses, HandlerSpec, Protocol,
                      Decl, SourceProgram, EffBranch)):
        da, db = dict(vars(a)), dict(vars(b))
        da.pop("span", None)
        db.pop("span", None)
        if da.keys() != db.keys():
            return False
        return all(ast_eq(da[k], db[k]) for k in da)
    return a == b


def walk_exprs(e: Expr):
    """Yield every expression node reachable from e, including e."""
    yield e
    for v in vars(e).values():
        if isinstance(v, Expr):
            yield from walk_exprs(v)
        elif isinstance(v, list):
            for item in v:
                if isinstance(item, Expr):
                    yield from walk_exprs(item)
                elif isinstance(item, tuple):
                    for sub in item:
                        if isinstance(sub, Expr):
                            yield from walk_exprs(sub)
                elif isinstance(item, EffBranch):
                    yield from walk_exprs(item.body)
