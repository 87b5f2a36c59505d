"""Type checking, effect-row checking, and the global state model.

Checking is bidirectional and monomorphic: named functions carry full
annotations, anonymous functions may omit them where the expected type is
known.  Effect rows are declared via `performs` and checked, never
inferred.  Continuations are second class: a continuation identifier may
only appear as the first argument of `continue`, at most once per control
path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import SemaError
from .syntax import (
    App, ArrayGet, ArrayLen, ArraySet, Assign, Binop, Constr, Continue,
    DEffect, DFun, DGlobal, DProtocol, DType, EffBranch, Expr, Fun,
    HandlerSpec, If, LetIn, ListLit, Lit, Match, Old, Param, Pattern,
    PConstr, Perform, PLit, Protocol, PVar, PWild, Quant, ReplyVar,
    ResultVar, Seq, SourceProgram, Span, SpecClauses, TArray, TArrow, TBool,
    TCon, TInt, TList, TRef, TryHandle, TUnit, Type, Unop, Var,
    arrow_chain, make_arrow, BOOL, INT, UNIT,
)

RESERVED_PREFIXES = ("perform_", "pre_", "post_", "gen_")
RESERVED_NAMES = {"state", "old_state", "state_old", "init_state",
                  "eff_state", "result", "reply", "arg", "ref", "length"}

CMP_OPS = ("=", "<>", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*", "/", "mod")
LOGIC_OPS = ("&&", "||", "->", "<->")


@dataclass
class StateModel:
    """Top-level mutable variables, in declaration order."""

    vars: list[tuple[str, Type]]
    sizes: dict[str, int] = field(default_factory=dict)

    def names(self) -> list[str]:
        return [n for n, _ in self.vars]

    def type_of(self, name: str) -> Type:
        for n, t in self.vars:
            if n == name:
                return t
        raise KeyError(name)


@dataclass
class EffectInfo:
    name: str
    arg_types: list[Type]
    reply: Type
    decl: DEffect


@dataclass
class FunInfo:
    name: str
    params: list[Param]
    rettype: Type
    spec: Optional[SpecClauses]
    decl: object  # DFun or LetIn
    toplevel: bool


@dataclass
class TypedProgram:
    program: SourceProgram
    types: dict[int, Type]
    effect_rows: dict[str, frozenset]
    state: StateModel = None
    effects: dict[str, EffectInfo] = field(default_factory=dict)
    adts: dict[str, DType] = field(default_factory=dict)
    constructors: dict[str, tuple[str, list[Type]]] = field(default_factory=dict)
    protocols: dict[str, Protocol] = field(default_factory=dict)  # global only
    funs: dict[str, FunInfo] = field(default_factory=dict)
    latent_rows: dict[Type, frozenset] = field(default_factory=dict)
    writes: dict[str, frozenset] = field(default_factory=dict)

    def type_of(self, node) -> Type:
        return self.types[id(node)]


@dataclass
class _Binding:
    type: Type
    kind: str  # 'local' | 'param' | 'routine' | 'continuation'
    extra: object = None


class Checker:
    def __init__(self, program: SourceProgram):
        self.program = program
        self.types: dict[int, Type] = {}
        self.effects: dict[str, EffectInfo] = {}
        self.adts: dict[str, DType] = {}
        self.constructors: dict[str, tuple[str, list[Type]]] = {}
        self.global_protocols: dict[str, Protocol] = {}
        self.state_vars: list[tuple[str, Type]] = []
        self.state_sizes: dict[str, int] = {}
        self.funs: dict[str, FunInfo] = {}
        self.declared_rows: dict[str, frozenset] = {}
        self.term_calls: list[tuple[str, Span]] = []
        self.fun_nodes: list[Fun] = []
        self.all_fun_bodies: list[tuple[str, Expr, Optional[SpecClauses]]] = []

    # == entry points ======================================================

    def check_program(self) -> TypedProgram:
        self.collect_decls()
        for d in self.program.decls:
            if isinstance(d, DFun):
                self.check_fun_decl(d, toplevel=True)
        tp = TypedProgram(
            program=self.program,
            types=self.types,
            effect_rows=dict(self.declared_rows),
            state=StateModel(self.state_vars, self.state_sizes),
            effects=self.effects,
            adts=self.adts,
            constructors=self.constructors,
            protocols=self.global_protocols,
            funs=self.funs,
        )
        check_effect_rows(tp)
        compute_writes(tp)
        self.check_spec_purity(tp)
        return tp

    # == declaration tables ================================================

    def reject_reserved(self, name: str, span: Span):
        if name.startswith(RESERVED_PREFIXES) or name in RESERVED_NAMES:
            raise SemaError(f"identifier {name!r} uses a reserved name", span)

    def collect_decls(self):
        from .translate import effect_type_split

        seen: set[str] = set()
        for d in self.program.decls:
            if isinstance(d, DType):
                if d.name in self.adts:
                    raise SemaError(f"duplicate type {d.name!r}", d.span)
                self.adts[d.name] = d
                for cname, args in d.constructors:
                    if cname in self.constructors:
                        raise SemaError(f"duplicate constructor {cname!r}", d.span)
                    self.constructors[cname] = (d.name, args)
            elif isinstance(d, DEffect):
                if d.name in self.effects:
                    raise SemaError(f"duplicate effect {d.name!r}", d.span)
                if self.signature_mentions_effect(d.signature):
                    raise SemaError("effect payloads must be first order", d.span)
                args, reply = effect_type_split(d.signature)
                self.effects[d.name] = EffectInfo(d.name, args, reply, d)
            elif isinstance(d, DGlobal):
                self.reject_reserved(d.name, d.span)
                if any(n == d.name for n, _ in self.state_vars):
                    raise SemaError(f"duplicate global {d.name!r}", d.span)
                self.check_global(d)
            elif isinstance(d, DProtocol):
                self.register_protocol(d.protocol, local_owner=None)
            elif isinstance(d, DFun):
                self.reject_reserved(d.name, d.span)
                if d.name in self.funs:
                    raise SemaError(f"duplicate function {d.name!r}", d.span)
                if d.name in seen:
                    raise SemaError(f"duplicate definition {d.name!r}", d.span)
                self.predeclare_fun(d)
            seen.add(getattr(d, "name", ""))
        # protocol parameter types come from the effect signature
        for proto in self.global_protocols.values():
            self.resolve_protocol_params(proto)

    def signature_mentions_effect(self, t: Type) -> bool:
        if isinstance(t, TCon):
            return t.name in self.effects
        if isinstance(t, TArrow):
            return (self.signature_mentions_effect(t.param)
                    or self.signature_mentions_effect(t.result))
        if isinstance(t, (TRef, TArray, TList)):
            return self.signature_mentions_effect(t.elem)
        return False

    def check_global(self, d: DGlobal):
        if isinstance(d.type, TRef):
            self.check_expr(d.init, Env(self, None), expect=d.type.elem)
        else:
            assert isinstance(d.type, TArray)
            if d.size is None or d.size <= 0:
                raise SemaError("array definitions need a positive size", d.span)
            self.check_expr(d.init, Env(self, None), expect=d.type.elem)
            self.state_sizes[d.name] = d.size
        self.state_vars.append((d.name, d.type))

    def register_protocol(self, proto: Protocol, local_owner: Optional[str]):
        if proto.effect not in self.effects:
            raise SemaError(f"protocol for undeclared effect {proto.effect!r}",
                            proto.span)
        if proto.effect in self.global_protocols:
            raise SemaError(
                f"effect {proto.effect!r} already has a protocol", proto.span)
        proto.local_owner = local_owner
        if local_owner is None:
            self.global_protocols[proto.effect] = proto

    def resolve_protocol_params(self, proto: Protocol):
        info = self.effects[proto.effect]
        names = [n for n, _ in proto.params]
        if len(names) != len(set(names)):
            raise SemaError("duplicate protocol parameter", proto.span)
        if not names and info.arg_types == [UNIT]:
            proto.params = []
        elif len(names) != len(info.arg_types):
            raise SemaError(
                f"protocol {proto.effect} binds {len(names)} parameters, "
                f"effect carries {len(info.arg_types)}", proto.span)
        else:
            proto.params = list(zip(names, info.arg_types))
        for n, _ in proto.params:
            self.reject_reserved(n, proto.span)

    def predeclare_fun(self, d: DFun):
        params = []
        for p in d.params:
            if p.name == "()":
                params.append(p)
                continue
            if p.type is None:
                raise SemaError(
                    f"parameter {p.name!r} of {d.name!r} needs a type "
                    "annotation", p.span)
            self.reject_reserved(p.name, p.span)
            params.append(p)
        if d.rettype is None:
            raise SemaError(f"function {d.name!r} needs a return type", d.span)
        self.validate_type(d.rettype, d.span)
        for p in params:
            if p.type is not None:
                self.validate_type(p.type, p.span)
        self.funs[d.name] = FunInfo(d.name, params, d.rettype, d.spec, d, True)
        self.declared_rows[d.name] = self.row_of_spec(d.spec, d.span)

    def row_of_spec(self, spec: Optional[SpecClauses], span: Span) -> frozenset:
        if spec is None:
            return frozenset()
        for e in spec.performs:
            if e not in self.effects:
                raise SemaError(f"performs lists undeclared effect {e!r}", span)
        return frozenset(spec.performs)

    def validate_type(self, t: Type, span: Span):
        if isinstance(t, TCon):
            if t.name not in self.adts:
                raise SemaError(f"unknown type {t.name!r}", span)
        elif isinstance(t, TArrow):
            self.validate_type(t.param, span)
            self.validate_type(t.result, span)
        elif isinstance(t, (TList,)):
            self.validate_type(t.elem, span)
        elif isinstance(t, (TRef, TArray)):
            raise SemaError("ref/array types are only for top-level state", span)

    # == function bodies ===================================================

    def check_fun_decl(self, d: DFun, toplevel: bool):
        info = self.funs[d.name]
        env = Env(self, d.name)
        if d.rec:
            env.bind(d.name, _Binding(self.fn_arrow(info), "routine", info))
        for p in info.params:
            if p.name not in ("()", "_"):
                env.bind(p.name, _Binding(p.type, "param"))
        # local protocols come into scope before the body is checked
        if d.spec is not None:
            for proto in d.spec.protocols:
                self.register_protocol(proto, local_owner=d.name)
                self.resolve_protocol_params(proto)
                env.local_protocols[proto.effect] = proto
        self.check_expr(d.body, env, expect=info.rettype)
        if d.spec is not None:
            self.check_spec_clauses(d.spec, env, info)

    def fn_arrow(self, info: FunInfo) -> Type:
        ptypes = [p.type if p.name != "()" else UNIT for p in info.params]
        return make_arrow(ptypes, info.rettype)

    # == expression typing =================================================

    def set_type(self, node, t: Type) -> Type:
        self.types[id(node)] = t
        node.ty = t
        return t

    def check_expr(self, e: Expr, env: "Env", expect: Optional[Type]) -> Type:
        t = self.infer(e, env, expect)
        if expect is not None and t != expect:
            raise SemaError(f"expected {expect}, found {t}", e.span)
        return t

    def infer(self, e: Expr, env: "Env", expect: Optional[Type] = None) -> Type:
        t = self._infer(e, env, expect)
        return self.set_type(e, t)

    def _infer(self, e: Expr, env: "Env", expect: Optional[Type]) -> Type:
        if isinstance(e, Lit):
            if e.value is None:
                return UNIT
            return BOOL if isinstance(e.value, bool) else INT

        if isinstance(e, Var):
            b = env.lookup(e.name)
            if b is None:
                raise SemaError(f"unbound identifier {e.name!r}", e.span)
            if b.kind == "continuation":
                raise SemaError(
                    f"continuation {e.name!r} may only be used in "
                    "`continue`", e.span)
            if b.kind == "statevar":
                raise SemaError(
                    f"state variable {e.name!r} is not first class "
                    "(use !, .(), or length)", e.span)
            if b.kind == "routine" and expect is None:
                raise SemaError(
                    f"function {e.name!r} is not a first-class value", e.span)
            if b.kind == "routine":
                raise SemaError(
                    f"function {e.name!r} cannot be passed as a value; "
                    "wrap it in `fun`", e.span)
            return b.type

        if isinstance(e, Unop):
            if e.op == "not":
                self.check_expr(e.arg, env, BOOL)
                return BOOL
            if e.op == "-":
                self.check_expr(e.arg, env, INT)
                return INT
            if e.op == "!":
                if not isinstance(e.arg, Var):
                    raise SemaError("! expects a reference name", e.span)
                t = self.state_type(e.arg.name, e.span)
                if not isinstance(t, TRef):
                    raise SemaError(f"{e.arg.name!r} is not a reference", e.span)
                self.set_type(e.arg, t)
                return t.elem
            raise AssertionError(e.op)

        if isinstance(e, Binop):
            return self.infer_binop(e, env)

        if isinstance(e, Assign):
            t = self.state_type(e.name, e.span)
            if not isinstance(t, TRef):
                raise SemaError(f"{e.name!r} is not a reference", e.span)
            self.check_expr(e.value, env, t.elem)
            return UNIT

        if isinstance(e, ArrayGet):
            t = self.state_type(e.array, e.span)
            if not isinstance(t, TArray):
                raise SemaError(f"{e.array!r} is not an array", e.span)
            self.check_expr(e.index, env, INT)
            return t.elem

        if isinstance(e, ArraySet):
            t = self.state_type(e.array, e.span)
            if not isinstance(t, TArray):
                raise SemaError(f"{e.array!r} is not an array", e.span)
            self.check_expr(e.index, env, INT)
            self.check_expr(e.value, env, t.elem)
            return UNIT

        if isinstance(e, ListLit):
            if e.items:
                t0 = self.infer(e.items[0], env,
                                expect.elem if isinstance(expect, TList) else None)
                for item in e.items[1:]:
                    self.check_expr(item, env, t0)
                return TList(t0)
            if isinstance(expect, TList):
                return expect
            raise SemaError("cannot infer the type of []", e.span)

        if isinstance(e, Constr):
            return self.infer_constr(e, env)

        if isinstance(e, App):
            return self.infer_app(e, env, expect)

        if isinstance(e, Perform):
            return self.infer_perform(e, env)

        if isinstance(e, Continue):
            b = env.lookup(e.k)
            if b is None or b.kind != "continuation":
                raise SemaError(
                    f"continue outside the handler branch binding {e.k!r}",
                    e.span)
            reply_ty, handler_ty, effect = b.extra
            self.check_expr(e.arg, env, reply_ty)
            e.effect = effect
            return handler_ty

        if isinstance(e, LetIn):
            return self.infer_letin(e, env, expect)

        if isinstance(e, Fun):
            return self.infer_fun(e, env, expect)

        if isinstance(e, If):
            self.check_expr(e.cond, env, BOOL)
            if expect is not None:
                self.check_expr(e.then, env, expect)
                self.check_expr(e.els, env, expect)
                return expect
            t = self.infer(e.then, env)
            self.check_expr(e.els, env, t)
            return t

        if isinstance(e, Seq):
            self.check_expr(e.first, env, UNIT)
            return self.infer(e.second, env, expect)

        if isinstance(e, Match):
            return self.infer_match(e, env, expect)

        if isinstance(e, TryHandle):
            return self.infer_handler(e, env, expect)

        if isinstance(e, (Old, ResultVar, ReplyVar, Quant)):
            raise SemaError(
                f"{type(e).__name__} is only allowed in specifications", e.span)

        raise AssertionError(f"untypeable node {type(e).__name__}")

    def state_type(self, name: str, span: Span) -> Type:
        for n, t in self.state_vars:
            if n == name:
                return t
        raise SemaError(f"unknown state variable {name!r}", span)

    def infer_binop(self, e: Binop, env: "Env") -> Type:
        if e.op in ARITH_OPS:
            self.check_expr(e.left, env, INT)
            self.check_expr(e.right, env, INT)
            return INT
        if e.op in ("&&", "||"):
            self.check_expr(e.left, env, BOOL)
            self.check_expr(e.right, env, BOOL)
            return BOOL
        if e.op in ("->", "<->"):
            if not env.in_spec:
                raise SemaError(f"{e.op} is only allowed in specifications",
                                e.span)
            self.check_expr(e.left, env, BOOL)
            self.check_expr(e.right, env, BOOL)
            return BOOL
        if e.op in CMP_OPS:
            t = self.infer(e.left, env)
            self.check_expr(e.right, env, t)
            if e.op in ("=", "<>"):
                if isinstance(t, TArrow):
                    raise SemaError("functions cannot be compared", e.span)
            elif t != INT:
                raise SemaError(f"{e.op} compares integers", e.span)
            return BOOL
        if e.op == "::":
            t = self.infer(e.left, env)
            self.check_expr(e.right, env, TList(t))
            return TList(t)
        raise AssertionError(e.op)

    def infer_constr(self, e: Constr, env: "Env") -> Type:
        if e.name not in self.constructors:
            raise SemaError(f"unknown constructor {e.name!r}", e.span)
        adt, arg_types = self.constructors[e.name]
        if len(e.args) != len(arg_types):
            raise SemaError(
                f"constructor {e.name} expects {len(arg_types)} arguments, "
                f"got {len(e.args)}", e.span)
        for a, t in zip(e.args, arg_types):
            self.check_expr(a, env, t)
        return TCon(adt)

    def infer_app(self, e: App, env: "Env", expect: Optional[Type]) -> Type:
        callee = e.callee
        if isinstance(callee, Var):
            if callee.name == "length":
                if len(e.args) != 1 or not isinstance(e.args[0], Var):
                    raise SemaError("length expects an array name", e.span)
                arr = e.args[0].name
                t = self.state_type(arr, e.span)
                if not isinstance(t, TArray):
                    raise SemaError(f"{arr!r} is not an array", e.span)
                self.set_type(e.args[0], t)
                e.call_kind = "length"
                return INT
            if callee.name in ("ref", "Array.make"):
                raise SemaError(
                    "mutable state must be defined at the top level", e.span)
            b = env.lookup(callee.name)
            if b is None:
                raise SemaError(f"unknown callee {callee.name!r}", e.span)
            if b.kind == "routine":
                info: FunInfo = b.extra
                if len(e.args) != len(info.params):
                    raise SemaError(
                        f"{callee.name} expects {len(info.params)} arguments, "
                        f"got {len(e.args)}", e.span)
                for a, p in zip(e.args, info.params):
                    pt = p.type if p.name != "()" else UNIT
                    if env.in_spec and p.ghost is False and False:
                        pass
                    self.check_expr(a, env, pt)
                if env.in_spec:
                    self.term_calls.append((callee.name, e.span))
                e.call_kind = "routine"
                self.set_type(callee, self.fn_arrow(info))
                return info.rettype
            if b.kind == "continuation":
                raise SemaError("continuations cannot be applied; use continue",
                                e.span)
            t = b.type
            e.call_kind = "apply"
        elif isinstance(callee, Continue):
            t = self.infer(callee, env)
            e.call_kind = "apply"
        else:
            raise SemaError(
                "only named functions, function-typed variables, or continue "
                "results can be applied", e.span)
        if not isinstance(t, TArrow):
            raise SemaError("cannot apply a non-function value", e.span)
        params, result = arrow_chain(t)
        if len(e.args) != len(params):
            raise SemaError(
                f"function value expects {len(params)} arguments, "
                f"got {len(e.args)}", e.span)
        for a, pt in zip(e.args, params):
            self.check_expr(a, env, pt)
        if isinstance(callee, Var):
            self.set_type(callee, t)
        return result

    def infer_perform(self, e: Perform, env: "Env") -> Type:
        if env.in_spec:
            raise SemaError("perform is not allowed in specifications", e.span)
        info = self.effects.get(e.effect)
        if info is None:
            raise SemaError(f"perform of undeclared effect {e.effect!r}", e.span)
        args = e.args
        if info.arg_types == [UNIT] and not args:
            pass  # implicit unit argument
        elif len(args) != len(info.arg_types):
            raise SemaError(
                f"effect {e.effect} carries {len(info.arg_types)} arguments, "
                f"got {len(args)}", e.span)
        for a, t in zip(args, info.arg_types):
            self.check_expr(a, env, t)
        proto = env.protocol_for(e.effect)
        if proto is None:
            raise SemaError(
                f"effect {e.effect!r} has no protocol in scope", e.span)
        e.protocol = proto
        return info.reply

    def infer_letin(self, e: LetIn, env: "Env", expect: Optional[Type]) -> Type:
        if e.name != "_":
            self.reject_reserved(e.name, e.span)
        if not e.params:
            if e.rec:
                raise SemaError("let rec needs parameters", e.span)
            t = self.infer(e.bound, env,
                           e.rettype if e.rettype is not None else None)
            if e.rettype is not None and t != e.rettype:
                raise SemaError(f"expected {e.rettype}, found {t}", e.span)
            env2 = env.child()
            if e.name != "_":
                env2.bind(e.name, _Binding(t, "local"))
            return self.infer(e.body, env2, expect)
        # a local function definition
        for p in e.params:
            if p.type is None and p.name != "()":
                raise SemaError(
                    f"parameter {p.name!r} needs a type annotation", p.span)
            if p.type is not None:
                self.validate_type(p.type, p.span)
        if e.rettype is None:
            raise SemaError(f"local function {e.name!r} needs a return type",
                            e.span)
        qname = env.qualify(e.name)
        info = FunInfo(qname, e.params, e.rettype, e.spec, e, False)
        self.funs[qname] = info
        self.declared_rows[qname] = self.row_of_spec(e.spec, e.span)
        e.qname = qname
        fenv = env.child(fn=qname)
        if e.rec:
            fenv.bind(e.name, _Binding(self.fn_arrow(info), "routine", info))
        for p in e.params:
            if p.name not in ("()", "_"):
                self.reject_reserved(p.name, p.span)
                fenv.bind(p.name, _Binding(p.type, "param"))
        if e.spec is not None:
            for proto in e.spec.protocols:
                self.register_protocol(proto, local_owner=qname)
                self.resolve_protocol_params(proto)
                fenv.local_protocols[proto.effect] = proto
        self.check_expr(e.bound, fenv, expect=e.rettype)
        if e.spec is not None:
            self.check_spec_clauses(e.spec, fenv, info)
        env2 = env.child()
        env2.bind(e.name, _Binding(self.fn_arrow(info), "routine", info))
        env2.local_protocols.update(fenv.local_protocols)
        return self.infer(e.body, env2, expect)

    def infer_fun(self, e: Fun, env: "Env", expect: Optional[Type]) -> Type:
        if env.in_spec:
            raise SemaError("fun is not allowed in specifications", e.span)
        exp_params, exp_ret = (None, None)
        if isinstance(expect, TArrow):
            exp_params, exp_ret = arrow_chain(expect)
            if len(exp_params) != len(e.params):
                raise SemaError(
                    f"function value must take {len(exp_params)} arguments",
                    e.span)
        ptypes: list[Type] = []
        for i, p in enumerate(e.params):
            pt = p.type
            if pt is None and p.name == "()":
                pt = UNIT
            if pt is None and exp_params is not None:
                pt = exp_params[i]
            if pt is None:
                raise SemaError(
                    f"parameter {p.name!r} needs a type annotation", p.span)
            if exp_params is not None and pt != exp_params[i]:
                raise SemaError(f"expected {exp_params[i]}, found {pt}", p.span)
            ptypes.append(pt)
        fenv = env.child()
        for p, pt in zip(e.params, ptypes):
            if p.name not in ("()", "_"):
                self.reject_reserved(p.name, p.span)
                fenv.bind(p.name, _Binding(pt, "param"))
        ret = e.rettype if e.rettype is not None else exp_ret
        if ret is None:
            ret = self.infer(e.body, fenv)
        else:
            self.check_expr(e.body, fenv, ret)
        if e.spec is not None:
            if e.spec.requires:
                raise SemaError(
                    "anonymous functions may not declare requires", e.spec.span)
            if e.spec.protocols or e.spec.performs or e.spec.variant:
                raise SemaError(
                    "anonymous functions may only declare ensures/modifies",
                    e.spec.span)
            info = FunInfo("<fun>", e.params, ret, e.spec, e, False)
            self.check_spec_clauses(e.spec, fenv, info, anonymous=True)
        t = make_arrow(ptypes, ret)
        e.fn_type = t
        e.param_types = ptypes
        self.fun_nodes.append(e)
        return t

    def infer_match(self, e: Match, env: "Env", expect: Optional[Type]) -> Type:
        scrut_t = self.infer(e.scrutinee, env)
        result: Optional[Type] = expect
        for pat, body in e.branches:
            benv = env.child()
            self.bind_pattern(pat, scrut_t, benv)
            if result is None:
                result = self.infer(body, benv)
            else:
                self.check_expr(body, benv, result)
        if result is None:
            raise SemaError("empty match", e.span)
        self.check_exhaustive(e, scrut_t)
        return result

    def bind_pattern(self, pat: Pattern, t: Type, env: "Env"):
        if isinstance(pat, PWild):
            return
        if isinstance(pat, PVar):
            self.reject_reserved(pat.name, pat.span)
            env.bind(pat.name, _Binding(t, "local"))
            return
        if isinstance(pat, PLit):
            lit_t = UNIT if pat.value is None else (
                BOOL if isinstance(pat.value, bool) else INT)
            if lit_t != t:
                raise SemaError(f"pattern expects {t}", pat.span)
            return
        if isinstance(pat, PConstr):
            if pat.name == "[]":
                if not isinstance(t, TList):
                    raise SemaError(f"pattern expects {t}", pat.span)
                return
            if pat.name == "::":
                if not isinstance(t, TList):
                    raise SemaError(f"pattern expects {t}", pat.span)
                self.bind_pattern(pat.args[0], t.elem, env)
                self.bind_pattern(pat.args[1], t, env)
                return
            if pat.name not in self.constructors:
                raise SemaError(f"unknown constructor {pat.name!r}", pat.span)
            adt, arg_types = self.constructors[pat.name]
            if TCon(adt) != t:
                raise SemaError(f"pattern expects {t}, found {adt}", pat.span)
            if len(pat.args) != len(arg_types):
                raise SemaError(
                    f"constructor {pat.name} expects {len(arg_types)} "
                    f"arguments", pat.span)
            for sub, st in zip(pat.args, arg_types):
                self.bind_pattern(sub, st, env)
            return
        raise AssertionError

    def check_exhaustive(self, e: Match, scrut_t: Type):
        has_default = any(isinstance(p, (PVar, PWild)) for p, _ in e.branches)
        if has_default:
            return
        if isinstance(scrut_t, TCon):
            covered = {p.name for p, _ in e.branches if isinstance(p, PConstr)}
            allc = {c for c, _ in self.adts[scrut_t.name].constructors}
            missing = allc - covered
            if missing:
                raise SemaError(
                    f"non-exhaustive match, missing {sorted(missing)}", e.span)
            return
        if isinstance(scrut_t, TList):
            covered = {p.name for p, _ in e.branches if isinstance(p, PConstr)}
            if not {"[]", "::"} <= covered:
                raise SemaError("non-exhaustive match over a list", e.span)
            return
        if scrut_t == BOOL:
            vals = {p.value for p, _ in e.branches if isinstance(p, PLit)}
            if vals != {True, False}:
                raise SemaError("non-exhaustive match over bool", e.span)
            return
        if scrut_t == UNIT:
            return
        raise SemaError("match over this type needs a default branch", e.span)

    def infer_handler(self, e: TryHandle, env: "Env",
                      expect: Optional[Type]) -> Type:
        scrut_t = self.infer(e.scrutinee, env)
        handler_t: Optional[Type] = None
        if e.spec is not None and e.spec.returns is not None:
            self.validate_type(e.spec.returns, e.span)
            handler_t = e.spec.returns
        if handler_t is None:
            handler_t = expect if expect is not None else scrut_t
        seen_effects: set[str] = set()
        for br in e.branches:
            if br.effect in seen_effects:
                raise SemaError(f"duplicate handler branch for {br.effect!r}",
                                br.span)
            seen_effects.add(br.effect)
            info = self.effects.get(br.effect)
            if info is None:
                raise SemaError(f"handler for undeclared effect {br.effect!r}",
                                br.span)
            proto = env.protocol_for(br.effect)
            if proto is None:
                raise SemaError(
                    f"handled effect {br.effect!r} has no protocol in scope",
                    br.span)
            br.protocol = proto
            benv = env.child()
            if info.arg_types == [UNIT] and not br.payload:
                br.payload_types = [UNIT]
            elif len(br.payload) != len(info.arg_types):
                raise SemaError(
                    f"branch binds {len(br.payload)} payload variables, "
                    f"effect carries {len(info.arg_types)}", br.span)
            else:
                br.payload_types = list(info.arg_types)
            for name, t in zip(br.payload, info.arg_types):
                self.reject_reserved(name, br.span)
                benv.bind(name, _Binding(t, "local"))
            self.reject_reserved(br.k, br.span)
            benv.bind(br.k, _Binding(
                None, "continuation", (info.reply, handler_t, br.effect)))
            self.check_expr(br.body, benv, handler_t)
            self.check_one_shot(br)
        if e.value_branch is not None:
            name, body = e.value_branch
            benv = env.child()
            if name != "_":
                self.reject_reserved(name, e.span)
                benv.bind(name, _Binding(scrut_t, "local"))
            self.check_expr(body, benv, handler_t)
        elif handler_t != scrut_t:
            raise SemaError(
                "a handler without a value branch returns the handled "
                f"expression's type {scrut_t}, not {handler_t}", e.span)
        e.handler_type = handler_t
        e.scrut_type = scrut_t
        return handler_t

    def check_one_shot(self, br: EffBranch):
        def count(e: Expr) -> int:
            """Max continues of br.k on any control path, funs counted apart."""
            if isinstance(e, Continue):
                mine = 1 if e.k == br.k else 0
                return mine + count(e.arg)
            if isinstance(e, Fun):
                inner = count(e.body)
                if inner > 1:
                    raise SemaError(
                        f"continuation {br.k} may be resumed at most once "
                        "per path", e.span)
                return 0
            if isinstance(e, If):
                return count(e.cond) + max(count(e.then), count(e.els))
            if isinstance(e, (Match, TryHandle)):
                scrut = e.scrutinee
                total = count(scrut)
                branches = []
                if isinstance(e, Match):
                    branches = [b for _, b in e.branches]
                else:
                    branches = [b.body for b in e.branches]
                    if e.value_branch is not None:
                        branches.append(e.value_branch[1])
                return total + (max(count(b) for b in branches) if branches else 0)
            total = 0
            for v in vars(e).values():
                if isinstance(v, Expr):
                    total += count(v)
                elif isinstance(v, list):
                    for item in v:
                        if isinstance(item, Expr):
                            total += count(item)
            return total

        if count(br.body) > 1:
            raise SemaError(
                f"continuation {br.k} may be resumed at most once per path",
                br.span)

    # == specification terms ==============================================

    def check_spec_clauses(self, spec: SpecClauses, env: "Env", info: FunInfo,
                           anonymous: bool = False):
        for t in spec.requires:
            self.check_term(t, env, ctx="requires")
        for t in spec.ensures:
            self.check_term(t, env, ctx="ensures", result_type=info.rettype)
        for name in spec.modifies:
            self.state_type(name, spec.span)
        if spec.variant is not None:
            tv = self.check_term_type(spec.variant, env, ctx="variant")
            if not isinstance(tv, (TInt, TCon, TList)):
                raise SemaError(
                    "variant must be an integer or an inductive value",
                    spec.span)
        for proto in spec.protocols:
            self.check_protocol_terms(proto, env)

    def check_protocol_terms(self, proto: Protocol, env: "Env"):
        penv = env.child()
        info = self.effects[proto.effect]
        for n, t in proto.params:
            penv.bind(n, _Binding(t, "param"))
        for t in proto.requires:
            self.check_term(t, penv, ctx="protocol_pre")
        for t in proto.ensures:
            self.check_term(t, penv, ctx="protocol_post",
                            reply_type=info.reply)
        for name in proto.modifies:
            self.state_type(name, proto.span)

    def check_global_protocols(self):
        for proto in self.global_protocols.values():
            self.check_protocol_terms(proto, Env(self, None))

    def check_term(self, t: Expr, env: "Env", ctx: str,
                   result_type: Optional[Type] = None,
                   reply_type: Optional[Type] = None):
        tt = self.check_term_type(t, env, ctx, result_type, reply_type)
        if ctx != "variant" and tt != BOOL:
            raise SemaError(f"specification term must be bool, found {tt}",
                            t.span)

    def check_term_type(self, t: Expr, env: "Env", ctx: str,
                        result_type: Optional[Type] = None,
                        reply_type: Optional[Type] = None) -> Type:
        tenv = env.child()
        tenv.in_spec = True
        tenv.spec_ctx = ctx
        tenv.result_type = result_type
        tenv.reply_type = reply_type
        return self.infer_term(t, tenv)

    def infer_term(self, t: Expr, env: "Env") -> Type:
        if isinstance(t, Old):
            if env.spec_ctx in ("requires", "protocol_pre", "variant"):
                raise SemaError("old is not allowed in preconditions", t.span)
            ty = self.infer_term(t.arg, env)
            return self.set_type(t, ty)
        if isinstance(t, ResultVar):
            if env.result_type is None:
                raise SemaError("result is not in scope here", t.span)
            return self.set_type(t, env.result_type)
        if isinstance(t, ReplyVar):
            if env.reply_type is None:
                raise SemaError("reply may only appear in a protocol's ensures",
                                t.span)
            return self.set_type(t, env.reply_type)
        if isinstance(t, Quant):
            qenv = env.child()
            qenv.in_spec = True
            for n, ty in t.binders:
                self.reject_reserved(n, t.span)
                self.validate_type(ty, t.span)
                qenv.bind(n, _Binding(ty, "local"))
            self.check_expr(t.body, qenv, BOOL)
            return self.set_type(t, BOOL)
        return self.infer(t, env)

    # == late checks =======================================================

    def check_spec_purity(self, tp: TypedProgram):
        for name, span in self.term_calls:
            row = tp.effect_rows.get(name, frozenset())
            writes = tp.writes.get(name, frozenset())
            if row or writes:
                raise SemaError(
                    f"{name!r} is used in a specification but performs "
                    "effects or writes state", span)


class Env:
    def __init__(self, checker: Checker, fn: Optional[str],
                 parent: Optional["Env"] = None):
        self.checker = checker
        self.fn = fn
        self.parent = parent
        self.bindings: dict[str, _Binding] = {}
        self.local_protocols: dict[str, Protocol] = {}
        self.in_spec = parent.in_spec if parent else False
        self.spec_ctx = parent.spec_ctx if parent else None
        self.result_type = parent.result_type if parent else None
        self.reply_type = parent.reply_type if parent else None

    def child(self, fn: Optional[str] = None) -> "Env":
        return Env(self.checker, fn or self.fn, self)

    def qualify(self, name: str) -> str:
        return name if self.fn is None else f"{self.fn}.{name}"

    def bind(self, name: str, b: _Binding):
        self.bindings[name] = b

    def lookup(self, name: str) -> Optional[_Binding]:
        env = self
        while env is not None:
            if name in env.bindings:
                return env.bindings[name]
            env = env.parent
        ck = self.checker
        if name in ck.funs and ck.funs[name].toplevel:
            return _Binding(None, "routine", ck.funs[name])
        if any(n == name for n, _ in ck.state_vars):
            return _Binding(None, "statevar")
        return None

    def protocol_for(self, effect: str) -> Optional[Protocol]:
        env = self
        while env is not None:
            if effect in env.local_protocols:
                return env.local_protocols[effect]
            env = env.parent
        return self.checker.global_protocols.get(effect)


# ---------------------------------------------------------------------------
# Effect rows and write sets


def _walk_row(e: Expr, handled: frozenset, tp: TypedProgram,
              latent: dict, acc: set):
    if isinstance(e, Perform):
        if e.effect not in handled:
            acc.add(e.effect)
    elif isinstance(e, App):
        kind = getattr(e, "call_kind", None)
        if kind == "routine":
            callee = e.callee.name
            qname = _resolve_fn(callee, tp, e)
            acc |= (tp.effect_rows.get(qname, frozenset()) - handled)
        elif kind == "apply":
            t = tp.types.get(id(e.callee))
            acc |= (latent.get(t, frozenset()) - handled)
        for a in e.args:
            _walk_row(a, handled, tp, latent, acc)
        if not isinstance(e.callee, Var):
            _walk_row(e.callee, handled, tp, latent, acc)
        return
    elif isinstance(e, TryHandle):
        inner = handled | {b.effect for b in e.branches}
        _walk_row(e.scrutinee, inner, tp, latent, acc)
        for b in e.branches:
            _walk_row(b.body, handled, tp, latent, acc)
        if e.value_branch is not None:
            _walk_row(e.value_branch[1], handled, tp, latent, acc)
        return
    elif isinstance(e, Fun):
        return  # charged to the arrow type's latent row
    elif isinstance(e, LetIn) and e.params:
        # the nested definition has its own declared row; only the body runs
        _walk_row(e.body, handled, tp, latent, acc)
        return
    for v in vars(e).values():
        if isinstance(v, Expr):
            _walk_row(v, handled, tp, latent, acc)
        elif isinstance(v, list):
            for item in v:
                if isinstance(item, Expr):
                    _walk_row(item, handled, tp, latent, acc)
                elif isinstance(item, tuple):
                    for sub in item:
                        if isinstance(sub, Expr):
                            _walk_row(sub, handled, tp, latent, acc)
                elif isinstance(item, EffBranch):
                    _walk_row(item.body, handled, tp, latent, acc)


def _resolve_fn(callee: str, tp: TypedProgram, site: Expr) -> str:
    return getattr(site, "resolved_fn", None) or callee


def check_effect_rows(tp: TypedProgram) -> TypedProgram:
    """Check that every function's performed effects sit inside its row."""
    latent: dict = {t: frozenset() for t in
                    {getattr(f, "fn_type", None) for f in _all_funs(tp)}}
    checker_funs = tp.funs
    # resolve local function call sites to their qualified names
    for name, info in checker_funs.items():
        body = info.decl.body if isinstance(info.decl, DFun) else info.decl.bound
        _qualify_calls(body, tp)
    for _ in range(4):
        changed = False
        new_latent = {}
        for f in _all_funs(tp):
            acc: set = set()
            _walk_row(f.body, frozenset(), tp, latent, acc)
            t = f.fn_type
            merged = latent.get(t, frozenset()) | acc
            if merged != new_latent.get(t, latent.get(t, frozenset())):
                new_latent[t] = frozenset(merged)
        for t, row in new_latent.items():
            if latent.get(t) != row:
                latent[t] = row
                changed = True
        if not changed:
            break
    tp.latent_rows = latent
    for name, info in checker_funs.items():
        body = info.decl.body if isinstance(info.decl, DFun) else info.decl.bound
        acc = set()
        _walk_row(body, frozenset(), tp, latent, acc)
        declared = tp.effect_rows.get(name, frozenset())
        extra = acc - declared
        if extra:
            raise SemaError(
                f"function {name!r} may perform {sorted(extra)} "
                "not listed in its performs clause",
                info.decl.span if hasattr(info.decl, "span") else None)
        info.computed_row = frozenset(acc)
    return tp


def _all_funs(tp: TypedProgram):
    funs = []
    for info in tp.funs.values():
        body = info.decl.body if isinstance(info.decl, DFun) else info.decl.bound
        for node in _iter_nodes(body):
            if isinstance(node, Fun):
                funs.append(node)
    return funs


def _iter_nodes(e: Expr):
    yield e
    for v in vars(e).values():
        if isinstance(v, Expr):
            yield from _iter_nodes(v)
        elif isinstance(v, list):
            for item in v:
                if isinstance(item, Expr):
                    yield from _iter_nodes(item)
                elif isinstance(item, tuple):
                    for sub in item:
                        if isinstance(sub, Expr):
                            yield from _iter_nodes(sub)
                elif isinstance(item, EffBranch):
                    yield from _iter_nodes(item.body)


def _qualify_calls(e: Expr, tp: TypedProgram, scope: Optional[dict] = None):
    """Annotate routine call sites with the callee's qualified name."""
    scope = scope or {}
    if isinstance(e, LetIn) and e.params:
        inner = dict(scope)
        if e.rec:
            inner[e.name] = e.qname
        _qualify_calls(e.bound, tp, inner)
        outer = dict(scope)
        outer[e.name] = e.qname
        _qualify_calls(e.body, tp, outer)
        return
    if isinstance(e, App) and isinstance(e.callee, Var):
        if e.callee.name in scope:
            e.resolved_fn = scope[e.callee.name]
    for v in vars(e).values():
        if isinstance(v, Expr):
            _qualify_calls(v, tp, scope)
        elif isinstance(v, list):
            for item in v:
                if isinstance(item, Expr):
                    _qualify_calls(item, tp, scope)
                elif isinstance(item, tuple):
                    for sub in item:
                        if isinstance(sub, Expr):
                            _qualify_calls(sub, tp, scope)
                elif isinstance(item, EffBranch):
                    _qualify_calls(item.body, tp, scope)


def compute_writes(tp: TypedProgram):
    """Fixpoint over the call graph; apply is conservatively all-vars."""
    allvars = frozenset(tp.state.names())
    writes: dict[str, frozenset] = {n: frozenset() for n in tp.funs}

    def walk(e: Expr) -> frozenset:
        acc: frozenset = frozenset()
        if isinstance(e, Assign):
            acc |= {e.name}
        elif isinstance(e, ArraySet):
            acc |= {e.array}
        elif isinstance(e, App):
            kind = getattr(e, "call_kind", None)
            if kind == "routine":
                qname = _resolve_fn(e.callee.name, tp, e)
                acc |= writes.get(qname, frozenset())
            elif kind == "apply":
                acc |= allvars
        elif isinstance(e, Continue):
            proto = None
            eff = getattr(e, "effect", None)
            acc |= frozenset()  # continue's own writes come from the protocol
        elif isinstance(e, Fun):
            return frozenset()
        elif isinstance(e, LetIn) and e.params:
            return walk(e.body)
        for v in vars(e).values():
            if isinstance(v, Expr):
                acc |= walk(v)
            elif isinstance(v, list):
                for item in v:
                    if isinstance(item, Expr):
                        acc |= walk(item)
                    elif isinstance(item, tuple):
                        for sub in item:
                            if isinstance(sub, Expr):
                                acc |= walk(sub)
                    elif isinstance(item, EffBranch):
                        acc |= walk(item.body)
        return acc

    for _ in range(len(tp.funs) + 2):
        changed = False
        for name, info in tp.funs.items():
            body = info.decl.body if isinstance(info.decl, DFun) else info.decl.bound
            w = walk(body)
            # performing an effect lets the server write its modifies set
            for node in _iter_nodes(body):
                if isinstance(node, Perform):
                    w |= frozenset(node.protocol.modifies)
                if isinstance(node, Continue):
                    eff = getattr(node, "effect", None)
            if w != writes[name]:
                writes[name] = w
                changed = True
        if not changed:
            break
    tp.writes = writes


def typecheck(program: SourceProgram) -> TypedProgram:
    """Type check a parsed program and build its semantic tables."""
    ck = Checker(program)
    ck.collect_decls()
    ck.check_global_protocols()
    for d in program.decls:
        if isinstance(d, DFun):
            ck.check_fun_decl(d, toplevel=True)
    tp = TypedProgram(
        program=program,
        types=ck.types,
        effect_rows=dict(ck.declared_rows),
        state=StateModel(ck.state_vars, ck.state_sizes),
        effects=ck.effects,
        adts=ck.adts,
        constructors=ck.constructors,
        protocols=ck.global_protocols,
        funs=ck.funs,
    )
    check_effect_rows(tp)
    compute_writes(tp)
    ck.check_spec_purity(tp)
    reject_hidden_state(tp)
    return tp


def reject_hidden_state(tp: TypedProgram):
    # `ref`/`Array.make` inside bodies are caught during typing; nothing else
    # can create mutable state, so the state model is exactly the globals.
    return tp


def build_state_model(tp: TypedProgram) -> StateModel:
    """All top-level mutable definitions, in declaration order."""
    return tp.state
