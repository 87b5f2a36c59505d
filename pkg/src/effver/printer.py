"""Pretty-printer for source programs.

The output re-parses to an AST equal to the input modulo source locations;
for files written in the canonical style it also matches the original token
stream modulo whitespace.
"""

from __future__ import annotations

from .syntax import (
    App, ArrayGet, ArrayLen, ArraySet, Assign, Binop, Constr, Continue,
    DEffect, DFun, DGlobal, DProtocol, DType, Expr, Fun, HandlerSpec, If,
    LetIn, ListLit, Lit, Match, Old, Param, Pattern, PConstr, Perform, PLit,
    Protocol, PVar, PWild, Quant, ReplyVar, ResultVar, Seq, SourceProgram,
    SpecClauses, TArray, TInt, TRef, TryHandle, TUnit, Type, Unop, Var,
)

# precedence levels, loosest binding first
L_SEQ = 0
L_STMT = 1
L_IFF = 2
L_IMPLIES = 3
L_OR = 4
L_AND = 5
L_NOT = 6
L_CMP = 7
L_CONS = 8
L_ADD = 9
L_MUL = 10
L_UNARY = 11
L_APP = 12
L_ATOM = 13

BINOP_LEVEL = {
    "<->": L_IFF, "->": L_IMPLIES, "||": L_OR, "&&": L_AND,
    "=": L_CMP, "<>": L_CMP, "<": L_CMP, "<=": L_CMP, ">": L_CMP, ">=": L_CMP,
    "::": L_CONS, "+": L_ADD, "-": L_ADD, "*": L_MUL, "/": L_MUL,
    "mod": L_MUL,
}


def _tail_open(e: Expr) -> bool:
    """Whether e ends in a construct that would swallow a following `|`."""
    if isinstance(e, (Match, TryHandle)):
        return True
    if isinstance(e, Seq):
        return _tail_open(e.second)
    if isinstance(e, LetIn):
        return _tail_open(e.body)
    if isinstance(e, If):
        return _tail_open(e.els)
    if isinstance(e, Fun):
        return _tail_open(e.body)
    return False


def _eats_semi(e: Expr) -> bool:
    """Whether e, printed bare, would swallow a following `;`."""
    if isinstance(e, (LetIn, Match, Fun)):
        return True
    if isinstance(e, TryHandle):
        return e.spec is None  # a trailing spec block closes the last branch
    if isinstance(e, If):
        return _eats_semi(e.els)
    return False


class Printer:
    def __init__(self):
        self.out: list[str] = []

    # -- expressions -------------------------------------------------------

    def expr(self, e: Expr, level: int, indent: str = "") -> str:
        s, mine = self.expr_raw(e, indent)
        if mine < level:
            return f"({s})"
        return s

    def expr_raw(self, e: Expr, ind: str) -> tuple[str, int]:
        if isinstance(e, Lit):
            if e.value is None:
                return "()", L_ATOM
            if isinstance(e.value, bool):
                return ("true" if e.value else "false"), L_ATOM
            if e.value < 0:
                return str(e.value), L_UNARY
            return str(e.value), L_ATOM
        if isinstance(e, Var):
            return e.name, L_ATOM
        if isinstance(e, ResultVar):
            return "result", L_ATOM
        if isinstance(e, ReplyVar):
            return "reply", L_ATOM
        if isinstance(e, Unop):
            if e.op == "not":
                return f"not {self.expr(e.arg, L_NOT + 1, ind)}", L_NOT
            return f"{e.op}{self.expr(e.arg, L_UNARY, ind)}", L_UNARY
        if isinstance(e, Old):
            return f"old {self.expr(e.arg, L_UNARY, ind)}", L_UNARY
        if isinstance(e, Binop):
            lv = BINOP_LEVEL[e.op]
            right_assoc = e.op in ("::", "->", "<->")
            ls = self.expr(e.left, lv + (1 if right_assoc else 0), ind)
            rs = self.expr(e.right, lv + (0 if right_assoc else 1), ind)
            return f"{ls} {e.op} {rs}", lv
        if isinstance(e, Assign):
            return f"{e.name} := {self.expr(e.value, L_STMT, ind)}", L_STMT
        if isinstance(e, ArrayGet):
            return f"{e.array}.({self.expr(e.index, L_SEQ, ind)})", L_ATOM
        if isinstance(e, ArraySet):
            idx = self.expr(e.index, L_SEQ, ind)
            return f"{e.array}.({idx}) <- {self.expr(e.value, L_STMT, ind)}", L_STMT
        if isinstance(e, ArrayLen):
            return f"length {e.array}", L_APP
        if isinstance(e, ListLit):
            items = "; ".join(self.expr(i, L_STMT, ind) for i in e.items)
            return f"[{items}]", L_ATOM
        if isinstance(e, Constr):
            if not e.args:
                return e.name, L_ATOM
            if len(e.args) == 1:
                return f"{e.name} {self.expr(e.args[0], L_ATOM, ind)}", L_APP
            args = ", ".join(self.expr(a, L_STMT, ind) for a in e.args)
            return f"{e.name} ({args})", L_APP
        if isinstance(e, App):
            parts = [self.expr(e.callee, L_ATOM, ind)]
            parts += [self.expr(a, L_ATOM, ind) for a in e.args]
            return " ".join(parts), L_APP
        if isinstance(e, Perform):
            if not e.args:
                return f"perform {e.effect}", L_APP
            args = " ".join(self.expr(a, L_ATOM, ind) for a in e.args)
            return f"perform ({e.effect} {args})", L_APP
        if isinstance(e, Continue):
            return f"continue {e.k} {self.expr(e.arg, L_ATOM, ind)}", L_APP
        if isinstance(e, Seq):
            fst = self.expr(e.first, L_STMT, ind)
            if _eats_semi(e.first):
                fst = f"({fst})"
            snd = self.expr(e.second, L_SEQ, ind)
            return f"{fst};\n{ind}{snd}", L_SEQ
        if isinstance(e, If):
            c = self.expr(e.cond, L_STMT, ind)
            t = self.expr(e.then, L_STMT, ind + "  ")
            f = self.expr(e.els, L_STMT, ind + "  ")
            return f"if {c} then\n{ind}  {t}\n{ind}else\n{ind}  {f}", L_STMT
        if isinstance(e, LetIn):
            head = "let rec" if e.rec else "let"
            ps = "".join(" " + self.param(p) for p in e.params)
            rt = f" : {e.rettype}" if e.rettype is not None else ""
            bound = self.expr(e.bound, L_SEQ, ind + "  ")
            body = self.expr(e.body, L_SEQ, ind)
            if e.spec is None and "\n" not in bound:
                return (f"{head} {e.name}{ps}{rt} = {bound} in\n"
                        f"{ind}{body}"), L_STMT
            spec = ""
            if e.spec is not None:
                spec = "\n" + ind + self.fun_spec(e.spec, ind)
            return (f"{head} {e.name}{ps}{rt} =\n{ind}  {bound}{spec}\n"
                    f"{ind}in\n{ind}{body}"), L_STMT
        if isinstance(e, Fun):
            spec = ""
            if e.spec is not None:
                spec = " " + self.fun_spec(e.spec, ind)
            ps = " ".join(self.param(p) for p in e.params)
            rt = f" : {e.rettype}" if e.rettype is not None else ""
            return (f"fun{spec} {ps}{rt} -> "
                    f"{self.expr(e.body, L_STMT, ind)}"), L_STMT
        if isinstance(e, Match):
            scrut = self.expr(e.scrutinee, L_STMT, ind)
            lines = [f"match {scrut} with"]
            for i, (pat, body) in enumerate(e.branches):
                b = self.branch_body(body, i == len(e.branches) - 1, ind)
                lines.append(f"{ind}| {self.pattern(pat)} -> {b}")
            return "\n".join(lines), L_STMT
        if isinstance(e, TryHandle):
            return self.handler(e, ind), L_STMT
        raise AssertionError(f"unprintable node {type(e).__name__}")

    def branch_body(self, body: Expr, is_last: bool, ind: str) -> str:
        s = self.expr(body, L_SEQ, ind + "    ")
        if not is_last and _tail_open(body):
            return f"({s})"
        return s

    def handler(self, e: TryHandle, ind: str) -> str:
        scrut = self.expr(e.scrutinee, L_STMT, ind)
        branches = []
        n = len(e.branches) + (1 if e.value_branch else 0)
        if e.value_branch is not None:
            # match-style handler, value branch first
            lines = [f"match {scrut} with"]
            name, body = e.value_branch
            b = self.branch_body(body, n == 1, ind)
            lines.append(f"{ind}| {name} -> {b}")
            start = 2
        else:
            lines = [f"try {scrut} with"]
            start = 1
        for i, br in enumerate(e.branches):
            b = self.branch_body(br.body, start + i == n, ind)
            if br.payload:
                pay = " ".join(br.payload)
                lines.append(f"{ind}| effect ({br.effect} {pay}) {br.k} -> {b}")
            else:
                lines.append(f"{ind}| effect {br.effect} {br.k} -> {b}")
        if e.spec is not None:
            lines.append(f"{ind}{self.handler_spec(e.spec, ind)}")
        return "\n".join(lines)

    # -- patterns, params, specs --------------------------------------------

    def pattern(self, p: Pattern) -> str:
        if isinstance(p, PWild):
            return "_"
        if isinstance(p, PVar):
            return p.name
        if isinstance(p, PLit):
            if p.value is None:
                return "()"
            if isinstance(p.value, bool):
                return "true" if p.value else "false"
            return str(p.value)
        if isinstance(p, PConstr):
            if p.name == "::":
                return f"{self.pattern(p.args[0])} :: {self.pattern(p.args[1])}"
            if p.name == "[]":
                return "[]"
            if not p.args:
                return p.name
            if len(p.args) == 1 and isinstance(p.args[0], (PVar, PWild, PLit)):
                return f"{p.name} {self.pattern(p.args[0])}"
            return f"{p.name} ({', '.join(self.pattern(a) for a in p.args)})"
        raise AssertionError

    def param(self, p: Param) -> str:
        if p.name == "()":
            return "()"
        if p.type is None:
            return p.name
        inner = f"({p.name} : {p.type})"
        if p.ghost:
            return f"({inner} [@ghost])"
        return inner

    def fun_spec(self, spec: SpecClauses, ind: str) -> str:
        lines = []
        for t in spec.requires:
            lines.append(f"requires {self.expr(t, L_IFF, ind)}")
        for t in spec.ensures:
            lines.append(f"ensures {self.expr(t, L_IFF, ind)}")
        if spec.modifies:
            lines.append(f"modifies {', '.join(spec.modifies)}")
        if spec.performs:
            lines.append(f"performs {', '.join(spec.performs)}")
        if spec.variant is not None:
            lines.append(f"variant {self.expr(spec.variant, L_IFF, ind)}")
        for proto in spec.protocols:
            lines.append(self.protocol(proto, ind, local=True))
        inner = f"\n{ind}    ".join(lines)
        return f"(*@ {inner} *)"

    def handler_spec(self, spec: HandlerSpec, ind: str) -> str:
        lines = [f"try_ensures {self.expr(t, L_IFF, ind)}"
                 for t in spec.try_ensures]
        if spec.returns is not None:
            lines.append(f"returns {spec.returns}")
        inner = f"\n{ind}    ".join(lines)
        return f"(*@ {inner} *)"

    def protocol(self, proto: Protocol, ind: str, local: bool) -> str:
        params = "".join(f" {n}" for n, _ in proto.params)
        lines = []
        for t in proto.requires:
            lines.append(f"requires {self.expr(t, L_IFF, ind)}")
        for t in proto.ensures:
            lines.append(f"ensures {self.expr(t, L_IFF, ind)}")
        if proto.modifies:
            lines.append(f"modifies {', '.join(proto.modifies)}")
        body = f"\n{ind}      ".join(lines)
        if local:
            return f"protocol {proto.effect}{params} {{ {body} }}"
        return f"protocol {proto.effect}{params} :\n{ind}      {body}"

    # -- declarations -------------------------------------------------------

    def decl(self, d) -> str:
        if isinstance(d, DEffect):
            return f"effect {d.name} : {d.signature}"
        if isinstance(d, DType):
            ctors = []
            for cname, args in d.constructors:
                if args:
                    ctors.append(f"{cname} of {' * '.join(str(a) for a in args)}")
                else:
                    ctors.append(cname)
            return f"type {d.name} = {' | '.join(ctors)}"
        if isinstance(d, DGlobal):
            if isinstance(d.type, TRef):
                return (f"let {d.name} : {d.type} = "
                        f"ref {self.expr(d.init, L_ATOM, '')}")
            return (f"let {d.name} : {d.type} = "
                    f"Array.make {d.size} {self.expr(d.init, L_ATOM, '')}")
        if isinstance(d, DProtocol):
            return f"(*@ {self.protocol(d.protocol, '', local=False)} *)"
        if isinstance(d, DFun):
            head = "let rec" if d.rec else "let"
            ps = "".join(" " + self.param(p) for p in d.params)
            rt = f" : {d.rettype}" if d.rettype is not None else ""
            body = self.expr(d.body, L_SEQ, "  ")
            s = f"{head} {d.name}{ps}{rt} =\n  {body}"
            if d.spec is not None:
                s += "\n" + self.fun_spec(d.spec, "")
            return s
        raise AssertionError(f"unprintable decl {type(d).__name__}")


def pretty_print(p: SourceProgram) -> str:
    """Render a program; empty programs yield empty output."""
    pr = Printer()
    chunks = [pr.decl(d) for d in p.decls]
    if not chunks:
        return ""
    return "\n\n".join(chunks) + "\n"


def print_expr(e: Expr) -> str:
    return Printer().expr(e, L_SEQ, "")
