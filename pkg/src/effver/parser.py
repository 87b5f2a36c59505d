"""Recursive-descent parser for `.eff` files.

Layout-insensitive, keyword-delimited.  Specification clauses live in
`(*@ ... *)` blocks.  A spec block directly after a `try`/`match` handler
whose first clause is `try_ensures` or `returns` attaches to the handler;
any other block attaches to the enclosing function definition.
"""

from __future__ import annotations

from typing import Optional

from .errors import SyntaxParseError
from .lexer import Token, tokenize
from .syntax import (
    App, ArrayGet, ArrayLen, ArraySet, Assign, Binop, Constr, Continue,
    DEffect, DFun, DGlobal, DProtocol, DType, EffBranch, Expr, Fun,
    HandlerSpec, If, LetIn, ListLit, Lit, Match, Old, Param, Pattern,
    PConstr, Perform, PLit, Protocol, PVar, PWild, Quant, ReplyVar,
    ResultVar, Seq, SourceProgram, Span, SpecClauses, TArray, TArrow, TBool,
    TCon, TInt, TList, TRef, TryHandle, TUnit, Type, Unop, Var,
)

CMP_OPS = ("=", "<>", "<", "<=", ">", ">=")
FN_SPEC_KWS = ("requires", "ensures", "modifies", "performs", "variant", "protocol")
HANDLER_SPEC_KWS = ("try_ensures", "returns")


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.pos = 0
        self.src = src

    # -- token plumbing ------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def at(self, kind: str, text: Optional[str] = None, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.kind == kind and (text is None or t.text == text)

    def at_kw(self, word: str, ahead: int = 0) -> bool:
        return self.at("KW", word, ahead)

    def at_op(self, op: str, ahead: int = 0) -> bool:
        return self.at("OP", op, ahead)

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text or kind
            raise SyntaxParseError(
                f"unexpected {t.text!r}", t.span, expected=(want,))
        return self.next()

    def expect_kw(self, word: str) -> Token:
        return self.expect("KW", word)

    def expect_op(self, op: str) -> Token:
        return self.expect("OP", op)

    def span_from(self, start: Span) -> Span:
        prev = self.toks[max(0, self.pos - 1)]
        return Span(start.start, prev.span.end, start.line, start.col)

    # -- types -----------------------------------------------------------

    def parse_type(self) -> Type:
        t = self.parse_type_postfix()
        if self.at_op("->"):
            self.next()
            return TArrow(t, self.parse_type())
        return t

    def parse_type_postfix(self) -> Type:
        t = self.parse_type_atom()
        while True:
            if self.at_kw("ref"):
                self.next()
                t = TRef(t)
            elif self.at("IDENT", "array"):
                self.next()
                t = TArray(t)
            elif self.at("IDENT", "list"):
                self.next()
                t = TList(t)
            else:
                return t

    def parse_type_atom(self) -> Type:
        t = self.peek()
        if t.kind == "IDENT":
            self.next()
            if t.text == "int":
                return TInt()
            if t.text == "bool":
                return TBool()
            if t.text == "unit":
                return TUnit()
            return TCon(t.text)
        if t.kind == "UIDENT":
            self.next()
            return TCon(t.text)
        if self.at_op("("):
            self.next()
            inner = self.parse_type()
            self.expect_op(")")
            return inner
        raise SyntaxParseError(f"expected a type, found {t.text!r}", t.span)

    # -- declarations ----------------------------------------------------

    def parse_program(self) -> SourceProgram:
        decls = []
        while not self.at("EOF"):
            decls.append(self.parse_decl())
        return SourceProgram(decls)

    def parse_decl(self):
        t = self.peek()
        if self.at_kw("effect"):
            return self.parse_effect_decl()
        if self.at_kw("type"):
            return self.parse_type_decl()
        if self.at_kw("let"):
            return self.parse_let_decl()
        if self.at("SPEC_OPEN"):
            start = self.next().span
            self.expect_kw("protocol")
            proto = self.parse_protocol(start, local=False)
            self.expect("SPEC_CLOSE")
            return DProtocol(proto, span=self.span_from(start))
        raise SyntaxParseError(
            f"unexpected {t.text!r} at top level", t.span,
            expected=("let", "effect", "type", "(*@ protocol"))

    def parse_effect_decl(self) -> DEffect:
        start = self.expect_kw("effect").span
        name = self.expect("UIDENT").text
        self.expect_op(":")
        sig = self.parse_type()
        return DEffect(name, sig, span=self.span_from(start))

    def parse_type_decl(self) -> DType:
        start = self.expect_kw("type").span
        name = self.expect("IDENT").text
        self.expect_op("=")
        ctors = []
        if self.at_op("|"):
            self.next()
        while True:
            cname = self.expect("UIDENT").text
            args: list[Type] = []
            if self.at_kw("of"):
                self.next()
                args.append(self.parse_type_postfix())
                while self.at_op("*"):
                    self.next()
                    args.append(self.parse_type_postfix())
            ctors.append((cname, args))
            if self.at_op("|"):
                self.next()
                continue
            break
        return DType(name, ctors, span=self.span_from(start))

    def parse_let_decl(self):
        start = self.expect_kw("let").span
        rec = False
        if self.at_kw("rec"):
            self.next()
            rec = True
        name = self.expect("IDENT").text
        # a global mutable definition: `let x : t ref = ref e` / array make
        if self.at_op(":") and not rec:
            save = self.pos
            self.next()
            ty = self.parse_type()
            if isinstance(ty, (TRef, TArray)):
                self.expect_op("=")
                return self.parse_global_init(start, name, ty)
            self.pos = save
        params = self.parse_params()
        rettype = None
        if self.at_op(":"):
            self.next()
            rettype = self.parse_type()
        self.expect_op("=")
        body = self.parse_expr()
        spec = self.maybe_fun_spec()
        return DFun(name, params, rettype, rec, body, spec,
                    span=self.span_from(start))

    def parse_global_init(self, start: Span, name: str, ty: Type) -> DGlobal:
        if isinstance(ty, TRef):
            self.expect_kw("ref")
            init = self.parse_app()
            return DGlobal(name, ty, init, span=self.span_from(start))
        tok = self.peek()
        if tok.kind == "UIDENT" and tok.text == "Array":
            self.next()
            self.expect_op(".")
            self.expect("IDENT", "make")
        else:
            self.expect("IDENT", "make")
        size_tok = self.expect("INT")
        init = self.parse_atom()
        return DGlobal(name, ty, init, size=int(size_tok.text),
                       span=self.span_from(start))

    def parse_params(self) -> list[Param]:
        params: list[Param] = []
        while True:
            t = self.peek()
            if t.kind == "IDENT" and not self.at_op(":", 1):
                # bare parameter name (no annotation)
                self.next()
                params.append(Param(t.text, None, span=t.span))
                continue
            if self.at_op("("):
                if self.at_op(")", 1):
                    self.next()
                    self.next()
                    params.append(Param("()", TUnit(), span=t.span))
                    continue
                # `(x : t)` possibly wrapped as `((x : t) [@ghost])`
                save = self.pos
                self.next()
                wrapped = False
                if self.at_op("("):
                    self.next()
                    wrapped = True
                if self.peek().kind == "IDENT" and self.at_op(":", 1):
                    pname = self.next().text
                    self.next()
                    pty = self.parse_type()
                    ghost = False
                    self.expect_op(")")
                    if self.at("GHOST"):
                        self.next()
                        ghost = True
                    if wrapped:
                        self.expect_op(")")
                    params.append(Param(pname, pty, ghost=ghost, span=t.span))
                    continue
                self.pos = save
            break
        return params

    # -- spec blocks -------------------------------------------------------

    def maybe_fun_spec(self) -> Optional[SpecClauses]:
        if not self.at("SPEC_OPEN"):
            return None
        start = self.next().span
        spec = self.parse_fun_clauses(start)
        self.expect("SPEC_CLOSE")
        return spec

    def parse_fun_clauses(self, start: Span) -> SpecClauses:
        spec = SpecClauses(span=start)
        while True:
            t = self.peek()
            if t.kind != "KW" or t.text not in FN_SPEC_KWS:
                break
            self.next()
            if t.text == "requires":
                spec.requires.append(self.parse_term())
            elif t.text == "ensures":
                spec.ensures.append(self.parse_term())
            elif t.text == "modifies":
                spec.modifies.extend(self.parse_ident_list())
            elif t.text == "performs":
                spec.performs.extend(self.parse_effect_list())
            elif t.text == "variant":
                spec.variant = self.parse_term()
            elif t.text == "protocol":
                spec.protocols.append(self.parse_protocol(t.span, local=True))
        return spec

    def parse_ident_list(self) -> list[str]:
        names = [self.expect("IDENT").text]
        while self.at_op(","):
            self.next()
            names.append(self.expect("IDENT").text)
        return names

    def parse_effect_list(self) -> list[str]:
        names = [self.expect("UIDENT").text]
        while self.at_op(","):
            self.next()
            names.append(self.expect("UIDENT").text)
        return names

    def parse_protocol(self, start: Span, local: bool) -> Protocol:
        effect = self.expect("UIDENT").text
        params: list[tuple[str, Optional[Type]]] = []
        while self.peek().kind == "IDENT":
            params.append((self.next().text, None))
        proto = Protocol(effect, params, [], [], [], span=start)
        if self.at_op("{"):
            self.next()
            self.parse_protocol_clauses(proto, until_brace=True)
            self.expect_op("}")
        else:
            self.expect_op(":")
            self.parse_protocol_clauses(proto, until_brace=False)
        return proto

    def parse_protocol_clauses(self, proto: Protocol, until_brace: bool):
        while True:
            t = self.peek()
            if t.kind != "KW" or t.text not in ("requires", "ensures", "modifies"):
                break
            self.next()
            if t.text == "requires":
                proto.requires.append(self.parse_term())
            elif t.text == "ensures":
                proto.ensures.append(self.parse_term())
            else:
                proto.modifies.extend(self.parse_ident_list())

    def maybe_handler_spec(self) -> Optional[HandlerSpec]:
        if not self.at("SPEC_OPEN"):
            return None
        nxt = self.peek(1)
        if nxt.kind != "KW" or nxt.text not in HANDLER_SPEC_KWS:
            return None
        start = self.next().span
        spec = HandlerSpec(span=start)
        while True:
            t = self.peek()
            if self.at_kw("try_ensures"):
                self.next()
                spec.try_ensures.append(self.parse_term())
            elif self.at_kw("returns"):
                self.next()
                spec.returns = self.parse_type()
            else:
                break
        self.expect("SPEC_CLOSE")
        return spec

    # -- expressions -------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_seq(term=False)

    def parse_term(self) -> Expr:
        return self.parse_quant(term=True)

    def parse_quant(self, term: bool) -> Expr:
        if term and (self.at_kw("forall") or self.at_kw("exists")):
            t = self.next()
            binders = []
            while self.peek().kind == "IDENT":
                name = self.next().text
                ty: Type = TInt()
                if self.at_op(":"):
                    self.next()
                    ty = self.parse_type()
                binders.append((name, ty))
            self.expect_op(".")
            body = self.parse_quant(term)
            return Quant(t.text, binders, body,
                         span=self.span_from(t.span))
        return self.parse_iff(term)

    def parse_iff(self, term: bool) -> Expr:
        left = self.parse_implies(term)
        if term and self.at_op("<->"):
            self.next()
            right = self.parse_iff(term)
            return Binop("<->", left, right, span=left.span)
        return left

    def parse_implies(self, term: bool) -> Expr:
        left = self.parse_binop(term, 0)
        if term and self.at_op("->"):
            self.next()
            right = self.parse_implies(term)
            return Binop("->", left, right, span=left.span)
        return left

    def parse_seq(self, term: bool) -> Expr:
        first = self.parse_stmt(term)
        if self.at_op(";"):
            self.next()
            second = self.parse_seq(term)
            return Seq(first, second, span=first.span)
        return first

    def parse_stmt(self, term: bool) -> Expr:
        if self.at_kw("let"):
            return self.parse_let_in(term)
        if self.at_kw("fun"):
            return self.parse_fun()
        if self.at_kw("if"):
            return self.parse_if(term)
        if self.at_kw("match"):
            return self.parse_match(term)
        if self.at_kw("try"):
            return self.parse_try(term)
        return self.parse_assign(term)

    def parse_let_in(self, term: bool) -> Expr:
        start = self.expect_kw("let").span
        rec = False
        if self.at_kw("rec"):
            self.next()
            rec = True
        if self.peek().kind == "IDENT":
            name = self.next().text
        else:
            # `let _ = e in ...`
            name = self.expect("IDENT").text
        params = self.parse_params()
        rettype = None
        if self.at_op(":"):
            self.next()
            rettype = self.parse_type()
        self.expect_op("=")
        bound = self.parse_seq(term)
        spec = self.maybe_fun_spec() if params else None
        self.expect_kw("in")
        body = self.parse_seq(term)
        return LetIn(name, params, rettype, rec, bound, spec, body,
                     span=self.span_from(start))

    def parse_fun(self) -> Expr:
        start = self.expect_kw("fun").span
        spec = self.maybe_fun_spec()
        params = self.parse_params()
        if not params:
            raise SyntaxParseError("fun needs at least one parameter",
                                   self.peek().span)
        rettype = None
        if self.at_op(":"):
            # no arrows here: an arrow return type needs parentheses
            self.next()
            rettype = self.parse_type_postfix()
        self.expect_op("->")
        body = self.parse_seq(term=False)
        return Fun(params, rettype, spec, body, span=self.span_from(start))

    def parse_if(self, term: bool) -> Expr:
        start = self.expect_kw("if").span
        cond = self.parse_stmt(term)
        self.expect_kw("then")
        then = self.parse_stmt(term)
        self.expect_kw("else")
        els = self.parse_stmt(term)
        return If(cond, then, els, span=self.span_from(start))

    def parse_match(self, term: bool) -> Expr:
        start = self.expect_kw("match").span
        scrutinee = self.parse_stmt(term)
        self.expect_kw("with")
        plain: list[tuple[Pattern, Expr]] = []
        effected: list[EffBranch] = []
        value_branch: Optional[tuple[str, Expr]] = None
        saw_effect = False
        if self.at_op("|"):
            self.next()
        while True:
            if self.at_kw("effect"):
                saw_effect = True
                effected.append(self.parse_eff_branch(term))
            else:
                pat = self.parse_pattern()
                self.expect_op("->")
                body = self.parse_seq(term)
                plain.append((pat, body))
            if self.at_op("|"):
                self.next()
                continue
            break
        span = self.span_from(start)
        if saw_effect:
            for pat, body in plain:
                if not isinstance(pat, PVar):
                    raise SyntaxParseError(
                        "the value branch of a handler must bind a variable",
                        pat.span)
                if value_branch is not None:
                    raise SyntaxParseError("duplicate value branch", pat.span)
                value_branch = (pat.name, body)
            spec = self.maybe_handler_spec()
            return TryHandle(scrutinee, effected, value_branch, spec, span=span)
        return Match(scrutinee, plain, span=span)

    def parse_try(self, term: bool) -> Expr:
        start = self.expect_kw("try").span
        scrutinee = self.parse_seq(term)
        self.expect_kw("with")
        branches: list[EffBranch] = []
        value_branch: Optional[tuple[str, Expr]] = None
        if self.at_op("|"):
            self.next()
        while True:
            if self.at_kw("effect"):
                branches.append(self.parse_eff_branch(term))
            else:
                pat = self.parse_pattern()
                if not isinstance(pat, PVar):
                    raise SyntaxParseError(
                        "the value branch of a handler must bind a variable",
                        self.peek().span)
                self.expect_op("->")
                body = self.parse_seq(term)
                if value_branch is not None:
                    raise SyntaxParseError("duplicate value branch", pat.span)
                value_branch = (pat.name, body)
            if self.at_op("|"):
                self.next()
                continue
            break
        spec = self.maybe_handler_spec()
        return TryHandle(scrutinee, branches, value_branch, spec,
                         span=self.span_from(start))

    def parse_eff_branch(self, term: bool) -> EffBranch:
        start = self.expect_kw("effect").span
        payload: list[str] = []
        if self.at_op("("):
            self.next()
            effect = self.expect("UIDENT").text
            while self.peek().kind == "IDENT":
                payload.append(self.next().text)
            self.expect_op(")")
        else:
            effect = self.expect("UIDENT").text
        k = self.expect("IDENT").text
        self.expect_op("->")
        body = self.parse_seq(term)
        return EffBranch(effect, payload, k, body, span=start)

    def parse_pattern(self) -> Pattern:
        pat = self.parse_pattern_atom()
        if self.at_op("::"):
            self.next()
            rest = self.parse_pattern()
            return PConstr("::", [pat, rest], span=pat.span)
        return pat

    def parse_pattern_atom(self) -> Pattern:
        t = self.peek()
        if t.kind == "UIDENT":
            self.next()
            args: list[Pattern] = []
            if self.at_op("("):
                self.next()
                args.append(self.parse_pattern())
                while self.at_op(","):
                    self.next()
                    args.append(self.parse_pattern())
                self.expect_op(")")
            elif self.peek().kind in ("IDENT", "INT"):
                # single unparenthesised argument, e.g. `Int x`
                args.append(self.parse_pattern_atom())
            return PConstr(t.text, args, span=t.span)
        if t.kind == "IDENT":
            self.next()
            if t.text == "_":
                return PWild(span=t.span)
            return PVar(t.text, span=t.span)
        if t.kind == "INT":
            self.next()
            return PLit(int(t.text), span=t.span)
        if self.at_kw("true") or self.at_kw("false"):
            self.next()
            return PLit(t.text == "true", span=t.span)
        if self.at_op("(") and self.at_op(")", 1):
            self.next()
            self.next()
            return PLit(None, span=t.span)
        if self.at_op("[") and self.at_op("]", 1):
            self.next()
            self.next()
            return PConstr("[]", [], span=t.span)
        raise SyntaxParseError(f"expected a pattern, found {t.text!r}", t.span)

    def parse_assign(self, term: bool) -> Expr:
        left = self.parse_binop(term, 0)
        if not term and self.at_op(":="):
            self.next()
            if not isinstance(left, Var):
                raise SyntaxParseError("only a reference name can be assigned",
                                       left.span)
            value = self.parse_stmt(term)
            return Assign(left.name, value, span=left.span)
        if not term and self.at_op("<-"):
            self.next()
            if not isinstance(left, ArrayGet):
                raise SyntaxParseError("only an array cell can be assigned",
                                       left.span)
            value = self.parse_stmt(term)
            return ArraySet(left.array, left.index, value, span=left.span)
        return left

    # binop precedence tiers, loosest first
    BINOP_TIERS = [
        ["||"],
        ["&&"],
        list(CMP_OPS),
        ["::"],
        ["+", "-"],
        ["*", "/", "mod"],
    ]

    def parse_binop(self, term: bool, tier: int) -> Expr:
        if tier >= len(self.BINOP_TIERS):
            return self.parse_unary(term)
        ops = self.BINOP_TIERS[tier]
        if tier == 2 and self.at_kw("not"):
            # `not` binds looser than comparisons, tighter than &&
            start = self.next().span
            arg = self.parse_binop(term, tier)
            return Unop("not", arg, span=start)
        left = self.parse_binop(term, tier + 1)
        while True:
            t = self.peek()
            matched = (t.kind == "OP" and t.text in ops) or \
                      (t.kind == "KW" and t.text in ops)
            if not matched:
                return left
            if t.text == "::":
                self.next()
                right = self.parse_binop(term, tier)  # right assoc
                return Binop("::", left, right, span=left.span)
            self.next()
            right = self.parse_binop(term, tier + 1)
            left = Binop(t.text, left, right, span=left.span)

    def parse_unary(self, term: bool) -> Expr:
        t = self.peek()
        if self.at_op("!"):
            self.next()
            arg = self.parse_unary(term)
            return Unop("!", arg, span=t.span)
        if self.at_op("-"):
            self.next()
            arg = self.parse_unary(term)
            return Unop("-", arg, span=t.span)
        if term and self.at_kw("old"):
            self.next()
            arg = self.parse_unary(term)
            return Old(arg, span=t.span)
        return self.parse_app(term)

    def parse_app(self, term: bool = False) -> Expr:
        t = self.peek()
        if self.at_kw("perform"):
            return self.parse_perform()
        if self.at_kw("continue"):
            self.next()
            k = self.expect("IDENT").text
            arg = self.parse_atom(term)
            return Continue(k, arg, span=self.span_from(t.span))
        if t.kind == "UIDENT":
            return self.parse_constr(term)
        callee = self.parse_atom(term)
        args = []
        while self.starts_atom(term):
            args.append(self.parse_atom(term))
        if not args:
            return callee
        if isinstance(callee, App):
            return App(callee.callee, callee.args + args, span=callee.span)
        return App(callee, args, span=callee.span)

    def parse_perform(self) -> Expr:
        start = self.expect_kw("perform").span
        if self.peek().kind == "UIDENT":
            eff = self.next().text
            return Perform(eff, [], span=self.span_from(start))
        self.expect_op("(")
        eff = self.expect("UIDENT").text
        args = []
        while self.starts_atom(term=False):
            args.append(self.parse_atom(term=False))
        self.expect_op(")")
        return Perform(eff, args, span=self.span_from(start))

    def parse_constr(self, term: bool) -> Expr:
        t = self.expect("UIDENT")
        if t.text == "Array" and self.at_op("."):
            self.next()
            fn = self.expect("IDENT").text
            callee = Var(f"Array.{fn}", span=t.span)
            args = []
            while self.starts_atom(term):
                args.append(self.parse_atom(term))
            return App(callee, args, span=t.span)
        args: list[Expr] = []
        if self.at_op("("):
            save = self.pos
            self.next()
            first = self.parse_stmt(term) if not term else self.parse_quant(term)
            if self.at_op(","):
                args.append(first)
                while self.at_op(","):
                    self.next()
                    args.append(self.parse_stmt(term) if not term
                                else self.parse_quant(term))
                self.expect_op(")")
            elif self.at_op(")"):
                self.next()
                args.append(first)
            else:
                self.pos = save
        elif self.starts_atom(term):
            nxt = self.peek()
            # a following atom is this constructor's argument unless it is
            # itself an uppercase name (those must be parenthesised)
            if nxt.kind != "UIDENT":
                args.append(self.parse_atom(term))
        return Constr(t.text, args, span=self.span_from(t.span))

    def starts_atom(self, term: bool) -> bool:
        t = self.peek()
        if t.kind in ("INT", "IDENT", "UIDENT"):
            return True
        if t.kind == "KW" and t.text in ("true", "false", "result", "reply"):
            return t.text not in ("result", "reply") or term
        if t.kind == "OP" and t.text in ("(", "["):
            return True
        if t.kind == "KW" and t.text == "begin":
            return True
        return False

    def parse_atom(self, term: bool = False) -> Expr:
        t = self.peek()
        if t.kind == "INT":
            self.next()
            return Lit(int(t.text), span=t.span)
        if self.at_kw("true") or self.at_kw("false"):
            self.next()
            return Lit(t.text == "true", span=t.span)
        if term and self.at_kw("result"):
            self.next()
            return ResultVar(span=t.span)
        if term and self.at_kw("reply"):
            self.next()
            return ReplyVar(span=t.span)
        if t.kind == "IDENT":
            self.next()
            expr: Expr = Var(t.text, span=t.span)
            return self.parse_postfix(expr, term)
        if t.kind == "UIDENT":
            self.next()
            return Constr(t.text, [], span=t.span)
        if self.at_op("("):
            self.next()
            if self.at_op(")"):
                self.next()
                return Lit(None, span=t.span)
            inner = self.parse_seq(term) if not term else self.parse_quant(term)
            self.expect_op(")")
            return self.parse_postfix(inner, term)
        if self.at_kw("begin"):
            self.next()
            inner = self.parse_seq(term)
            self.expect_kw("end")
            return inner
        if self.at_op("["):
            self.next()
            items = []
            if not self.at_op("]"):
                items.append(self.parse_stmt(term))
                while self.at_op(";"):
                    self.next()
                    items.append(self.parse_stmt(term))
            self.expect_op("]")
            return ListLit(items, span=t.span)
        raise SyntaxParseError(f"unexpected {t.text or 'end of file'!r}", t.span)

    def parse_postfix(self, expr: Expr, term: bool) -> Expr:
        while self.at_op(".("):
            if not isinstance(expr, Var):
                raise SyntaxParseError("array access needs an array name",
                                       expr.span)
            self.next()
            idx = self.parse_seq(term) if not term else self.parse_quant(term)
            self.expect_op(")")
            expr = ArrayGet(expr.name, idx, span=expr.span)
        return expr


def parse_program(text: str) -> SourceProgram:
    """Parse a complete `.eff` source file."""
    return Parser(text).parse_program()


def parse_expression(text: str) -> Expr:
    """Parse a single expression (used by the CLI to read run arguments)."""
    p = Parser(text)
    e = p.parse_expr()
    p.expect("EOF")
    return e
