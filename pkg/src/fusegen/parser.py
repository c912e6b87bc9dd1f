"""Recursive-descent parser for system description files."""

from __future__ import annotations

from .ast import (
    KNOWN_FUNCTIONS,
    BinOp,
    Call,
    Constant,
    Constraint,
    ConstantRef,
    Description,
    Expr,
    Ident,
    Invariant,
    Neg,
    Num,
    Parameter,
    Pow,
    SignalDecl,
    Uncertainty,
)
from .diagnostics import Diagnostic, SourceError, Span, error
from .lexer import Token, TokenType, tokenize

_DECL_KEYWORDS = ("constant", "invariant", "signal")


class Parser:
    """Turns a token stream into a Description.

    Syntax errors raise SourceError immediately; semantic checks live in
    validate_description so included files can be merged first.
    """

    def __init__(self, tokens: list[Token], filename: str):
        self.tokens = tokens
        self.filename = filename
        self.pos = 0

    # -- token plumbing ------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        index = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[index]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.type is not TokenType.EOF:
            self.pos += 1
        return tok

    def at(self, ttype: TokenType) -> bool:
        return self.peek().type is ttype

    def fail(self, message: str, token: Token | None = None) -> SourceError:
        tok = token if token is not None else self.peek()
        found = "end of file" if tok.type is TokenType.EOF else f"'{tok.text}'"
        return SourceError([error(f"{message}, found {found}", self.filename, tok.span)])

    def expect(self, ttype: TokenType, what: str) -> Token:
        if not self.at(ttype):
            raise self.fail(f"expected {what}")
        return self.advance()

    # -- grammar -------------------------------------------------------

    def parse_description(self) -> Description:
        desc = Description(source_name=self.filename)
        while not self.at(TokenType.EOF):
            tok = self.peek()
            if tok.type is not TokenType.IDENT:
                raise self.fail("expected a declaration")
            if tok.text == "include" and self.peek(1).type is TokenType.STRING:
                self.advance()
                name = self.expect(TokenType.STRING, "an include file name")
                if self.at(TokenType.SEMICOLON):
                    self.advance()
                desc.includes.append(name.text)
                continue
            name = self.advance()
            self.expect(TokenType.COLON, "':' after declaration name")
            kind = self.expect(TokenType.IDENT, "'constant', 'invariant', or 'signal'")
            if kind.text == "constant":
                desc.constants.append(self.parse_constant(name))
            elif kind.text == "invariant":
                desc.invariants.append(self.parse_invariant(name))
            elif kind.text == "signal":
                desc.signals.append(self.parse_signal(name))
            else:
                raise self.fail("expected 'constant', 'invariant', or 'signal'", kind)
        return desc

    def parse_constant(self, name: Token) -> Constant:
        self.expect(TokenType.EQUALS, "'=' in constant declaration")
        value = self.parse_signed_number("a numeric constant value")
        unit = None if self.at(TokenType.SEMICOLON) else self.parse_unit_expr()
        end = self.expect(TokenType.SEMICOLON, "';' after constant declaration")
        return Constant(name.text, value, unit, name.span.merge(end.span))

    def parse_signal(self, name: Token) -> SignalDecl:
        self.expect(TokenType.EQUALS, "'=' in signal declaration")
        definition = self.parse_unit_expr()
        end = self.expect(TokenType.SEMICOLON, "';' after signal declaration")
        return SignalDecl(name.text, definition, name.span.merge(end.span))

    def parse_invariant(self, name: Token) -> Invariant:
        self.expect(TokenType.LPAREN, "'(' before parameter list")
        parameters = [self.parse_parameter()]
        while self.at(TokenType.COMMA):
            self.advance()
            parameters.append(self.parse_parameter())
        self.expect(TokenType.RPAREN, "')' after parameter list")
        self.expect(TokenType.EQUALS, "'=' before constraint block")
        self.expect(TokenType.LBRACE, "'{' before constraints")
        constraints = [self.parse_constraint()]
        while self.at(TokenType.COMMA):
            self.advance()
            constraints.append(self.parse_constraint())
        end = self.expect(TokenType.RBRACE, "'}' after constraints")
        return Invariant(name.text, parameters, constraints, name.span.merge(end.span))

    def parse_parameter(self) -> Parameter:
        name = self.expect(TokenType.IDENT, "a parameter name")
        self.expect(TokenType.COLON, "':' after parameter name")
        signal = self.expect(TokenType.IDENT, "a signal name")
        uncertainty = None
        if self.at(TokenType.EQUALS):
            self.advance()
            kw = self.expect(TokenType.IDENT, "'Gaussian'")
            if kw.text != "Gaussian":
                raise self.fail("expected 'Gaussian'", kw)
            self.expect(TokenType.LPAREN, "'(' after 'Gaussian'")
            mean = self.parse_signed_number("the Gaussian mean")
            self.expect(TokenType.COMMA, "',' between Gaussian arguments")
            variance = self.parse_signed_number("the Gaussian variance")
            close = self.expect(TokenType.RPAREN, "')' after Gaussian arguments")
            uncertainty = Uncertainty(mean, variance, kw.span.merge(close.span))
        span = name.span if uncertainty is None else name.span.merge(uncertainty.span)
        return Parameter(name.text, signal.text, uncertainty, span)

    def parse_constraint(self) -> Constraint:
        lhs = self.expect(TokenType.IDENT, "a constrained parameter name")
        self.expect(TokenType.TILDE, "'~' in constraint")
        rhs = self.parse_expr()
        return Constraint(lhs.text, lhs.span, rhs, lhs.span.merge(rhs.span))

    def parse_signed_number(self, what: str) -> float:
        negative = False
        if self.at(TokenType.MINUS):
            self.advance()
            negative = True
        tok = self.expect(TokenType.NUMBER, what)
        assert tok.value is not None
        return -tok.value if negative else tok.value

    # -- expressions ---------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_additive()

    def parse_additive(self) -> Expr:
        left = self.parse_multiplicative()
        while self.peek().type in (TokenType.PLUS, TokenType.MINUS):
            op = self.advance()
            right = self.parse_multiplicative()
            left = BinOp(left.span.merge(right.span), op.text, left, right)
        return left

    def parse_multiplicative(self) -> Expr:
        left = self.parse_unary()
        while self.peek().type in (TokenType.STAR, TokenType.SLASH):
            op = self.advance()
            right = self.parse_unary()
            left = BinOp(left.span.merge(right.span), op.text, left, right)
        return left

    def parse_unary(self) -> Expr:
        if self.at(TokenType.MINUS):
            op = self.advance()
            operand = self.parse_unary()
            return Neg(op.span.merge(operand.span), operand)
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_atom()
        if self.at(TokenType.DOUBLE_STAR):
            self.advance()
            exponent, end_span = self.parse_integer_exponent()
            return Pow(base.span.merge(end_span), base, exponent)
        return base

    def parse_integer_exponent(self) -> tuple[int, Span]:
        negative = False
        first = self.peek()
        if self.at(TokenType.MINUS):
            self.advance()
            negative = True
        tok = self.peek()
        if tok.type is not TokenType.NUMBER or tok.value is None or not float(tok.value).is_integer():
            raise self.fail("power exponent must be an integer literal")
        self.advance()
        value = int(tok.value)
        return (-value if negative else value), first.span.merge(tok.span)

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.type is TokenType.NUMBER:
            self.advance()
            assert tok.value is not None
            return Num(tok.span, tok.value)
        if tok.type is TokenType.IDENT:
            self.advance()
            if self.at(TokenType.LPAREN):
                if tok.text not in KNOWN_FUNCTIONS:
                    raise self.fail(f"unknown function '{tok.text}'", tok)
                self.advance()
                arg = self.parse_expr()
                close = self.expect(TokenType.RPAREN, "')' after function argument")
                return Call(tok.span.merge(close.span), tok.text, arg)
            return Ident(tok.span, tok.text)
        if tok.type is TokenType.LPAREN:
            self.advance()
            inner = self.parse_expr()
            close = self.expect(TokenType.RPAREN, "')' after expression")
            # Reattach the covering span so diagnostics point at the parens.
            return _with_span(inner, tok.span.merge(close.span))
        raise self.fail("expected an expression")

    # -- unit expressions ----------------------------------------------

    def parse_unit_expr(self) -> Expr:
        left = self.parse_unit_term()
        while self.peek().type in (TokenType.STAR, TokenType.SLASH):
            op = self.advance()
            right = self.parse_unit_term()
            left = BinOp(left.span.merge(right.span), op.text, left, right)
        return left

    def parse_unit_term(self) -> Expr:
        tok = self.peek()
        if tok.type is TokenType.IDENT:
            self.advance()
            base: Expr = Ident(tok.span, tok.text)
        elif tok.type is TokenType.NUMBER:
            self.advance()
            assert tok.value is not None
            base = Num(tok.span, tok.value)
        elif tok.type is TokenType.LPAREN:
            self.advance()
            base = self.parse_unit_expr()
            close = self.expect(TokenType.RPAREN, "')' in unit expression")
            base = _with_span(base, tok.span.merge(close.span))
        else:
            raise self.fail("expected a unit expression")
        if self.at(TokenType.DOUBLE_STAR):
            self.advance()
            exponent, end_span = self.parse_integer_exponent()
            return Pow(base.span.merge(end_span), base, exponent)
        return base


def _with_span(expr: Expr, span: Span) -> Expr:
    """Copy of *expr* with its top-level span replaced."""
    if isinstance(expr, Ident):
        return Ident(span, expr.name)
    if isinstance(expr, ConstantRef):
        return ConstantRef(span, expr.name)
    if isinstance(expr, Num):
        return Num(span, expr.value)
    if isinstance(expr, Neg):
        return Neg(span, expr.operand)
    if isinstance(expr, BinOp):
        return BinOp(span, expr.op, expr.left, expr.right)
    if isinstance(expr, Pow):
        return Pow(span, expr.base, expr.exponent)
    if isinstance(expr, Call):
        return Call(span, expr.func, expr.arg)
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def validate_description(desc: Description) -> list[Diagnostic]:
    """Semantic checks that do not need the signal table.

    Resolves identifiers in constraint expressions against the invariant's
    parameters and the description's constants (rewriting constant uses to
    ConstantRef nodes in place).  Collects all problems instead of stopping
    at the first.
    """
    diags: list[Diagnostic] = []
    filename = desc.source_name

    seen_constants: dict[str, Constant] = {}
    for const in desc.constants:
        if const.name in seen_constants:
            diags.append(error(f"duplicate constant '{const.name}'", filename, const.span))
        else:
            seen_constants[const.name] = const

    seen_signals: set[str] = set()
    for sig in desc.signals:
        if sig.name in seen_signals:
            diags.append(error(f"duplicate signal declaration '{sig.name}'", filename, sig.span))
        seen_signals.add(sig.name)

    seen_invariants: set[str] = set()
    for inv in desc.invariants:
        if inv.name in seen_invariants:
            diags.append(error(f"duplicate invariant '{inv.name}'", filename, inv.span))
        seen_invariants.add(inv.name)

        param_names: set[str] = set()
        for param in inv.parameters:
            if param.name in param_names:
                diags.append(
                    error(
                        f"duplicate parameter '{param.name}' in invariant '{inv.name}'",
                        filename,
                        param.span,
                    )
                )
            param_names.add(param.name)
            unc = param.uncertainty
            if unc is not None and unc.variance < 0:
                diags.append(
                    error(
                        f"negative variance {unc.variance:g} on parameter '{param.name}'",
                        filename,
                        unc.span,
                    )
                )

        constrained: set[str] = set()
        for cons in inv.constraints:
            if cons.lhs not in param_names:
                diags.append(
                    error(
                        f"constraint target '{cons.lhs}' is not a parameter of "
                        f"invariant '{inv.name}'",
                        filename,
                        cons.lhs_span,
                    )
                )
            if cons.lhs in constrained:
                diags.append(
                    error(
                        f"parameter '{cons.lhs}' is constrained more than once in "
                        f"invariant '{inv.name}'",
                        filename,
                        cons.lhs_span,
                    )
                )
            constrained.add(cons.lhs)
            cons.rhs = _resolve_expr(cons.rhs, param_names, seen_constants, filename, diags)

    return diags


def _resolve_expr(
    expr: Expr,
    params: set[str],
    constants: dict[str, Constant],
    filename: str,
    diags: list[Diagnostic],
) -> Expr:
    if isinstance(expr, Ident):
        if expr.name in params:
            return expr
        if expr.name in constants:
            return ConstantRef(expr.span, expr.name)
        diags.append(
            error(f"'{expr.name}' is not a parameter or constant", filename, expr.span)
        )
        return expr
    if isinstance(expr, Neg):
        return Neg(expr.span, _resolve_expr(expr.operand, params, constants, filename, diags))
    if isinstance(expr, BinOp):
        return BinOp(
            expr.span,
            expr.op,
            _resolve_expr(expr.left, params, constants, filename, diags),
            _resolve_expr(expr.right, params, constants, filename, diags),
        )
    if isinstance(expr, Pow):
        return Pow(expr.span, _resolve_expr(expr.base, params, constants, filename, diags), expr.exponent)
    if isinstance(expr, Call):
        return Call(expr.span, expr.func, _resolve_expr(expr.arg, params, constants, filename, diags))
    return expr


def parse_only(source: str, filename: str = "<input>") -> Description:
    """Structural parse with no semantic validation (used while merging
    included files)."""
    return Parser(tokenize(source, filename), filename).parse_description()


def parse_description(source: str, filename: str = "<input>") -> Description:
    """Parse and validate a single source text.

    Raises SourceError carrying every collected diagnostic if the text is
    syntactically or semantically malformed.
    """
    desc = parse_only(source, filename)
    diags = validate_description(desc)
    if diags:
        raise SourceError(diags)
    return desc
