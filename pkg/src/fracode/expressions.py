"""Right-hand-side expression language: f(t, u) from text.

A small Pratt parser over real literals, the variables t and u, the
operators + - * / ^ (with ^ right-associative and binding tighter than
the operand of unary minus, so -u^2 means -(u^2)), and the functions
sin, cos, exp, log, abs, pow, min, max.  No implicit multiplication.

Trees are immutable; evaluation is pure and raises EvalError with the
byte offset of the offending node instead of letting inf or nan leak
into a solver run.  `match_power_law` recognizes A*u^p shapes exactly
(constants folded, never round-tripped through sampled evaluation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Unary",
    "Binary",
    "Call",
    "ExprError",
    "ParseError",
    "EvalError",
    "parse",
    "evaluate",
    "to_str",
    "match_power_law",
    "lipschitz_probe",
]


class ExprError(ValueError):
    """Base for expression failures; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ParseError(ExprError):
    pass


class EvalError(ExprError):
    pass


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Num(Expr):
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var(Expr):
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    args: tuple[Expr, ...]
    offset: int = field(default=0, compare=False)


_FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "log": 1,
    "abs": 1,
    "pow": 2,
    "min": 2,
    "max": 2,
}
_VARIABLES = ("t", "u")

# binding powers: +,- then *,/ then unary minus, ^ on top
_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_BP = 25


@dataclass(frozen=True)
class _Token:
    kind: str  # num | ident | op | lparen | rparen | comma | end
    text: str
    offset: int


def _lex(src: str) -> list[_Token]:
    toks = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"bad number literal {text!r}", i) from None
            toks.append(_Token("num", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(_Token("ident", src[i:j], i))
            i = j
            continue
        if c in "+-*/^":
            toks.append(_Token("op", c, i))
            i += 1
            continue
        if c == "(":
            toks.append(_Token("lparen", c, i))
            i += 1
            continue
        if c == ")":
            toks.append(_Token("rparen", c, i))
            i += 1
            continue
        if c == ",":
            toks.append(_Token("comma", c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    toks.append(_Token("end", "", n))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _lex(src)
        self.pos = 0

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def advance(self) -> _Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {what}", tok.offset)
        return self.advance()

    def expression(self, min_bp: int) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            left: Expr = Num(float(tok.text), tok.offset)
        elif tok.kind == "ident":
            left = self.name(tok)
        elif tok.kind == "op" and tok.text == "-":
            left = Unary("-", self.expression(_UNARY_BP), tok.offset)
        elif tok.kind == "lparen":
            left = self.expression(0)
            self.expect("rparen", "')'")
        else:
            raise ParseError("expected a value", tok.offset)

        while True:
            tok = self.peek()
            if tok.kind != "op":
                break
            bp = _LBP[tok.text]
            if bp <= min_bp:
                break
            self.advance()
            # ^ is right-associative: let an equal-power ^ on the
            # right win by re-entering with bp-1
            rhs_bp = bp - 1 if tok.text == "^" else bp
            right = self.expression(rhs_bp)
            left = Binary(tok.text, left, right, tok.offset)
        return left

    def name(self, tok: _Token) -> Expr:
        if tok.text in _VARIABLES:
            return Var(tok.text, tok.offset)
        if tok.text in _FUNCTIONS:
            arity = _FUNCTIONS[tok.text]
            self.expect("lparen", f"'(' after {tok.text}")
            args = [self.expression(0)]
            while self.peek().kind == "comma":
                self.advance()
                args.append(self.expression(0))
            self.expect("rparen", "')'")
            if len(args) != arity:
                raise ParseError(
                    f"{tok.text} takes {arity} argument(s), got {len(args)}",
                    tok.offset,
                )
            return Call(tok.text, tuple(args), tok.offset)
        raise ParseError(f"unknown identifier {tok.text!r}", tok.offset)


def parse(src: str) -> Expr:
    """Parse source text into an expression tree.

    Raises ParseError (with byte offset) on syntax errors, unknown
    identifiers, and wrong function arities.
    """
    if not src or src.isspace():
        raise ParseError("empty expression", 0)
    p = _Parser(src)
    e = p.expression(0)
    tok = p.peek()
    if tok.kind != "end":
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.offset)
    return e


def _pow(a: float, b: float, offset: int) -> float:
    if a == 0.0 and b < 0.0:
        raise EvalError("division by zero in power", offset)
    if a < 0.0 and b != math.floor(b):
        raise EvalError("negative base with non-integer exponent", offset)
    try:
        return math.pow(a, b)
    except OverflowError:
        raise EvalError("overflow in power", offset) from None


def evaluate(e: Expr, t: float, u: float) -> float:
    """Evaluate at (t, u) with IEEE double semantics.

    Domain failures (log of a nonpositive value, 0 raised to a negative
    power, division by zero) and overflow to non-finite raise EvalError
    pointing at the responsible node.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return t if e.name == "t" else u
    if isinstance(e, Unary):
        return -evaluate(e.arg, t, u)
    if isinstance(e, Binary):
        a = evaluate(e.left, t, u)
        b = evaluate(e.right, t, u)
        if e.op == "+":
            r = a + b
        elif e.op == "-":
            r = a - b
        elif e.op == "*":
            r = a * b
        elif e.op == "/":
            if b == 0.0:
                raise EvalError("division by zero", e.offset)
            r = a / b
        else:
            r = _pow(a, b, e.offset)
        if not math.isfinite(r):
            raise EvalError(f"non-finite result from '{e.op}'", e.offset)
        return r
    if isinstance(e, Call):
        vals = [evaluate(a, t, u) for a in e.args]
        try:
            if e.fn == "sin":
                r = math.sin(vals[0])
            elif e.fn == "cos":
                r = math.cos(vals[0])
            elif e.fn == "exp":
                r = math.exp(vals[0])
            elif e.fn == "log":
                if vals[0] <= 0.0:
                    raise EvalError("log of a nonpositive value", e.offset)
                r = math.log(vals[0])
            elif e.fn == "abs":
                r = abs(vals[0])
            elif e.fn == "pow":
                r = _pow(vals[0], vals[1], e.offset)
            elif e.fn == "min":
                r = min(vals[0], vals[1])
            else:
                r = max(vals[0], vals[1])
        except OverflowError:
            raise EvalError(f"overflow in {e.fn}", e.offset) from None
        if not math.isfinite(r):
            raise EvalError(f"non-finite result from {e.fn}", e.offset)
        return r
    raise TypeError(f"not an Expr node: {e!r}")


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _LBP[e.op]
    if isinstance(e, Unary):
        return _UNARY_BP
    return 100


def to_str(e: Expr) -> str:
    """Canonical text form; parse(to_str(e)) reproduces the tree.

    Holds for any tree the parser can produce (the parser never emits
    a negative Num literal, it parses "-2" as unary minus).
    """
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        arg = to_str(e.arg)
        if _prec(e.arg) < _UNARY_BP:
            arg = f"({arg})"
        return f"-{arg}"
    if isinstance(e, Binary):
        bp = _LBP[e.op]
        left = to_str(e.left)
        right = to_str(e.right)
        if e.op == "^":
            # right-assoc: parenthesize an equal-power left child
            if _prec(e.left) <= bp:
                left = f"({left})"
            if _prec(e.right) < bp:
                right = f"({right})"
        else:
            if _prec(e.left) < bp:
                left = f"({left})"
            if _prec(e.right) <= bp:
                right = f"({right})"
        return f"{left} {e.op} {right}" if bp == 10 else f"{left}{e.op}{right}"
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(to_str(a) for a in e.args)})"
    raise TypeError(f"not an Expr node: {e!r}")


def _contains_u(e: Expr) -> bool:
    if isinstance(e, Var):
        return e.name == "u"
    if isinstance(e, Unary):
        return _contains_u(e.arg)
    if isinstance(e, Binary):
        return _contains_u(e.left) or _contains_u(e.right)
    if isinstance(e, Call):
        return any(_contains_u(a) for a in e.args)
    return False


def _const_value(e: Expr) -> float | None:
    # fold a variable-free subtree; None if it has variables or fails
    if _has_vars(e):
        return None
    try:
        return evaluate(e, 0.0, 0.0)
    except EvalError:
        return None


def _has_vars(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, Unary):
        return _has_vars(e.arg)
    if isinstance(e, Binary):
        return _has_vars(e.left) or _has_vars(e.right)
    if isinstance(e, Call):
        return any(_has_vars(a) for a in e.args)
    return False


def match_power_law(e: Expr) -> tuple[float, float] | None:
    """Recognize f(t,u) = A * u^p; return (A, p) or None.

    Handles products/quotients of constant factors with one u-factor
    shaped like u, u^c, or pow(u, c), with unary minus folded into A.
    Constants are folded exactly (never sampled), so downstream
    asymptotic formulas see the same A and p the user typed.
    """
    sign = [1.0]
    factors: list[tuple[Expr, bool]] = []

    def split(node: Expr, inverted: bool):
        if isinstance(node, Unary) and node.op == "-":
            sign[0] = -sign[0]
            split(node.arg, inverted)
        elif isinstance(node, Binary) and node.op == "*":
            split(node.left, inverted)
            split(node.right, inverted)
        elif isinstance(node, Binary) and node.op == "/":
            split(node.left, inverted)
            split(node.right, not inverted)
        else:
            factors.append((node, inverted))

    split(e, False)

    a = sign[0]
    p: float | None = None
    for node, inverted in factors:
        if _contains_u(node):
            if p is not None:
                return None
            if isinstance(node, Var) and node.name == "u":
                p = 1.0
            elif (
                isinstance(node, Binary)
                and node.op == "^"
                and isinstance(node.left, Var)
                and node.left.name == "u"
            ):
                c = _const_value(node.right)
                if c is None:
                    return None
                p = c
            elif (
                isinstance(node, Call)
                and node.fn == "pow"
                and isinstance(node.args[0], Var)
                and node.args[0].name == "u"
            ):
                c = _const_value(node.args[1])
                if c is None:
                    return None
                p = c
            else:
                return None
            if inverted:
                p = -p
        else:
            c = _const_value(node)
            if c is None:
                return None
            a = a / c if inverted else a * c
    if p is None:
        return None
    return a, p


def lipschitz_probe(
    e: Expr,
    t_range: tuple[float, float],
    u_range: tuple[float, float],
    n: int = 33,
) -> float:
    """Finite-difference estimate of max |df/du| over a box.

    Central differences on an n-by-n grid; probe points where
    evaluation fails (domain edges) are skipped.  Raises EvalError if
    no probe point evaluates.
    """
    t_lo, t_hi = t_range
    u_lo, u_hi = u_range
    du = max(1e-7 * (abs(u_lo) + abs(u_hi) + 1.0), 1e-9)
    best = None
    for i in range(n):
        t = t_lo + (t_hi - t_lo) * (i / (n - 1) if n > 1 else 0.5)
        for j in range(n):
            u = u_lo + (u_hi - u_lo) * (j / (n - 1) if n > 1 else 0.5)
            try:
                hi = evaluate(e, t, u + du)
                lo = evaluate(e, t, u - du)
            except EvalError:
                continue
            slope = abs(hi - lo) / (2.0 * du)
            if best is None or slope > best:
                best = slope
    if best is None:
        raise EvalError("no probe point in the box was evaluable", 0)
    return best
