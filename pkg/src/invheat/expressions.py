"""Tiny arithmetic expression language for problem definitions.

Grammar (a calculator, not a CAS):

    expr   := term  (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?          # right-associative exponent
    atom   := NUMBER | 'pi' | 'x' | 't'
            | ('sin' | 'cos' | 'exp') '(' expr ')'
            | '(' expr ')'

Expressions evaluate on scalars or numpy arrays and differentiate
symbolically (an internal natural-log node supports d/dv of f^g with a
non-constant exponent; it is never produced by the parser).
"""

from __future__ import annotations

import numpy as np

from .errors import ExpressionError

__all__ = ["Expression", "parse_expression"]

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "log": np.log}


class _Node:
    def eval(self, env):
        raise NotImplementedError

    def diff(self, var):
        raise NotImplementedError

    def text(self):
        raise NotImplementedError

    # precedence used when emitting parentheses
    prec = 10


class _Num(_Node):
    def __init__(self, value):
        self.value = float(value)

    def eval(self, env):
        return self.value

    def diff(self, var):
        return _Num(0.0)

    def text(self):
        return repr(self.value)


class _Pi(_Node):
    def eval(self, env):
        return np.pi

    def diff(self, var):
        return _Num(0.0)

    def text(self):
        return "pi"


class _Var(_Node):
    def __init__(self, name):
        self.name = name

    def eval(self, env):
        return env[self.name]

    def diff(self, var):
        return _Num(1.0 if var == self.name else 0.0)

    def text(self):
        return self.name


class _Bin(_Node):
    op = "?"

    def __init__(self, a, b):
        self.a = a
        self.b = b

    def text(self):
        left = self.a.text() if self.a.prec >= self.prec else f"({self.a.text()})"
        # right operand needs parens at equal precedence for - / ^
        rp = self.b.prec > self.prec if self.op in "-/^" else self.b.prec >= self.prec
        right = self.b.text() if rp else f"({self.b.text()})"
        return f"{left} {self.op} {right}" if self.op != "^" else f"{left}^{right}"


class _Add(_Bin):
    op, prec = "+", 1

    def eval(self, env):
        return self.a.eval(env) + self.b.eval(env)

    def diff(self, var):
        return _add(self.a.diff(var), self.b.diff(var))


class _Sub(_Bin):
    op, prec = "-", 1

    def eval(self, env):
        return self.a.eval(env) - self.b.eval(env)

    def diff(self, var):
        return _sub(self.a.diff(var), self.b.diff(var))


class _Mul(_Bin):
    op, prec = "*", 2

    def eval(self, env):
        return self.a.eval(env) * self.b.eval(env)

    def diff(self, var):
        return _add(_mul(self.a.diff(var), self.b), _mul(self.a, self.b.diff(var)))


class _Div(_Bin):
    op, prec = "/", 2

    def eval(self, env):
        return self.a.eval(env) / self.b.eval(env)

    def diff(self, var):
        num = _sub(_mul(self.a.diff(var), self.b), _mul(self.a, self.b.diff(var)))
        return _Div(num, _Pow(self.b, _Num(2.0)))


class _Pow(_Bin):
    op, prec = "^", 4

    def eval(self, env):
        return self.a.eval(env) ** self.b.eval(env)

    def diff(self, var):
        db = self.b.diff(var)
        if isinstance(self.b, _Num) or (isinstance(db, _Num) and db.value == 0.0):
            # f^c -> c f^(c-1) f'
            expo = _sub(self.b, _Num(1.0))
            return _mul(_mul(self.b, _Pow(self.a, expo)), self.a.diff(var))
        # general case via f^g = exp(g log f)
        term = _add(_mul(db, _Call("log", self.a)), _Div(_mul(self.b, self.a.diff(var)), self.a))
        return _mul(self, term)


class _Neg(_Node):
    prec = 3

    def __init__(self, a):
        self.a = a

    def eval(self, env):
        return -self.a.eval(env)

    def diff(self, var):
        return _Neg(self.a.diff(var))

    def text(self):
        inner = self.a.text() if self.a.prec >= self.prec else f"({self.a.text()})"
        return f"-{inner}"


class _Call(_Node):
    def __init__(self, fn, arg):
        self.fn = fn
        self.arg = arg

    def eval(self, env):
        return _FUNCTIONS[self.fn](self.arg.eval(env))

    def diff(self, var):
        da = self.arg.diff(var)
        if self.fn == "sin":
            outer = _Call("cos", self.arg)
        elif self.fn == "cos":
            outer = _Neg(_Call("sin", self.arg))
        elif self.fn == "exp":
            outer = self
        elif self.fn == "log":
            return _Div(da, self.arg)
        return _mul(outer, da)

    def text(self):
        return f"{self.fn}({self.arg.text()})"


def _is_zero(n):
    return isinstance(n, _Num) and n.value == 0.0


def _is_one(n):
    return isinstance(n, _Num) and n.value == 1.0


# light folding keeps iterated derivatives from exploding
def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    if isinstance(a, _Num) and isinstance(b, _Num):
        return _Num(a.value + b.value)
    return _Add(a, b)


def _sub(a, b):
    if _is_zero(b):
        return a
    if isinstance(a, _Num) and isinstance(b, _Num):
        return _Num(a.value - b.value)
    if _is_zero(a):
        return _Neg(b)
    return _Sub(a, b)


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return _Num(0.0)
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    if isinstance(a, _Num) and isinstance(b, _Num):
        return _Num(a.value * b.value)
    return _Mul(a, b)


class _Tokenizer:
    def __init__(self, text, offset=0):
        self.text = text
        self.pos = 0
        self.offset = offset  # shift reported positions (key prefix in problem files)
        self.tokens = []
        self._scan()
        self.index = 0

    def _error(self, message, pos):
        raise ExpressionError(message, position=pos + self.offset)

    def _scan(self):
        text = self.text
        i, n = 0, len(text)
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c in "+-*/^()":
                self.tokens.append((c, c, i))
                i += 1
                continue
            if c.isdigit() or c == ".":
                j = i
                seen_dot = False
                while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                    seen_dot |= text[j] == "."
                    j += 1
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        j = k
                        while j < n and text[j].isdigit():
                            j += 1
                try:
                    value = float(text[i:j])
                except ValueError:
                    self._error(f"bad number {text[i:j]!r}", i)
                self.tokens.append(("num", value, i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("name", text[i:j], i))
                i = j
                continue
            self._error(f"unexpected character {c!r}", i)
        self.tokens.append(("end", None, n))

    def peek(self):
        return self.tokens[self.index]

    def next(self):
        tok = self.tokens[self.index]
        self.index += 1
        return tok


class _Parser:
    def __init__(self, tokenizer, variables):
        self.tk = tokenizer
        self.variables = frozenset(variables)

    def _error(self, message, pos):
        raise ExpressionError(message, position=pos + self.tk.offset)

    def parse(self):
        node = self.expr()
        kind, _, pos = self.tk.peek()
        if kind != "end":
            self._error("trailing input", pos)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, _, _ = self.tk.peek()
            if kind in ("+", "-"):
                self.tk.next()
                rhs = self.term()
                node = _Add(node, rhs) if kind == "+" else _Sub(node, rhs)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, _, _ = self.tk.peek()
            if kind in ("*", "/"):
                self.tk.next()
                rhs = self.factor()
                node = _Mul(node, rhs) if kind == "*" else _Div(node, rhs)
            else:
                return node

    def factor(self):
        kind, _, _ = self.tk.peek()
        if kind == "-":
            self.tk.next()
            return _Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        kind, _, _ = self.tk.peek()
        if kind == "^":
            self.tk.next()
            return _Pow(base, self.factor())
        return base

    def atom(self):
        kind, value, pos = self.tk.next()
        if kind == "num":
            return _Num(value)
        if kind == "(":
            node = self.expr()
            k, _, p = self.tk.next()
            if k != ")":
                self._error("expected ')'", p)
            return node
        if kind == "name":
            if value == "pi":
                return _Pi()
            if value in _FUNCTIONS and value != "log":
                k, _, p = self.tk.next()
                if k != "(":
                    self._error(f"{value} needs parenthesized argument", p)
                arg = self.expr()
                k, _, p = self.tk.next()
                if k != ")":
                    self._error("expected ')'", p)
                return _Call(value, arg)
            if value in self.variables:
                return _Var(value)
            self._error(f"unknown identifier {value!r}", pos)
        self._error("expected a value", pos)


class Expression:
    """A parsed expression: evaluable, differentiable, printable."""

    def __init__(self, root, variables, source=None):
        self._root = root
        self.variables = frozenset(variables)
        self.source = source

    def __call__(self, **env):
        return self._root.eval(env)

    def diff(self, var: str) -> "Expression":
        if var not in self.variables:
            return Expression(_Num(0.0), self.variables)
        return Expression(self._root.diff(var), self.variables)

    def to_string(self) -> str:
        return self._root.text()

    def __repr__(self):
        return f"Expression({self.to_string()!r})"


def parse_expression(text: str, variables=("x", "t"), offset: int = 0) -> Expression:
    """Parse ``text`` over the given variable names.

    ``offset`` shifts reported error positions, letting callers report
    offsets within an enclosing line.
    """
    tokenizer = _Tokenizer(text, offset=offset)
    root = _Parser(tokenizer, variables).parse()
    return Expression(root, variables, source=text)
