"""
A small arithmetic grammar for the problem functions of custom problems.

    expr    := operand (binop operand)*
    operand := number | name | name "(" expr ("," expr)* ")" | "-" operand | "(" expr ")"

Binary operators by binding power: + - (10), * / (20), ^ (30, right
associative). Unary minus sits between * and ^, so -x^2 is -(x^2).
Evaluation is elementwise over numpy arrays.
"""
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from numerics.exceptions import NumericsError
from numerics.green import sigma_reduced, sigma_stable
from numerics.specfun import MLIndex, mittag_leffler_array

from .exceptions import ArityError, ExpressionDomainError, ExpressionSyntaxError, UnknownIdentifierError

VARIABLES = frozenset({'t', 'x', 'r', 'c'})

BINARY_BP = {'+': 10, '-': 10, '*': 20, '/': 20, '^': 30}
UNARY_BP = 25

OPERAND_START = frozenset({'number', 'name', '(', '-'})
AFTER_OPERAND = frozenset(BINARY_BP) | {')', ',', 'end'}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),])"
    r")"
)


class Token(NamedTuple):
    kind: str
    text: str
    offset: int


def tokenize(src):
    tokens = []
    pos = 0
    end = len(src.rstrip())
    while pos < end:
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos or m.lastgroup is None:
            offset = len(src) - len(src[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {src[offset]!r}", offset, OPERAND_START)
        offset = m.start(m.lastgroup)
        text = m.group(m.lastgroup)
        if text == '**':
            raise ExpressionSyntaxError("'**' is not an operator (powers are written with '^')", offset, BINARY_BP)
        tokens.append(Token(m.lastgroup, text, offset))
        pos = m.end()
    tokens.append(Token('end', '', len(src)))
    return tokens


# -- syntax tree -------------------------------------------------------------

def _checked(node, value, detail=""):
    if not np.all(np.isfinite(value)):
        raise ExpressionDomainError(str(node), detail)
    return value


@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return repr(self.value)

    def evaluate(self, env, params):
        return self.value


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name

    def evaluate(self, env, params):
        try:
            return env[self.name]
        except KeyError:
            raise ExpressionDomainError(self.name, "no value bound") from None


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object

    def __str__(self):
        return f"({self.op}{self.operand})"

    def evaluate(self, env, params):
        return -self.operand.evaluate(env, params)


_BINARY_OPS = {
    '+': np.add,
    '-': np.subtract,
    '*': np.multiply,
    '/': np.divide,
    '^': np.power,
}


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"

    def evaluate(self, env, params):
        a = np.asarray(self.left.evaluate(env, params), dtype=float)
        b = np.asarray(self.right.evaluate(env, params), dtype=float)
        with np.errstate(all='ignore'):
            return _checked(self, _BINARY_OPS[self.op](a, b))


def _scalar(node, value, what):
    value = np.asarray(value, dtype=float)
    if value.size == 0 or np.any(value != value.flat[0]):
        raise ExpressionDomainError(str(node), f"{what} must be a constant")
    return float(value.flat[0])


def _sigma_call(node, args, params, reflected=False):
    if params is None:
        raise ExpressionDomainError(str(node), "sigma() needs kernel parameters (mu, omega)")
    try:
        if reflected:
            return sigma_reduced(params, args[0], reflected=True)
        return sigma_stable(params, args[0])
    except NumericsError as exc:
        raise ExpressionDomainError(str(node), str(exc)) from exc


def _ml_call(node, args, params):
    mu = _scalar(node, args[0], "mu")
    nu = _scalar(node, args[1], "nu")
    try:
        return mittag_leffler_array(MLIndex(mu, nu), args[2])
    except NumericsError as exc:
        raise ExpressionDomainError(str(node), str(exc)) from exc


FUNCTIONS = {
    'sqrt': (1, lambda node, a, p: np.sqrt(a[0])),
    'exp': (1, lambda node, a, p: np.exp(a[0])),
    'log': (1, lambda node, a, p: np.log(a[0])),
    'abs': (1, lambda node, a, p: np.abs(a[0])),
    'pow': (2, lambda node, a, p: np.power(a[0], a[1])),
    'sigma': (1, _sigma_call),
    'ml': (3, _ml_call),
}


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple

    def __str__(self):
        return f"{self.name}({', '.join(str(a) for a in self.args)})"

    def evaluate(self, env, params):
        arg = self.args[0]
        if self.name == 'sigma' and isinstance(arg, Binary) and arg.op == '-' and arg.left == Num(1.0):
            # sigma(1 - s) is formed from s directly; 1 - s in floating point loses small s
            s = np.asarray(arg.right.evaluate(env, params), dtype=float)
            return _checked(self, _sigma_call(self, [s], params, reflected=True))
        args = [np.asarray(a.evaluate(env, params), dtype=float) for a in self.args]
        with np.errstate(all='ignore'):
            return _checked(self, FUNCTIONS[self.name][1](self, args, params))


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, src, names):
        self.tokens = tokenize(src)
        self.names = names
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text, expected):
        tok = self.peek()
        if tok.text != text or tok.kind == 'end':
            raise ExpressionSyntaxError(f"expected {text!r}", tok.offset, expected)
        return self.advance()

    def expression(self, rbp=0):
        left = self.operand()
        while True:
            tok = self.peek()
            lbp = BINARY_BP.get(tok.text, 0) if tok.kind == 'op' else 0
            if lbp <= rbp:
                return left
            self.advance()
            # ^ re-enters one level lower so that a^b^c = a^(b^c)
            right = self.expression(lbp - 1 if tok.text == '^' else lbp)
            left = Binary(tok.text, left, right)

    def operand(self):
        tok = self.advance()
        if tok.kind == 'number':
            value = float(tok.text)
            if not np.isfinite(value):
                raise ExpressionSyntaxError("numeric literal out of range", tok.offset, OPERAND_START)
            return Num(value)
        if tok.kind == 'name':
            if self.peek().text == '(':
                return self.call(tok)
            if tok.text in self.names:
                return Var(tok.text)
            if tok.text in FUNCTIONS:
                raise ExpressionSyntaxError(f"expected '(' after {tok.text}", self.peek().offset, {'('})
            raise UnknownIdentifierError(tok.text, tok.offset)
        if tok.text == '-':
            return Unary('-', self.expression(UNARY_BP))
        if tok.text == '(':
            inner = self.expression()
            self.expect(')', frozenset(BINARY_BP) | {')'})
            return inner
        raise ExpressionSyntaxError("expected an operand", tok.offset, OPERAND_START)

    def call(self, name_tok):
        if name_tok.text not in FUNCTIONS:
            raise UnknownIdentifierError(name_tok.text, name_tok.offset)
        self.advance()
        args = [self.expression()]
        while self.peek().text == ',':
            self.advance()
            args.append(self.expression())
        self.expect(')', frozenset(BINARY_BP) | {',', ')'})
        arity = FUNCTIONS[name_tok.text][0]
        if len(args) != arity:
            raise ArityError(name_tok.text, arity, len(args), name_tok.offset)
        return Call(name_tok.text, tuple(args))

    def parse(self):
        root = self.expression()
        tok = self.peek()
        if tok.kind != 'end':
            raise ExpressionSyntaxError(f"unexpected {tok.text!r}", tok.offset, AFTER_OPERAND)
        return root


@dataclass(frozen=True)
class Expression:
    root: object
    source: str = ""

    def __str__(self):
        return str(self.root)

    def __eq__(self, other):
        return isinstance(other, Expression) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    @property
    def identifiers(self):
        found = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Var):
                found.add(node.name)
            elif isinstance(node, Unary):
                stack.append(node.operand)
            elif isinstance(node, Binary):
                stack.extend((node.left, node.right))
            elif isinstance(node, Call):
                stack.extend(node.args)
        return found

    def evaluate(self, env, params=None):
        """Evaluate with `env` mapping names to scalars or arrays; `params` binds sigma()."""
        return self.root.evaluate(env, params)


def parse_expr(src, variables=VARIABLES, constants=()):
    """
    Parse `src`. Identifiers must be one of `variables` or a name in
    `constants`; constants are bound by value at evaluation time.
    """
    names = frozenset(variables) | frozenset(constants)
    return Expression(_Parser(src, names).parse(), src)


def compile_expr(expr, params, constants, arguments):
    """
    Close `expr` over `params` and `constants` into a vectorized function of
    the named positional `arguments`, returning float arrays broadcast
    against them.
    """
    constants = dict(constants)

    def fn(*values):
        arrays = [np.asarray(v, dtype=float) for v in values]
        env = {**constants, **dict(zip(arguments, arrays))}
        out = np.asarray(expr.evaluate(env, params), dtype=float)
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        return np.broadcast_to(out, shape).copy() if out.shape != shape else out

    fn.expression = expr
    return fn
