#!/usr/bin/env python3
"""
Parser and evaluator for the arithmetic expressions defining the reward functions f_i over a point u of P_{d+1}.

Grammar:
    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | VAR | FUNC '(' expr (',' expr)* ')' | '(' expr ')'
    VAR   := 'u' DIGIT

Precedence is ^ > unary - > *,/ > +,-. The ^ operator is right-associative, the others left-associative.

Expressions are evaluated in three ways:
    - walk(): the reference tree-walking evaluator, the only one that reports the offending sub-expression
    - Expr.__call__(): a compiled lambda, used in the simulation loop. On a domain error it falls back to walk() to
      locate the failing node
    - evaluate_array(): vectorized evaluation over many points at once (grid sweeps)

author: Enoc Martínez
institution: Universitat Politècnica de Catalunya (UPC)
email: enoc.martinez@upc.edu
license: MIT
created: 4/10/26
"""
import math
import re
from dataclasses import dataclass

import numpy as np

from potluck.common import ExprSyntaxError, EvaluationError, ValidationError

MAX_DIMENSION = 9  # variables are u0..u9

# function name -> arity
functions = {
    "min": 2,
    "max": 2,
    "abs": 1,
    "exp": 1,
    "log": 1,
    "sin": 1,
    "cos": 1,
}


# ---------------- AST ---------------- #
@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


def pretty(node) -> str:
    """
    Prints a node back as an expression string. Every compound sub-expression is parenthesized, so that parsing the
    result gives back the same tree.
    """
    if isinstance(node, Num):
        return repr(node.value)
    elif isinstance(node, Var):
        return f"u{node.index}"
    elif isinstance(node, Neg):
        return f"(-{pretty(node.operand)})"
    elif isinstance(node, BinOp):
        return f"({pretty(node.left)} {node.op} {pretty(node.right)})"
    elif isinstance(node, Call):
        return f"{node.name}({', '.join(pretty(a) for a in node.args)})"
    raise TypeError(f"Unknown node type {type(node)}")


# ---------------- Tokenizer ---------------- #
__token_regex = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # number, var, func, op, end
    text: str
    offset: int  # byte offset in the source


def tokenize(src: str) -> list:
    tokens = []
    pos = 0
    while pos < len(src):
        m = __token_regex.match(src, pos)
        offset = len(src[:pos].encode())
        if not m:
            raise ExprSyntaxError(f"Unexpected character '{src[pos]}'", src, offset,
                                  expected=["number", "variable", "function", "operator"])
        kind = m.lastgroup
        text = m.group()
        if kind == "name":
            if re.fullmatch(r"u\d", text):
                kind = "var"
            elif text in functions.keys():
                kind = "func"
            else:
                raise ExprSyntaxError(f"Unknown identifier '{text}'", src, offset,
                                      expected=["u<digit>"] + list(functions.keys()))
        if kind != "space":
            tokens.append(Token(kind, text, offset))
        pos = m.end()
    tokens.append(Token("end", "", len(src.encode())))
    return tokens


class Parser:
    """
    Recursive descent parser, one method per grammar rule
    """
    def __init__(self, src: str, d: int):
        self.src = src
        self.d = d
        self.tokens = tokenize(src)
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, expected: list):
        tok = self.peek()
        found = f"'{tok.text}'" if tok.kind != "end" else "end of input"
        raise ExprSyntaxError(f"{message}, found {found}", self.src, tok.offset, expected=expected)

    def expect(self, text: str):
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            self.fail(f"Expected '{text}'", [text])
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.peek().kind != "end":
            self.fail("Unexpected token", ["+", "-", "*", "/", "^", "end of input"])
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek().kind == "op" and self.peek().text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            node = BinOp("^", node, self.unary())
        return node

    def atom(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"Numeric literal '{tok.text}' out of range", self.src, tok.offset)
            return Num(value)
        elif tok.kind == "var":
            self.advance()
            index = int(tok.text[1:])
            if index > self.d:
                raise ExprSyntaxError(f"Variable index out of range: '{tok.text}' with d={self.d}", self.src,
                                      tok.offset, expected=[f"u{i}" for i in range(self.d + 1)])
            return Var(index)
        elif tok.kind == "func":
            self.advance()
            self.expect("(")
            args = [self.expr()]
            while self.peek().kind == "op" and self.peek().text == ",":
                self.advance()
                args.append(self.expr())
            if self.peek().kind != "op" or self.peek().text != ")":
                self.fail(f"Expected ')' closing call to {tok.text}", [",", ")"])
            self.advance()
            if len(args) != functions[tok.text]:
                raise ExprSyntaxError(f"Function {tok.text} takes {functions[tok.text]} argument(s), "
                                      f"got {len(args)}", self.src, tok.offset)
            return Call(tok.text, tuple(args))
        elif tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail("Expected an operand", ["number", "variable", "function", "("])


# ---------------- Evaluation ---------------- #
def _apply(node, op: str, a, b=None):
    """
    Scalar operation with domain checks, raises EvaluationError naming the node
    """
    try:
        if op == "+":
            return a + b
        elif op == "-":
            return a - b
        elif op == "*":
            return a * b
        elif op == "/":
            if b == 0:
                raise EvaluationError("division by zero", pretty(node))
            return a / b
        elif op == "^":
            if a == 0 and b < 0:
                raise EvaluationError("zero raised to a negative power", pretty(node))
            if a < 0 and not float(b).is_integer():
                raise EvaluationError("negative base with non-integer exponent", pretty(node))
            return math.pow(a, b)
        elif op == "neg":
            return -a
        elif op == "log":
            if a <= 0:
                raise EvaluationError("log of non-positive value", pretty(node))
            return math.log(a)
        elif op == "exp":
            return math.exp(a)
        elif op == "sin":
            return math.sin(a)
        elif op == "cos":
            return math.cos(a)
        elif op == "abs":
            return abs(a)
        elif op == "min":
            return min(a, b)
        elif op == "max":
            return max(a, b)
    except OverflowError:
        raise EvaluationError("overflow", pretty(node))
    raise ValueError(f"Unknown operation {op}")


def walk(node, u) -> float:
    """
    Reference tree-walking evaluator
    :param node: AST node
    :param u: sequence with the coordinates u0..ud
    """
    if isinstance(node, Num):
        return node.value
    elif isinstance(node, Var):
        return float(u[node.index])
    elif isinstance(node, Neg):
        return _apply(node, "neg", walk(node.operand, u))
    elif isinstance(node, BinOp):
        return _apply(node, node.op, walk(node.left, u), walk(node.right, u))
    elif isinstance(node, Call):
        args = [walk(a, u) for a in node.args]
        return _apply(node, node.name, *args)
    raise TypeError(f"Unknown node type {type(node)}")


# Names available to the compiled lambdas
__compiled_namespace = {
    "__builtins__": {},
    "_pow": math.pow,
    "_min": min,
    "_max": max,
    "_abs": abs,
    "_exp": math.exp,
    "_log": math.log,
    "_sin": math.sin,
    "_cos": math.cos,
}


def _to_python(node) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    elif isinstance(node, Var):
        return f"u[{node.index}]"
    elif isinstance(node, Neg):
        return f"(-{_to_python(node.operand)})"
    elif isinstance(node, BinOp):
        if node.op == "^":
            return f"_pow({_to_python(node.left)}, {_to_python(node.right)})"
        return f"({_to_python(node.left)} {node.op} {_to_python(node.right)})"
    elif isinstance(node, Call):
        return f"_{node.name}({', '.join(_to_python(a) for a in node.args)})"
    raise TypeError(f"Unknown node type {type(node)}")


def compile_node(node):
    """
    Compiles an AST into a python lambda taking the coordinate sequence u. The source is generated from the tree only
    (never from user text) and evaluated without builtins.
    """
    code = compile(f"lambda u: {_to_python(node)}", "<expr>", "eval")
    return eval(code, dict(__compiled_namespace))


_array_ops = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
    "min": np.minimum,
    "max": np.maximum,
    "abs": np.abs,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
}


def _walk_array(node, columns: np.ndarray):
    if isinstance(node, Num):
        return node.value
    elif isinstance(node, Var):
        return columns[:, node.index]
    elif isinstance(node, Neg):
        return np.negative(_walk_array(node.operand, columns))
    elif isinstance(node, BinOp):
        args = (_walk_array(node.left, columns), _walk_array(node.right, columns))
        name = node.op
    elif isinstance(node, Call):
        args = tuple(_walk_array(a, columns) for a in node.args)
        name = node.name
    else:
        raise TypeError(f"Unknown node type {type(node)}")

    if name == "log" and np.any(np.asarray(args[0]) <= 0):
        raise EvaluationError("log of non-positive value", pretty(node))
    if name == "/" and np.any(np.asarray(args[1]) == 0):
        raise EvaluationError("division by zero", pretty(node))
    if name == "^":
        base, exponent = np.broadcast_arrays(np.asarray(args[0], dtype=float), np.asarray(args[1], dtype=float))
        if np.any((base == 0) & (exponent < 0)):
            raise EvaluationError("zero raised to a negative power", pretty(node))
        if np.any((base < 0) & (exponent != np.floor(exponent))):
            raise EvaluationError("negative base with non-integer exponent", pretty(node))
    try:
        with np.errstate(over="raise"):
            return _array_ops[name](*args)
    except FloatingPointError:
        raise EvaluationError("overflow", pretty(node))


class Expr:
    """
    A parsed expression over u0..ud. Immutable after parse.
    """
    def __init__(self, root, d: int, src: str = ""):
        self.root = root
        self.d = d
        self.src = src if src else pretty(root)
        self.__compiled = compile_node(root)

    def __call__(self, u) -> float:
        try:
            return float(self.__compiled(u))
        except (ZeroDivisionError, ValueError, OverflowError):
            walk(self.root, u)  # raises EvaluationError on the offending sub-expression
            raise EvaluationError("domain error", self.src)

    def __eq__(self, other):
        return isinstance(other, Expr) and self.root == other.root and self.d == other.d

    def __hash__(self):
        return hash((self.root, self.d))

    def __str__(self):
        return pretty(self.root)

    def __repr__(self):
        return f"Expr({self.src!r}, d={self.d})"

    def __getstate__(self):  # compiled lambdas can't be pickled, rebuild them on unpickling
        return {"root": self.root, "d": self.d, "src": self.src}

    def __setstate__(self, state):
        self.__init__(state["root"], state["d"], state["src"])


def parse(src: str, d: int) -> Expr:
    """
    Parses an expression string
    :param src: expression source
    :param d: dimension, variables u0..ud are allowed
    :returns: Expr
    """
    if type(src) is not str or not src.strip():
        raise ExprSyntaxError("Empty expression", str(src), 0, expected=["number", "variable", "function", "("])
    if not 0 <= d <= MAX_DIMENSION:
        raise ValidationError(f"dimension d={d} not supported, variables are limited to u0..u{MAX_DIMENSION}")
    root = Parser(src, d).parse()
    return Expr(root, d, src)


def evaluate(e: Expr, u) -> float:
    """
    Evaluates the expression at u (a DistPoint or any sequence of d+1 reals)
    """
    if len(u) != e.d + 1:
        raise ValidationError(f"point has {len(u)} coordinates, expression expects {e.d + 1}")
    return e(u)


def evaluate_array(e: Expr, points: np.ndarray) -> np.ndarray:
    """
    Evaluates the expression at many points at once
    :param points: array with shape (N, d+1), one point per row
    :returns: array with N values
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != e.d + 1:
        raise ValidationError(f"points should have shape (N, {e.d + 1}), got {points.shape}")
    values = _walk_array(e.root, points)
    return np.broadcast_to(np.asarray(values, dtype=float), (points.shape[0],)).copy()
