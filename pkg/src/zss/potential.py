"""Analytic potentials evaluable at complex arguments.

A potential is defined either by a small expression language (one free
variable x, real literals, + - * / ^ with integer exponents, and the
functions sech, tanh, exp, sin, cos, sqrt) or by a named builtin family.
Real coefficients make every potential real-analytic, so V(conj x) equals
conj V(x) automatically.  Evaluation is guarded to the declared analyticity
strip |Im x| < strip_halfwidth.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# default analyticity strip: sech and tanh have their first poles at i*pi/2
DEFAULT_STRIP = 0.45 * math.pi


class PotentialError(ValueError):
    pass


class ParseError(PotentialError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class StripError(PotentialError):
    """Evaluation point outside the declared analyticity strip."""


class DecayError(PotentialError):
    """Potential does not decay at +-infinity."""


# ---------------------------------------------------------------------------
# expression language: tokenizer + recursive-descent parser over tuples
# ---------------------------------------------------------------------------

_FUNCTIONS = ("sech", "tanh", "exp", "sin", "cos", "sqrt")

# node forms: ('num', float) ('x',) ('neg', a) ('add'|'sub'|'mul'|'div', a, b)
#             ('pow', a, int) ('call', name, a)
Node = tuple


def _tokenize(text: str) -> list[tuple[str, Any, int]]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE" and j + 1 < n and (
                text[j + 1].isdigit() or (text[j + 1] in "+-" and j + 2 < n and text[j + 2].isdigit())
            ):
                j += 2
                while j < n and text[j].isdigit():
                    j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise ParseError(f"malformed number {text[i:j]!r}", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and text[j].isalnum():
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        if text.startswith("**", i):
            tokens.append(("op", "^", i))
            i += 2
            continue
        if c in "+-*/^()":
            tokens.append(("op", c, i))
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val, at = self.next()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", at)

    def parse(self) -> Node:
        node = self.expr()
        kind, val, at = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {val!r}", at)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.term()
                node = ("add" if val == "+" else "sub", node, rhs)
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.unary()
                node = ("mul" if val == "*" else "div", node, rhs)
            else:
                return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.next()
            node = self.unary()
            return node if val == "+" else ("neg", node)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        kind, val, at = self.peek()
        if kind == "op" and val == "^":
            self.next()
            exponent = self.exponent()
            return ("pow", base, exponent)
        return base

    def exponent(self) -> int:
        sign = 1
        kind, val, at = self.peek()
        if kind == "op" and val in "+-":
            self.next()
            if val == "-":
                sign = -1
            kind, val, at = self.peek()
        if kind != "num":
            raise ParseError("expected integer exponent", at)
        self.next()
        if val != int(val):
            raise ParseError(f"non-integer exponent {val}", at)
        return sign * int(val)

    def atom(self) -> Node:
        kind, val, at = self.next()
        if kind == "num":
            return ("num", val)
        if kind == "name":
            if val == "x":
                return ("x",)
            if val in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                kind2, val2, at2 = self.peek()
                if kind2 != "op" or val2 != ")":
                    raise ParseError("unbalanced parenthesis", at2)
                self.next()
                return ("call", val, arg)
            raise ParseError(f"unknown identifier {val!r}", at)
        if kind == "op" and val == "(":
            node = self.expr()
            kind2, val2, at2 = self.peek()
            if kind2 != "op" or val2 != ")":
                raise ParseError("unbalanced parenthesis", at2)
            self.next()
            return node
        raise ParseError(f"unexpected token {val!r}" if val is not None else "unexpected end of input", at)


def expr_to_string(node: Node) -> str:
    """Render an expression tree; parse(expr_to_string(t)) is equivalent to t."""
    op = node[0]
    if op == "num":
        return repr(node[1])
    if op == "x":
        return "x"
    if op == "neg":
        return f"(-{expr_to_string(node[1])})"
    if op == "pow":
        return f"({expr_to_string(node[1])}^{node[2]})"
    if op == "call":
        return f"{node[1]}({expr_to_string(node[2])})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
    return f"({expr_to_string(node[1])}{sym}{expr_to_string(node[2])})"


_BACKENDS = {
    "math": {
        "sech": "(1.0/math.cosh({0}))",
        "tanh": "math.tanh({0})",
        "exp": "math.exp({0})",
        "sin": "math.sin({0})",
        "cos": "math.cos({0})",
        "sqrt": "math.sqrt({0})",
    },
    "cmath": {
        "sech": "(1.0/cmath.cosh({0}))",
        "tanh": "cmath.tanh({0})",
        "exp": "cmath.exp({0})",
        "sin": "cmath.sin({0})",
        "cos": "cmath.cos({0})",
        "sqrt": "cmath.sqrt({0})",
    },
    "numpy": {
        "sech": "(1.0/np.cosh({0}))",
        "tanh": "np.tanh({0})",
        "exp": "np.exp({0})",
        "sin": "np.sin({0})",
        "cos": "np.cos({0})",
        "sqrt": "np.sqrt({0})",
    },
}


def _codegen(node: Node, table: dict[str, str]) -> str:
    op = node[0]
    if op == "num":
        return repr(node[1])
    if op == "x":
        return "x"
    if op == "neg":
        return f"(-{_codegen(node[1], table)})"
    if op == "pow":
        return f"({_codegen(node[1], table)}**{node[2]})"
    if op == "call":
        return table[node[1]].format(_codegen(node[2], table))
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
    return f"({_codegen(node[1], table)}{sym}{_codegen(node[2], table)})"


def _compile(node: Node, backend: str) -> Callable:
    body = _codegen(node, _BACKENDS[backend])
    namespace = {"math": math, "cmath": cmath, "np": np}
    return eval(f"lambda x: {body}", namespace)  # AST is whitelisted, no injection


# ---------------------------------------------------------------------------
# Potential
# ---------------------------------------------------------------------------

@dataclass
class Potential:
    """An analytic potential with parity metadata and a declared strip.

    Treat instances as immutable after construction; evaluation is safe from
    concurrent readers.  The compiled evaluators are cached lazily and are
    rebuilt after unpickling.
    """

    expr: Node
    strip_halfwidth: float = DEFAULT_STRIP
    parity: str = "none"
    builtin: dict | None = None
    v0: float | None = None
    _fns: dict = field(default_factory=dict, repr=False, compare=False)

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_fns"] = {}
        return state

    def _fn(self, backend: str) -> Callable:
        fn = self._fns.get(backend)
        if fn is None:
            fn = self._fns[backend] = _compile(self.expr, backend)
        return fn

    @property
    def f_real(self) -> Callable[[float], float]:
        """Unguarded evaluator for real x (hot path for ODE integration)."""
        return self._fn("math")

    @property
    def f_scalar(self) -> Callable[[complex], complex]:
        """Unguarded evaluator for a single complex x."""
        return self._fn("cmath")

    @property
    def f_array(self) -> Callable[[np.ndarray], np.ndarray]:
        """Unguarded vectorized evaluator for complex ndarrays."""
        return self._fn("numpy")

    def __call__(self, x):
        """Evaluate the analytic continuation of V at x (scalar or ndarray).

        Rejects points outside the declared strip |Im x| < strip_halfwidth.
        """
        if isinstance(x, np.ndarray):
            if np.abs(x.imag).max(initial=0.0) >= self.strip_halfwidth:
                raise StripError(
                    f"evaluation outside strip |Im x| < {self.strip_halfwidth:.6g}"
                )
            return self.f_array(x.astype(complex))
        xc = complex(x)
        if abs(xc.imag) >= self.strip_halfwidth:
            raise StripError(
                f"evaluation at {xc} outside strip |Im x| < {self.strip_halfwidth:.6g}"
            )
        if xc.imag == 0.0:
            return complex(self.f_real(xc.real))
        return complex(self.f_scalar(xc))

    def to_string(self) -> str:
        return expr_to_string(self.expr)

    def derivative(self, x, delta: float = 1e-7):
        """V'(x) by central differences (unguarded: callers may differentiate
        anywhere the analytic continuation makes sense, e.g. while tracking
        turning-point migration beyond the declared strip).

        For real x a complex-step evaluation is used instead, which is exact
        to machine precision for real-analytic V.
        """
        xc = complex(x)
        if xc.imag == 0.0:
            return self.f_scalar(xc.real + 1e-20j).imag / 1e-20
        return (self.f_scalar(xc + delta) - self.f_scalar(xc - delta)) / (2.0 * delta)

    def config(self) -> dict:
        """JSON-compatible description usable in run config files."""
        if self.builtin is not None:
            return {"builtin": dict(self.builtin)}
        return {"expr": self.to_string()}


def parse_potential(text: str, strip_halfwidth: float = DEFAULT_STRIP) -> Potential:
    """Parse an expression with free variable x into a Potential.

    Raises ParseError (with offset) for malformed input, unknown identifiers
    and non-integer exponents.  Parity starts out as "none" until
    detect_parity is run.  The default strip half-width is slightly below
    pi/2, matching the pole structure of sech/tanh-based expressions.
    """
    node = _Parser(text).parse()
    pot = Potential(expr=node, strip_halfwidth=strip_halfwidth)
    _check_real_on_axis(pot)
    return pot


def _check_real_on_axis(V: Potential, n: int = 64, tol: float = 1e-12):
    xs = np.linspace(-10.0, 10.0, n)
    try:
        vals = V.f_array(xs.astype(complex))
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise PotentialError(f"potential not evaluable on the real axis: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise PotentialError("potential not finite on the real axis")
    if np.abs(vals.imag).max() > tol * (1.0 + np.abs(vals.real).max()):
        raise PotentialError("potential is not real-valued on the real axis")


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

def builtin_potential(name: str, **params) -> Potential:
    """Construct a named builtin family member.

    sech-pulse: amplitude/width/center -> amplitude*sech((x-center)/width)
    double-sech: amplitude*(sech(x-separation) + relative_sign*sech(x+separation)),
    the double-lobe example pair (relative_sign +1 is even, -1 odd).
    """
    if name == "sech-pulse":
        amplitude = float(params.pop("amplitude", 1.0))
        center = float(params.pop("center", 0.0))
        width = float(params.pop("width", 1.0))
        if params:
            raise PotentialError(f"unknown sech-pulse parameters {sorted(params)}")
        if width <= 0 or amplitude <= 0:
            raise PotentialError("sech-pulse needs positive amplitude and width")
        arg: Node = ("x",)
        if center != 0.0:
            arg = ("sub", arg, ("num", center))
        if width != 1.0:
            arg = ("div", arg, ("num", width))
        node: Node = ("mul", ("num", amplitude), ("call", "sech", arg))
        parity = "even" if center == 0.0 else "none"
        return Potential(
            expr=node,
            strip_halfwidth=0.45 * math.pi * width,
            parity=parity,
            builtin={"name": name, "amplitude": amplitude, "center": center, "width": width},
        )
    if name == "double-sech":
        amplitude = float(params.pop("amplitude", 0.25))
        separation = float(params.pop("separation", 2.0))
        sign = int(params.pop("relative_sign", 1))
        if params:
            raise PotentialError(f"unknown double-sech parameters {sorted(params)}")
        if sign not in (1, -1):
            raise PotentialError("relative_sign must be +1 or -1")
        if separation <= 0 or amplitude <= 0:
            raise PotentialError("double-sech needs positive amplitude and separation")
        left = ("call", "sech", ("sub", ("x",), ("num", separation)))
        right = ("call", "sech", ("add", ("x",), ("num", separation)))
        combo = ("add", left, right) if sign == 1 else ("sub", left, right)
        node = ("mul", ("num", amplitude), combo)
        return Potential(
            expr=node,
            strip_halfwidth=0.45 * math.pi,
            parity="even" if sign == 1 else "odd",
            builtin={
                "name": name,
                "amplitude": amplitude,
                "separation": separation,
                "relative_sign": sign,
            },
        )
    raise PotentialError(f"unknown builtin potential {name!r}")


def from_config(spec: dict) -> Potential:
    """Build a Potential from a config mapping: {"expr": str} or {"builtin": {...}}."""
    if "expr" in spec:
        pot = parse_potential(spec["expr"], strip_halfwidth=spec.get("strip_halfwidth", DEFAULT_STRIP))
        if "parity" in spec:
            pot.parity = spec["parity"]
        return pot
    if "builtin" in spec:
        params = dict(spec["builtin"])
        name = params.pop("name")
        return builtin_potential(name, **params)
    raise PotentialError("potential config needs an 'expr' or 'builtin' entry")


# ---------------------------------------------------------------------------
# parity and sup norm
# ---------------------------------------------------------------------------

def detect_parity(V: Potential, n_samples: int = 64, tol: float = 1e-10) -> str:
    """Classify V as "even", "odd" or "none" on a quasi-random real grid.

    The residual test is relative, |V(x) -+ V(-x)| <= tol*(1+|V(x)|); a
    potential that fails both residual tests is never misclassified.
    """
    if n_samples < 16:
        raise PotentialError("need at least 16 parity samples")
    j = np.arange(1, n_samples + 1)
    xs = 10.0 * (2.0 * np.mod(j * GOLDEN, 1.0) - 1.0)
    vp = V.f_array(xs.astype(complex)).real
    vm = V.f_array(-xs.astype(complex)).real
    scale = 1.0 + np.abs(vp)
    even_res = np.abs(vp - vm) / scale
    odd_res = np.abs(vp + vm) / scale
    if even_res.max() <= tol:
        return "even"
    if odd_res.max() <= tol:
        return "odd"
    return "none"


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-11) -> tuple[float, float]:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def sup_abs(V: Potential, scan_halfwidth: float = 30.0, n_grid: int = 8192) -> float:
    """The sup over real x of |V(x)|, to relative accuracy ~1e-8.

    Coarse grid scan followed by golden-section refinement of every local
    maximum of |V|.  Requires V to decay at +-infinity; the result is cached
    on V.v0.
    """
    if V.v0 is not None:
        return V.v0
    xs = np.linspace(-scan_halfwidth, scan_halfwidth, n_grid)
    vals = np.abs(V.f_array(xs.astype(complex)).real)
    peak = vals.max()
    if peak <= 0.0:
        V.v0 = 0.0
        return 0.0
    tail = max(
        abs(complex(V.f_real(x)).real)
        for x in (-scan_halfwidth - 10.0, scan_halfwidth + 10.0, -scan_halfwidth, scan_halfwidth)
    )
    if tail > 1e-3 * peak:
        raise DecayError(
            f"potential does not decay: |V| ~ {tail:.3g} at |x| ~ {scan_halfwidth}"
        )
    f = lambda x: abs(V.f_real(x))
    best = peak
    interior = np.flatnonzero(
        (vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]) & (vals[1:-1] > 1e-6 * peak)
    )
    for i in interior + 1:
        _, fx = _golden_max(f, xs[i - 1], xs[i + 1])
        best = max(best, fx)
    V.v0 = best
    return best
