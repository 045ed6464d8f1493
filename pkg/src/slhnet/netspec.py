"""Parser, validator, and canonical printer for network description files.

Document grammar (statements in any order, names declared before use,
``#`` starts a line comment):

    space <name> fock <uint> | space <name> qubit
    system <name> { [S = [[expr,...],...];] [L = [expr,...];] [H = expr;] }
    exosystem <name> { channels = <uint>; amplitudes = [number,...]; }
    exosystem <name> { w = [expr,...]; [D = expr;] }
    compose <name> = <a> boxplus <b>
                   | <a> series <b>          # signal flows b -> a
                   | lft(<a>, <uint>)        # keep the first n1 channels
                   | wedge(<a>, <b> [, K = [expr,...]] [, v = [expr,...]])
    top <name>

Operator expressions:

    expr   := term { ("+"|"-") term }
    term   := factor { "*" factor }
    factor := atom [ "^" uint ]
    atom   := number | ident "@" label | "adj" "(" expr ")" | "(" expr ")"
    number := float [ "i" ] | "(" float ("+"|"-") float "i" ")"
    ident  := "a" | "adag" | "n" | "id" | "sx" | "sy" | "sz" | "sp" | "sm"

There is no unary minus; write ``0 - x`` or a complex literal.  Every
diagnostic carries a 1-based line:column position and a stable error code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import SlhnetError
from .hilbert import FOCK, QUBIT, Factor, HilbertSpace
from .network import (ChannelPartition, DirectCoupling, SLHTriple,
                      concatenate, lft, series, wedge_lft, wedge_series)
from .operators import Operator, fock_ops, qubit_ops
from .dissipation import ExosystemClass

OPERATOR_IDENTS = ("a", "adag", "n", "id", "sx", "sy", "sz", "sp", "sm")
FOCK_IDENTS = ("a", "adag", "n", "id")
QUBIT_IDENTS = ("id", "sx", "sy", "sz", "sp", "sm")


class NetspecError(SlhnetError):
    """Parse or validation failure with position and stable code."""

    def __init__(self, code: str, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: [{code}] {message}")
        self.code = code
        self.reason = message
        self.line = line
        self.col = col


# ----------------------------------------------------------------------
# lexer
# ----------------------------------------------------------------------

_FLOAT = r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?"
# Parenthesized complex literals are whitespace-free, so "(1+2i)" is a
# single number while "(1 + 2i)" is a grouped sum of two scalars (same
# value, different syntax tree).  The real part may carry a sign so that
# programmatically built literals with negative real part stay printable.
_COMPLEX = re.compile(r"\((-?" + _FLOAT + r")([+-])(" + _FLOAT + r")i\)")
_NUMBER = re.compile("(" + _FLOAT + r")(i?)")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_PUNCT = ("{", "}", "[", "]", "(", ")", "=", ",", ";", "@", "^", "*", "+", "-")


@dataclass(frozen=True)
class Token:
    kind: str          # NAME, NUMBER, one of _PUNCT, or EOF
    text: str
    value: complex | None
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        m = _COMPLEX.match(text, i)
        if m:
            re_part = float(m.group(1))
            im_part = float(m.group(3))
            if m.group(2) == "-":
                im_part = -im_part
            tokens.append(Token("NUMBER", m.group(0),
                                complex(re_part, im_part), line, col))
            col += m.end() - i
            i = m.end()
            continue
        m = _NUMBER.match(text, i)
        if m:
            val = float(m.group(1))
            value = complex(0.0, val) if m.group(2) else complex(val, 0.0)
            tokens.append(Token("NUMBER", m.group(0), value, line, col))
            col += m.end() - i
            i = m.end()
            continue
        m = _NAME.match(text, i)
        if m:
            tokens.append(Token("NAME", m.group(0), None, line, col))
            col += m.end() - i
            i = m.end()
            continue
        if ch in _PUNCT:
            tokens.append(Token(ch, ch, None, line, col))
            i += 1
            col += 1
            continue
        raise NetspecError("E_SYNTAX", f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", None, line, max(col, 1)))
    return tokens


# ----------------------------------------------------------------------
# expression AST
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: complex
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Sym:
    name: str
    label: str
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Adj:
    arg: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Add:
    left: object
    right: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Sub:
    left: object
    right: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Mul:
    left: object
    right: object
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int
    pos: tuple = field(default=(0, 0), compare=False)


def _fmt_float(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_number(z: complex) -> str:
    re_part, im_part = z.real, z.imag
    if im_part == 0 and re_part >= 0:
        return _fmt_float(re_part)
    if re_part == 0 and im_part > 0:
        return _fmt_float(im_part) + "i"
    sign = "+" if im_part >= 0 else "-"
    return f"({_fmt_float(re_part)}{sign}{_fmt_float(abs(im_part))}i)"


def format_amplitude(z: complex) -> str:
    """Amplitude-list literal, allowing the sign prefix of that context."""
    z = complex(z)
    if z.real < 0 or (z.real == 0 and z.imag < 0):
        return "-" + format_number(-z)
    return format_number(z)


def print_expr(node, parent_level: int = 0, right_side: bool = False) -> str:
    """Canonical minimal-parenthesis rendering; reparses to the same AST."""
    if isinstance(node, Lit):
        return format_number(node.value)
    if isinstance(node, Sym):
        return f"{node.name}@{node.label}"
    if isinstance(node, Adj):
        return f"adj({print_expr(node.arg)})"
    if isinstance(node, (Add, Sub)):
        level = 1
        op = "+" if isinstance(node, Add) else "-"
        text = (print_expr(node.left, level, False) + f" {op} "
                + print_expr(node.right, level, True))
    elif isinstance(node, Mul):
        level = 2
        text = (print_expr(node.left, level, False) + "*"
                + print_expr(node.right, level, True))
    elif isinstance(node, Pow):
        level = 3
        text = print_expr(node.base, level, True) + f"^{node.exponent}"
    else:
        raise TypeError(f"not an expression node: {node!r}")
    if level < parent_level or (level == parent_level and right_side):
        return "(" + text + ")"
    return text


class _ExprParser:
    """Recursive descent with single-token lookahead."""

    def __init__(self, tokens: list[Token], start: int = 0):
        self.tokens = tokens
        self.i = start

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def error(self, code: str, message: str, tok: Token | None = None):
        tok = tok or self.cur
        raise NetspecError(code, message, tok.line, tok.col)

    def eat(self, kind: str) -> Token:
        tok = self.cur
        if tok.kind != kind:
            self.error("E_SYNTAX", f"expected {kind!r}, found {tok.text!r}")
        self.i += 1
        return tok

    def parse_expr(self):
        node = self.parse_term()
        while self.cur.kind in ("+", "-"):
            op = self.eat(self.cur.kind)
            rhs = self.parse_term()
            cls = Add if op.kind == "+" else Sub
            node = cls(node, rhs, pos=(op.line, op.col))
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.cur.kind == "*":
            op = self.eat("*")
            rhs = self.parse_factor()
            node = Mul(node, rhs, pos=(op.line, op.col))
        return node

    def parse_factor(self):
        node = self.parse_atom()
        if self.cur.kind == "^":
            op = self.eat("^")
            num = self.eat("NUMBER")
            if num.value.imag or num.value.real != int(num.value.real) \
                    or num.value.real < 0:
                self.error("E_NUMBER", "exponent must be a non-negative integer",
                           num)
            node = Pow(node, int(num.value.real), pos=(op.line, op.col))
        return node

    def parse_atom(self):
        tok = self.cur
        if tok.kind == "NUMBER":
            self.eat("NUMBER")
            return Lit(tok.value, pos=(tok.line, tok.col))
        if tok.kind == "NAME" and tok.text == "adj":
            self.eat("NAME")
            self.eat("(")
            inner = self.parse_expr()
            self.eat(")")
            return Adj(inner, pos=(tok.line, tok.col))
        if tok.kind == "NAME":
            if tok.text not in OPERATOR_IDENTS:
                self.error("E_SYMBOL",
                           f"unknown operator symbol {tok.text!r}", tok)
            self.eat("NAME")
            self.eat("@")
            label = self.eat("NAME")
            return Sym(tok.text, label.text, pos=(tok.line, tok.col))
        if tok.kind == "(":
            self.eat("(")
            inner = self.parse_expr()
            self.eat(")")
            return inner
        self.error("E_SYNTAX", f"expected an operand, found {tok.text!r}")


def parse_expr_text(text: str):
    parser = _ExprParser(tokenize(text))
    node = parser.parse_expr()
    if parser.cur.kind != "EOF":
        parser.error("E_SYNTAX",
                     f"unexpected trailing input {parser.cur.text!r}")
    return node


def eval_expr(node, spaces: dict[str, Factor]) -> Operator:
    """Evaluate an expression AST against declared single-factor spaces."""
    if isinstance(node, Lit):
        return Operator.scalar(node.value)
    if isinstance(node, Sym):
        factor = spaces.get(node.label)
        if factor is None:
            raise NetspecError("E_SPACE", f"unknown space {node.label!r}",
                               *node.pos)
        if factor.kind == FOCK:
            family, allowed = fock_ops(factor.dim, factor.label), FOCK_IDENTS
        else:
            family, allowed = qubit_ops(factor.label), QUBIT_IDENTS
        if node.name not in allowed:
            raise NetspecError(
                "E_SYMBOL",
                f"symbol {node.name!r} is not defined on a {factor.kind} factor",
                *node.pos)
        return family[node.name]
    if isinstance(node, Adj):
        return eval_expr(node.arg, spaces).adjoint()
    if isinstance(node, Add):
        return eval_expr(node.left, spaces) + eval_expr(node.right, spaces)
    if isinstance(node, Sub):
        return eval_expr(node.left, spaces) - eval_expr(node.right, spaces)
    if isinstance(node, Mul):
        return eval_expr(node.left, spaces) * eval_expr(node.right, spaces)
    if isinstance(node, Pow):
        return eval_expr(node.base, spaces) ** node.exponent
    raise TypeError(f"not an expression node: {node!r}")


def parse_operator_expr(text: str, spaces: dict[str, Factor]) -> Operator:
    """Parse and evaluate a standalone operator expression."""
    return eval_expr(parse_expr_text(text), spaces)


# ----------------------------------------------------------------------
# document model
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceDecl:
    name: str
    kind: str
    dim: int
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class SystemDecl:
    name: str
    s_rows: tuple | None
    l_entries: tuple | None
    h_expr: object | None
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ExoDecl:
    name: str
    channels: int
    amplitudes: tuple | None
    w_entries: tuple | None
    d_expr: object | None
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ComposeDecl:
    name: str
    op: str                    # boxplus | series | lft | wedge
    args: tuple
    partition: int | None = None
    k_entries: tuple | None = None
    v_entries: tuple | None = None
    pos: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class TopDecl:
    name: str
    pos: tuple = field(default=(0, 0), compare=False)


class NetworkDoc:
    """Validated document: declarations plus the systems they evaluate to."""

    def __init__(self, statements):
        self.statements = tuple(statements)
        self.spaces: dict[str, Factor] = {}
        self.systems: dict[str, SLHTriple] = {}
        self.exosystems: dict[str, ExosystemClass] = {}
        self.top: str | None = None
        self._validate_and_build()

    # -- construction --------------------------------------------------

    def _validate_and_build(self):
        names: dict[str, tuple] = {}
        top_seen = None
        for st in self.statements:
            if isinstance(st, (SpaceDecl, SystemDecl, ExoDecl, ComposeDecl)):
                if st.name in names:
                    raise NetspecError("E_DUPLICATE",
                                       f"name {st.name!r} already declared",
                                       *st.pos)
                names[st.name] = st.pos
            if isinstance(st, SpaceDecl):
                self._add_space(st)
            elif isinstance(st, SystemDecl):
                self.systems[st.name] = self._build_system(st)
            elif isinstance(st, ExoDecl):
                self.exosystems[st.name] = self._build_exosystem(st)
            elif isinstance(st, ComposeDecl):
                self.systems[st.name] = self._build_compose(st)
            elif isinstance(st, TopDecl):
                if top_seen is not None:
                    raise NetspecError("E_TOP", "more than one top declaration",
                                       *st.pos)
                if st.name not in self.systems:
                    raise NetspecError("E_UNDECLARED",
                                       f"top system {st.name!r} not declared",
                                       *st.pos)
                top_seen = st.name
        if top_seen is None:
            raise NetspecError("E_TOP", "document declares no top system", 1, 1)
        self.top = top_seen

    def _add_space(self, st: SpaceDecl):
        if st.kind == FOCK and st.dim < 2:
            raise NetspecError("E_DIM",
                               f"fock space needs dim >= 2, got {st.dim}",
                               *st.pos)
        self.spaces[st.name] = Factor(st.name, st.dim, st.kind)

    def _eval(self, expr):
        return eval_expr(expr, self.spaces)

    def _build_system(self, st: SystemDecl) -> SLHTriple:
        s_rows = st.s_rows
        l_entries = st.l_entries
        if s_rows is not None:
            n = len(s_rows)
            for row in s_rows:
                if len(row) != n:
                    raise NetspecError(
                        "E_ARITY",
                        f"scattering matrix must be square, row has {len(row)} "
                        f"of {n} entries", *st.pos)
            if l_entries is not None and len(l_entries) != n:
                raise NetspecError(
                    "E_ARITY",
                    f"L has {len(l_entries)} entries but S is {n}x{n}", *st.pos)
        s_val = None if s_rows is None else \
            [[self._eval(e) for e in row] for row in s_rows]
        l_val = None if l_entries is None else \
            [self._eval(e) for e in l_entries]
        h_val = self._eval(st.h_expr) if st.h_expr is not None else 0
        try:
            return SLHTriple(s_val, l_val, h_val)
        except SlhnetError as exc:
            code = "E_UNITARY" if "unitary" in str(exc) else "E_HERMITIAN" \
                if "Hermitian" in str(exc) else "E_ARITY"
            raise NetspecError(code, str(exc), *st.pos) from exc

    def _build_exosystem(self, st: ExoDecl) -> ExosystemClass:
        if st.amplitudes is not None:
            return ExosystemClass.scalar_grid(channels=st.channels,
                                              amplitudes=list(st.amplitudes))
        w_ops = [self._eval(e) for e in (st.w_entries or ())]
        d_val = self._eval(st.d_expr) if st.d_expr is not None else 0
        try:
            triple = SLHTriple(None, w_ops, d_val)
        except SlhnetError as exc:
            raise NetspecError("E_HERMITIAN", str(exc), *st.pos) from exc
        return ExosystemClass.from_triples([triple], channels=len(w_ops),
                                           labels=[st.name])

    def _system_ref(self, name: str, pos) -> SLHTriple:
        if name not in self.systems:
            raise NetspecError("E_UNDECLARED",
                               f"system {name!r} not declared", *pos)
        return self.systems[name]

    def _build_compose(self, st: ComposeDecl) -> SLHTriple:
        try:
            if st.op == "boxplus":
                a = self._system_ref(st.args[0], st.pos)
                b = self._system_ref(st.args[1], st.pos)
                return concatenate(a, b)
            if st.op == "series":
                a = self._system_ref(st.args[0], st.pos)
                b = self._system_ref(st.args[1], st.pos)
                if a.n != b.n:
                    raise NetspecError(
                        "E_CHANNELS",
                        f"series operands have {a.n} and {b.n} channels",
                        *st.pos)
                return series(a, b)
            if st.op == "lft":
                a = self._system_ref(st.args[0], st.pos)
                n1 = st.partition
                if not 0 <= n1 <= a.n:
                    raise NetspecError(
                        "E_PARTITION",
                        f"kept block {n1} out of range for {a.n} channels",
                        *st.pos)
                return lft(a, ChannelPartition(n1, a.n - n1))
            if st.op == "wedge":
                a = self._system_ref(st.args[0], st.pos)
                b = self._system_ref(st.args[1], st.pos)
                coupling = None
                if st.k_entries or st.v_entries:
                    k_ops = [self._eval(e) for e in (st.k_entries or ())]
                    v_ops = [self._eval(e) for e in (st.v_entries or ())]
                    try:
                        coupling = DirectCoupling(tuple(k_ops), tuple(v_ops))
                    except SlhnetError as exc:
                        raise NetspecError("E_COUPLING", str(exc),
                                           *st.pos) from exc
                if a.n == b.n == 2:
                    return wedge_lft(a, b, coupling)
                if a.n != b.n:
                    raise NetspecError(
                        "E_CHANNELS",
                        f"wedge operands have {a.n} and {b.n} channels",
                        *st.pos)
                return wedge_series(a, b, coupling)
            raise NetspecError("E_SYNTAX", f"unknown composition {st.op!r}",
                               *st.pos)
        except NetspecError:
            raise
        except SlhnetError as exc:
            code = "E_LOOP" if "singular" in str(exc) else "E_CHANNELS"
            raise NetspecError(code, str(exc), *st.pos) from exc

    # -- access ----------------------------------------------------------

    def top_system(self) -> SLHTriple:
        if self.top is None:
            raise NetspecError("E_TOP", "document declares no top system", 1, 1)
        return self.systems[self.top]

    def hilbert_space(self) -> HilbertSpace:
        return self.top_system().space

    # -- canonical printing ----------------------------------------------

    def canonical(self) -> str:
        return print_doc(self)


# ----------------------------------------------------------------------
# document parser
# ----------------------------------------------------------------------

class _DocParser(_ExprParser):
    def parse_doc(self) -> list:
        statements = []
        while self.cur.kind != "EOF":
            tok = self.cur
            if tok.kind != "NAME":
                self.error("E_SYNTAX", f"expected a statement, found {tok.text!r}")
            if tok.text == "space":
                statements.append(self.parse_space())
            elif tok.text == "system":
                statements.append(self.parse_system())
            elif tok.text == "exosystem":
                statements.append(self.parse_exosystem())
            elif tok.text == "compose":
                statements.append(self.parse_compose())
            elif tok.text == "top":
                self.eat("NAME")
                name = self.eat("NAME")
                statements.append(TopDecl(name.text, pos=(tok.line, tok.col)))
            else:
                self.error("E_SYNTAX", f"unknown statement {tok.text!r}")
        return statements

    def parse_space(self):
        kw = self.eat("NAME")
        name = self.eat("NAME")
        kind = self.eat("NAME")
        if kind.text == "qubit":
            return SpaceDecl(name.text, QUBIT, 2, pos=(kw.line, kw.col))
        if kind.text == "fock":
            num = self.eat("NUMBER")
            if num.value.imag or num.value.real != int(num.value.real):
                self.error("E_NUMBER", "fock dimension must be an integer", num)
            return SpaceDecl(name.text, FOCK, int(num.value.real),
                             pos=(kw.line, kw.col))
        self.error("E_SYNTAX",
                   f"expected 'fock' or 'qubit', found {kind.text!r}", kind)

    def parse_vector(self):
        self.eat("[")
        entries = []
        if self.cur.kind != "]":
            entries.append(self.parse_expr())
            while self.cur.kind == ",":
                self.eat(",")
                entries.append(self.parse_expr())
        self.eat("]")
        return tuple(entries)

    def parse_matrix(self):
        self.eat("[")
        rows = [self.parse_vector()]
        while self.cur.kind == ",":
            self.eat(",")
            rows.append(self.parse_vector())
        self.eat("]")
        return tuple(rows)

    def parse_system(self):
        kw = self.eat("NAME")
        name = self.eat("NAME")
        self.eat("{")
        s_rows = l_entries = h_expr = None
        while self.cur.kind != "}":
            fld = self.eat("NAME")
            self.eat("=")
            if fld.text == "S":
                s_rows = self.parse_matrix()
            elif fld.text == "L":
                l_entries = self.parse_vector()
            elif fld.text == "H":
                h_expr = self.parse_expr()
            else:
                self.error("E_SYNTAX",
                           f"unknown system field {fld.text!r}", fld)
            self.eat(";")
        self.eat("}")
        return SystemDecl(name.text, s_rows, l_entries, h_expr,
                          pos=(kw.line, kw.col))

    def parse_exosystem(self):
        kw = self.eat("NAME")
        name = self.eat("NAME")
        self.eat("{")
        channels = 1
        amplitudes = w_entries = d_expr = None
        while self.cur.kind != "}":
            fld = self.eat("NAME")
            self.eat("=")
            if fld.text == "channels":
                num = self.eat("NUMBER")
                if num.value.imag or num.value.real != int(num.value.real) \
                        or num.value.real < 1:
                    self.error("E_NUMBER",
                               "channel count must be a positive integer", num)
                channels = int(num.value.real)
            elif fld.text == "amplitudes":
                self.eat("[")
                vals = []
                if self.cur.kind != "]":
                    vals.append(self.parse_signed_number())
                    while self.cur.kind == ",":
                        self.eat(",")
                        vals.append(self.parse_signed_number())
                self.eat("]")
                amplitudes = tuple(vals)
            elif fld.text == "w":
                w_entries = self.parse_vector()
            elif fld.text == "D":
                d_expr = self.parse_expr()
            else:
                self.error("E_SYNTAX",
                           f"unknown exosystem field {fld.text!r}", fld)
            self.eat(";")
        self.eat("}")
        if amplitudes is None and w_entries is None:
            self.error("E_SYNTAX",
                       "exosystem needs either amplitudes or w entries", kw)
        return ExoDecl(name.text, channels, amplitudes, w_entries, d_expr,
                       pos=(kw.line, kw.col))

    def parse_signed_number(self) -> complex:
        # amplitude lists allow a sign prefix; operator expressions do not
        sign = 1.0
        if self.cur.kind == "-":
            self.eat("-")
            sign = -1.0
        return sign * self.eat("NUMBER").value

    def parse_compose(self):
        kw = self.eat("NAME")
        name = self.eat("NAME")
        self.eat("=")
        head = self.eat("NAME")
        if head.text == "lft":
            self.eat("(")
            inner = self.eat("NAME")
            self.eat(",")
            num = self.eat("NUMBER")
            if num.value.imag or num.value.real != int(num.value.real) \
                    or num.value.real < 0:
                self.error("E_NUMBER",
                           "kept channel count must be a non-negative integer",
                           num)
            self.eat(")")
            return ComposeDecl(name.text, "lft", (inner.text,),
                               partition=int(num.value.real),
                               pos=(kw.line, kw.col))
        if head.text == "wedge":
            self.eat("(")
            first = self.eat("NAME")
            self.eat(",")
            second = self.eat("NAME")
            k_entries = v_entries = None
            while self.cur.kind == ",":
                self.eat(",")
                which = self.eat("NAME")
                self.eat("=")
                if which.text == "K":
                    k_entries = self.parse_vector()
                elif which.text == "v":
                    v_entries = self.parse_vector()
                else:
                    self.error("E_SYNTAX",
                               f"unknown wedge argument {which.text!r}", which)
            self.eat(")")
            return ComposeDecl(name.text, "wedge", (first.text, second.text),
                               k_entries=k_entries, v_entries=v_entries,
                               pos=(kw.line, kw.col))
        op = self.eat("NAME")
        if op.text not in ("boxplus", "series"):
            self.error("E_SYNTAX",
                       f"expected 'boxplus' or 'series', found {op.text!r}", op)
        second = self.eat("NAME")
        return ComposeDecl(name.text, op.text, (head.text, second.text),
                           pos=(kw.line, kw.col))


def parse_netspec(text: str) -> NetworkDoc:
    """Parse and validate a document; every error carries line:col."""
    parser = _DocParser(tokenize(text))
    return NetworkDoc(parser.parse_doc())


# ----------------------------------------------------------------------
# canonical printer
# ----------------------------------------------------------------------

def _print_vector(entries) -> str:
    return "[" + ", ".join(print_expr(e) for e in entries) + "]"


def _print_matrix(rows) -> str:
    return "[" + ", ".join(_print_vector(r) for r in rows) + "]"


def print_doc(doc: NetworkDoc) -> str:
    lines = []
    for st in doc.statements:
        if isinstance(st, SpaceDecl):
            if st.kind == QUBIT:
                lines.append(f"space {st.name} qubit")
            else:
                lines.append(f"space {st.name} fock {st.dim}")
        elif isinstance(st, SystemDecl):
            fields = []
            if st.s_rows is not None:
                fields.append("S = " + _print_matrix(st.s_rows) + ";")
            if st.l_entries is not None:
                fields.append("L = " + _print_vector(st.l_entries) + ";")
            if st.h_expr is not None:
                fields.append("H = " + print_expr(st.h_expr) + ";")
            lines.append(f"system {st.name} {{ " + " ".join(fields) + " }")
        elif isinstance(st, ExoDecl):
            fields = [f"channels = {st.channels};"]
            if st.amplitudes is not None:
                fields.append("amplitudes = ["
                              + ", ".join(format_amplitude(z)
                                          for z in st.amplitudes) + "];")
            if st.w_entries is not None:
                fields.append("w = " + _print_vector(st.w_entries) + ";")
            if st.d_expr is not None:
                fields.append("D = " + print_expr(st.d_expr) + ";")
            lines.append(f"exosystem {st.name} {{ " + " ".join(fields) + " }")
        elif isinstance(st, ComposeDecl):
            if st.op == "lft":
                rhs = f"lft({st.args[0]}, {st.partition})"
            elif st.op == "wedge":
                rhs = f"wedge({st.args[0]}, {st.args[1]}"
                if st.k_entries is not None:
                    rhs += ", K = " + _print_vector(st.k_entries)
                if st.v_entries is not None:
                    rhs += ", v = " + _print_vector(st.v_entries)
                rhs += ")"
            else:
                rhs = f"{st.args[0]} {st.op} {st.args[1]}"
            lines.append(f"compose {st.name} = {rhs}")
        elif isinstance(st, TopDecl):
            lines.append(f"top {st.name}")
    return "\n".join(lines) + "\n"
