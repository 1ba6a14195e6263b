"""First-order language of set theory.

Surface grammar (loosest binding first)::

    formula  := ("exists" | "forall") VAR "." formula | impl
    impl     := disj ["->" impl]
    disj     := conj {"|" conj}
    conj     := unary {"&" unary}
    unary    := "!" unary | "(" formula ")" | VAR ("in" | "=") VAR | quantified
"""

from __future__ import annotations

import hashlib
import itertools
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence, Union

from .hf import HFSet, Universe

__all__ = [
    "And",
    "CatalogEntry",
    "Eq",
    "Exists",
    "FOStructure",
    "Forall",
    "FormulaError",
    "FormulaSyntaxError",
    "Implies",
    "Mem",
    "Not",
    "Or",
    "alpha_equivalent",
    "catalog_manifest",
    "decode",
    "formula_catalog",
    "free_vars",
    "godel_number",
    "numeral_formula",
    "parse",
    "render",
    "satisfies",
]


class FormulaError(ValueError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Mem:
    left: str
    right: str


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = Union[Mem, Eq, Not, And, Or, Implies, Exists, Forall]
_BINARY = (And, Or, Implies)
_QUANT = (Exists, Forall)
_ATOMS = (Mem, Eq)


def free_vars(f: Formula) -> tuple[str, ...]:
    """Free variables in order of first occurrence (left to right)."""
    out: list[str] = []

    def walk(g: Formula, bound: frozenset[str]) -> None:
        if isinstance(g, _ATOMS):
            for v in (g.left, g.right):
                if v not in bound and v not in out:
                    out.append(v)
        elif isinstance(g, Not):
            walk(g.body, bound)
        elif isinstance(g, _BINARY):
            walk(g.left, bound)
            walk(g.right, bound)
        else:
            walk(g.body, bound | {g.var})

    walk(f, frozenset())
    return tuple(out)


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(->)|([!&|().=])|([A-Za-z_][A-Za-z0-9_]*))")
_KEYWORDS = {"exists", "forall", "in"}


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[start]!r}", start)
        tok = m.group(1) or m.group(2) or m.group(3)
        tokens.append((tok, m.start(m.lastindex)))
        pos = m.end()
    tokens.append(("", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def pos(self) -> int:
        return self.tokens[self.i][1]

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if expected is not None and tok != expected:
            shown = repr(tok) if tok else "end of input"
            raise FormulaSyntaxError(f"expected {expected!r}, found {shown}", self.pos())
        self.i += 1
        return tok

    def var(self) -> str:
        tok = self.peek()
        if not tok or not (tok[0].isalpha() or tok[0] == "_") or tok in _KEYWORDS:
            shown = repr(tok) if tok else "end of input"
            raise FormulaSyntaxError(f"expected a variable, found {shown}", self.pos())
        return self.take()

    def formula(self) -> Formula:
        if self.peek() in ("exists", "forall"):
            return self.quantified()
        return self.impl()

    def quantified(self) -> Formula:
        kind = self.take()
        v = self.var()
        self.take(".")
        body = self.formula()
        return Exists(v, body) if kind == "exists" else Forall(v, body)

    def impl(self) -> Formula:
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.impl())
        return left

    def disj(self) -> Formula:
        out = self.conj()
        while self.peek() == "|":
            self.take()
            out = Or(out, self.conj())
        return out

    def conj(self) -> Formula:
        out = self.unary()
        while self.peek() == "&":
            self.take()
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "(":
            self.take()
            inner = self.formula()
            self.take(")")
            return inner
        if tok in ("exists", "forall"):
            return self.quantified()
        left = self.var()
        op = self.peek()
        if op == "in":
            self.take()
            return Mem(left, self.var())
        if op == "=":
            self.take()
            return Eq(left, self.var())
        shown = repr(op) if op else "end of input"
        raise FormulaSyntaxError(f"expected 'in' or '=', found {shown}", self.pos())


def parse(text: str) -> Formula:
    p = _Parser(text)
    out = p.formula()
    if p.peek() != "":
        raise FormulaSyntaxError(f"unexpected {p.peek()!r}", p.pos())
    return out


def render(f: Formula) -> str:
    """Text that parses back to an equal AST."""
    if isinstance(f, Mem):
        return f"{f.left} in {f.right}"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Not):
        return "!" + _operand(f.body)
    if isinstance(f, _QUANT):
        kw = "exists" if isinstance(f, Exists) else "forall"
        return f"{kw} {f.var} . {render(f.body)}"
    sym = {And: "&", Or: "|", Implies: "->"}[type(f)]
    return f"{_operand(f.left)} {sym} {_operand(f.right)}"


def _operand(f: Formula) -> str:
    if isinstance(f, (_ATOMS, Not)):
        return render(f)
    return f"({render(f)})"


# -- Goedel numbering ----------------------------------------------------------

_OP_NOT, _OP_AND, _OP_OR, _OP_IMP, _OP_EX, _OP_ALL, _OP_IN, _OP_EQ = range(1, 9)
_T_BOUND, _T_FREE = 9, 10
_OPS = {Not: _OP_NOT, And: _OP_AND, Or: _OP_OR, Implies: _OP_IMP, Exists: _OP_EX, Forall: _OP_ALL, Mem: _OP_IN, Eq: _OP_EQ}


def _serialize(f: Formula) -> bytes:
    """Prefix notation over a fixed byte alphabet, variables as de Bruijn
    indices (bound) or positions in the free-variable list (free)."""
    free = free_vars(f)
    out = bytearray()

    def term(v: str, scope: tuple[str, ...]) -> None:
        if v in scope:
            out.extend((_T_BOUND, scope[::-1].index(v)))
        else:
            out.extend((_T_FREE, free.index(v)))

    def walk(g: Formula, scope: tuple[str, ...]) -> None:
        out.append(_OPS[type(g)])
        if isinstance(g, _ATOMS):
            term(g.left, scope)
            term(g.right, scope)
        elif isinstance(g, Not):
            walk(g.body, scope)
        elif isinstance(g, _BINARY):
            walk(g.left, scope)
            walk(g.right, scope)
        else:
            walk(g.body, scope + (g.var,))

    walk(f, ())
    if max(len(free), 1) > 255 or any(b > 255 for b in out):
        raise FormulaError("formula too large to number")
    return bytes(out)


def godel_number(f: Formula) -> int:
    return int.from_bytes(_serialize(f), "big")


def decode(n: int) -> Formula:
    """Inverse of :func:`godel_number`, up to variable names.

    Free variables come back as ``a1, a2, ...`` and bound ones as ``v1, v2, ...``
    by nesting depth.
    """
    if n <= 0:
        raise FormulaError(f"{n} is not a formula code")
    data = n.to_bytes((n.bit_length() + 7) // 8, "big")
    pos = 0

    def byte() -> int:
        nonlocal pos
        if pos >= len(data):
            raise FormulaError(f"{n} is not a formula code (truncated)")
        b = data[pos]
        pos += 1
        return b

    def term(scope: list[str]) -> str:
        kind, idx = byte(), byte()
        if kind == _T_BOUND:
            if idx >= len(scope):
                raise FormulaError(f"{n} is not a formula code (dangling bound index)")
            return scope[len(scope) - 1 - idx]
        if kind == _T_FREE:
            return f"a{idx + 1}"
        raise FormulaError(f"{n} is not a formula code (bad term tag {kind})")

    def walk(scope: list[str]) -> Formula:
        op = byte()
        if op in (_OP_IN, _OP_EQ):
            left = term(scope)
            right = term(scope)
            return Mem(left, right) if op == _OP_IN else Eq(left, right)
        if op == _OP_NOT:
            return Not(walk(scope))
        if op in (_OP_AND, _OP_OR, _OP_IMP):
            a = walk(scope)
            b = walk(scope)
            return {_OP_AND: And, _OP_OR: Or, _OP_IMP: Implies}[op](a, b)
        if op in (_OP_EX, _OP_ALL):
            v = f"v{len(scope) + 1}"
            body = walk(scope + [v])
            return Exists(v, body) if op == _OP_EX else Forall(v, body)
        raise FormulaError(f"{n} is not a formula code (bad opcode {op})")

    out = walk([])
    if pos != len(data):
        raise FormulaError(f"{n} is not a formula code (trailing bytes)")
    free = free_vars(out)
    if tuple(sorted(free, key=lambda v: int(v[1:]))) != free or free != tuple(f"a{i + 1}" for i in range(len(free))):
        raise FormulaError(f"{n} is not a formula code (free variables out of order)")
    return out


def alpha_equivalent(f: Formula, g: Formula) -> bool:
    """Equal up to renaming bound variables and consistently renaming the
    free-variable list (position by position)."""
    return _serialize(f) == _serialize(g)


# -- satisfaction -------------------------------------------------------------


@dataclass(frozen=True)
class FOStructure:
    """A finite domain with one binary relation (membership unless given)."""

    domain: tuple[Hashable, ...]
    relation: frozenset[tuple[Hashable, Hashable]]

    @classmethod
    def from_universe(cls, u: Universe) -> "FOStructure":
        return cls.membership(u.elements)

    @classmethod
    def membership(cls, elements: Iterable[HFSet]) -> "FOStructure":
        dom = tuple(elements)
        rel = frozenset((x, y) for y in dom for x in y.children if x in set(dom))
        return cls(dom, rel)

    def __post_init__(self) -> None:
        dom = set(self.domain)
        for a, b in self.relation:
            if a not in dom or b not in dom:
                raise FormulaError("relation must lie inside the domain")


def satisfies(s: FOStructure, f: Formula, assignment: Mapping[str, Any]) -> bool:
    """Tarskian satisfaction with quantifiers ranging over ``s.domain``."""
    missing = [v for v in free_vars(f) if v not in assignment]
    if missing:
        raise FormulaError(f"assignment does not cover free variables {missing}")
    return _Evaluator(s).eval(f, assignment)


class _Evaluator:
    """Memoised on (subformula, values of its free variables)."""

    def __init__(self, s: FOStructure):
        self.s = s
        self.memo: dict[tuple[int, tuple], bool] = {}
        self.free: dict[int, tuple[str, ...]] = {}
        self.keep: list[Formula] = []

    def _free(self, f: Formula) -> tuple[str, ...]:
        k = id(f)
        if k not in self.free:
            self.free[k] = free_vars(f)
            self.keep.append(f)
        return self.free[k]

    def eval(self, f: Formula, env: Mapping[str, Any]) -> bool:
        fv = self._free(f)
        key = (id(f), tuple(env[v] for v in fv))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if isinstance(f, Mem):
            out = (env[f.left], env[f.right]) in self.s.relation
        elif isinstance(f, Eq):
            out = env[f.left] == env[f.right]
        elif isinstance(f, Not):
            out = not self.eval(f.body, env)
        elif isinstance(f, And):
            out = self.eval(f.left, env) and self.eval(f.right, env)
        elif isinstance(f, Or):
            out = self.eval(f.left, env) or self.eval(f.right, env)
        elif isinstance(f, Implies):
            out = (not self.eval(f.left, env)) or self.eval(f.right, env)
        else:
            results = (self.eval(f.body, {**env, f.var: d}) for d in self.s.domain)
            out = any(results) if isinstance(f, Exists) else all(results)
        self.memo[key] = out
        return out

    def holds(self, f: Formula, args: Sequence[Any]) -> bool:
        fv = free_vars(f)
        return self.eval(f, dict(zip(fv, args)))


def evaluator(s: FOStructure) -> Callable[[Formula, Sequence[Any]], bool]:
    """A reusable ``(formula, args) -> bool`` sharing one memo table."""
    return _Evaluator(s).holds


# -- catalog ------------------------------------------------------------------

NUMERAL_BOUND = 8


def numeral_formula(m: int, var: str = "x") -> Formula:
    """One free variable, true exactly of the von Neumann ordinal ``m`` in any
    transitive structure containing it."""
    if m < 0 or m > NUMERAL_BOUND:
        raise FormulaError(f"numeral {m} outside 0..{NUMERAL_BOUND}")
    if m == 0:
        return Forall("y", Not(Mem("y", var)))
    z = f"z{m}"
    prev = numeral_formula(m - 1, z)
    # x = z U {z}
    succ = And(
        Mem(z, var),
        And(
            Forall("y", Implies(Mem("y", z), Mem("y", var))),
            Forall("y", Implies(Mem("y", var), Or(Mem("y", z), Eq("y", z)))),
        ),
    )
    return Exists(z, And(prev, succ))


STRUCTURAL = (
    ("empty", "forall y . !(y in x)"),
    ("transitive", "forall y . forall z . ((y in x & z in y) -> z in x)"),
    ("member", "x in y"),
    ("equal", "x = y"),
    ("subset", "forall z . (z in x -> z in y)"),
    ("successor", "x in y & (forall z . (z in x -> z in y)) & (forall z . (z in y -> (z in x | z = x)))"),
)


@dataclass(frozen=True)
class CatalogEntry:
    index: int
    name: str
    formula: Formula
    godel: int = field(init=False)
    arity: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "godel", godel_number(self.formula))
        object.__setattr__(self, "arity", len(free_vars(self.formula)))

    @property
    def text(self) -> str:
        return render(self.formula)


def formula_catalog(
    u: Universe | None,
    max_arity: int,
    extra: Sequence[Formula] = (),
    numerals: int | None = None,
    structural: bool = True,
) -> list[CatalogEntry]:
    """Deterministic finite stand-in for the set of all formulas.

    Numerals first (``0 .. numerals-1``, by default up to the universe level),
    then the structural formulas, then ``extra``.  Formulas of arity above
    ``max_arity`` and alpha-duplicates are left out.
    """
    if max_arity < 1:
        raise FormulaError("max_arity must be at least 1")
    if numerals is None:
        numerals = max(u.level if u is not None else 0, max_arity, 1)
    candidates: list[tuple[str, Formula]] = [(f"numeral{m}", numeral_formula(m)) for m in range(numerals)]
    if structural:
        candidates += [(name, parse(text)) for name, text in STRUCTURAL]
    candidates += [(f"extra{i}", f) for i, f in enumerate(extra)]
    out: list[CatalogEntry] = []
    seen: set[int] = set()
    for name, f in candidates:
        arity = len(free_vars(f))
        if arity == 0 or arity > max_arity:
            continue
        g = godel_number(f)
        if g in seen:
            continue
        seen.add(g)
        out.append(CatalogEntry(len(out), name, f))
    return out


def catalog_manifest(catalog: Sequence[CatalogEntry]) -> list[dict[str, Any]]:
    return [{"index": e.index, "name": e.name, "godel": str(e.godel), "arity": e.arity, "text": e.text} for e in catalog]


def catalog_hash(catalog: Sequence[CatalogEntry]) -> str:
    h = hashlib.sha256()
    for e in catalog:
        h.update(f"{e.index}\t{e.godel}\t{e.text}\n".encode())
    return h.hexdigest()


def satisfying_tuples(s: FOStructure, entry: CatalogEntry) -> list[tuple[Any, ...]]:
    holds = evaluator(s)
    return [args for args in itertools.product(s.domain, repeat=entry.arity) if holds(entry.formula, args)]
