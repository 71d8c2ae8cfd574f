"""Recursive-descent parser and printer for the constraint language.

Grammar (ASCII operators; the listed Unicode synonyms are accepted on input
and never printed):

    start   := [ "forall_ball" "(" NUMBER ")" ":" ] formula
    formula := iff
    iff     := imp ("<->" imp)*
    imp     := or ("->" imp)?
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "!" unary | "(" formula ")" | atom
    atom    := term cmp term | IDENT
    cmp     := "<=" | "<" | ">=" | ">" | "==" | "!="
    term    := sum over products of signed primaries
    primary := NUMBER | "N" "(" which ")" "[" INT "]" | which "[" INT "]"
             | "group" "(" IDENT ")" | "inf_norm_diff" "(" ")" | "(" term ")"
    which   := "x0" | "xadv"

A bare IDENT atom is a propositional variable.  Whether a parenthesis opens a
sub-formula or an arithmetic term is decided by scanning ahead for a
comparison operator at nesting depth zero, so no backtracking is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula import (
    And,
    Arith,
    BigAnd,
    BigOr,
    Compare,
    Const,
    ForallBall,
    Formula,
    GroupProb,
    Iff,
    Implies,
    InfNormDiff,
    InputRef,
    Neg,
    NetOut,
    Not,
    Or,
    PropVar,
    Term,
)

__all__ = ["ParseError", "parse", "to_source"]

_UNICODE_SYNONYMS = {
    "∧": "&",
    "∨": "|",
    "¬": "!",
    "→": "->",
    "⇒": "->",
    "↔": "<->",
    "⇔": "<->",
    "≤": "<=",
    "≥": ">=",
    "≠": "!=",
    "×": "*",
    "÷": "/",
}

_CMP_OPS = ("<=", "<", ">=", ">", "==", "!=")
# Longest first so "<->" wins over "<-"/"<".
_PUNCT = ("<->", "->", "<=", ">=", "==", "!=", "<", ">", "(", ")", "[", "]", ":", ",", "+", "-", "*", "/", "&", "|", "!")


class ParseError(ValueError):
    """Syntax or identifier error, carrying the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | "op" | "eof"
    text: str
    value: float | None
    line: int
    column: int


def _lex(text: str) -> list:
    tokens = []
    i = 0
    line = 1
    col = 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch in _UNICODE_SYNONYMS:
            sub = _UNICODE_SYNONYMS[ch]
            tokens.append(_Token("op", sub, None, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            start = i
            while i < n and (text[i].isdigit() or text[i] == "."):
                i += 1
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and text[j].isdigit():
                    i = j
                    while i < n and text[i].isdigit():
                        i += 1
            raw = text[start:i]
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(f"malformed number {raw!r}", line, col) from None
            tokens.append(_Token("num", raw, value, line, col))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            tokens.append(_Token("ident", text[start:i], None, line, col))
            col += i - start
            continue
        for punct in _PUNCT:
            if text.startswith(punct, i):
                tokens.append(_Token("op", punct, None, line, col))
                i += len(punct)
                col += len(punct)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", None, line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list):
        self.tokens = tokens
        self.pos = 0

    def _peek(self) -> _Token:
        return self.tokens[self.pos]

    def _next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _error(self, message: str, tok: _Token | None = None):
        tok = tok or self._peek()
        raise ParseError(message, tok.line, tok.column)

    def _accept(self, text: str) -> bool:
        tok = self._peek()
        if tok.kind == "op" and tok.text == text:
            self.pos += 1
            return True
        return False

    def _expect(self, text: str) -> _Token:
        tok = self._peek()
        if tok.kind != "op" or tok.text != text:
            shown = tok.text if tok.kind != "eof" else "end of input"
            self._error(f"expected {text!r}, found {shown!r}")
        return self._next()

    # formula levels ---------------------------------------------------------

    def start(self) -> Formula:
        tok = self._peek()
        if tok.kind == "ident" and tok.text == "forall_ball":
            self._next()
            self._expect("(")
            num = self._peek()
            if num.kind != "num":
                self._error("expected ball radius")
            self._next()
            self._expect(")")
            self._expect(":")
            body = self.formula()
            result: Formula = ForallBall(num.value, body)
        else:
            result = self.formula()
        end = self._peek()
        if end.kind != "eof":
            self._error(f"unexpected trailing input {end.text!r}")
        return result

    def formula(self) -> Formula:
        out = self.imp()
        while self._accept("<->"):
            out = Iff(out, self.imp())
        return out

    def imp(self) -> Formula:
        left = self.disjunction()
        if self._accept("->"):
            return Implies(left, self.imp())
        return left

    def disjunction(self) -> Formula:
        out = self.conjunction()
        while self._accept("|"):
            out = Or(out, self.conjunction())
        return out

    def conjunction(self) -> Formula:
        out = self.unary()
        while self._accept("&"):
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        tok = self._peek()
        if tok.kind == "op" and tok.text == "!":
            self._next()
            return Not(self.unary())
        if self._comparison_ahead():
            return self.comparison()
        if tok.kind == "op" and tok.text == "(":
            self._next()
            inner = self.formula()
            self._expect(")")
            return inner
        if tok.kind == "ident":
            self._next()
            return PropVar(tok.text)
        shown = tok.text if tok.kind != "eof" else "end of input"
        self._error(f"expected a formula, found {shown!r}")

    def _comparison_ahead(self) -> bool:
        """True when a comparison operator occurs at depth 0 before the atom ends."""
        depth = 0
        for tok in self.tokens[self.pos:]:
            if tok.kind == "eof":
                return False
            if tok.kind == "op":
                if tok.text in ("(", "["):
                    depth += 1
                elif tok.text in (")", "]"):
                    depth -= 1
                    if depth < 0:
                        return False
                elif depth == 0:
                    if tok.text in _CMP_OPS:
                        return True
                    if tok.text in ("&", "|", "->", "<->", "!", ":"):
                        return False
        return False

    def comparison(self) -> Compare:
        left = self.term()
        tok = self._peek()
        if tok.kind != "op" or tok.text not in _CMP_OPS:
            self._error("expected a comparison operator")
        self._next()
        right = self.term()
        return Compare(tok.text, left, right)

    # term levels -------------------------------------------------------------

    def term(self) -> Term:
        out = self.product()
        while True:
            tok = self._peek()
            if tok.kind == "op" and tok.text in ("+", "-"):
                self._next()
                out = Arith(tok.text, out, self.product())
            else:
                return out

    def product(self) -> Term:
        out = self.signed()
        while True:
            tok = self._peek()
            if tok.kind == "op" and tok.text in ("*", "/"):
                self._next()
                out = Arith(tok.text, out, self.signed())
            else:
                return out

    def signed(self) -> Term:
        if self._accept("-"):
            return Neg(self.signed())
        return self.primary()

    def primary(self) -> Term:
        tok = self._peek()
        if tok.kind == "num":
            self._next()
            return Const(tok.value)
        if tok.kind == "op" and tok.text == "(":
            self._next()
            inner = self.term()
            self._expect(")")
            return inner
        if tok.kind == "ident":
            self._next()
            name = tok.text
            if name == "N":
                self._expect("(")
                which = self._peek()
                if which.kind != "ident" or which.text not in ("x0", "xadv"):
                    self._error("expected network input 'x0' or 'xadv'", which)
                self._next()
                self._expect(")")
                self._expect("[")
                index = self._index()
                self._expect("]")
                return NetOut(which.text, index)
            if name in ("x0", "xadv"):
                self._expect("[")
                index = self._index()
                self._expect("]")
                return InputRef(name, index)
            if name == "group":
                self._expect("(")
                gname = self._peek()
                if gname.kind != "ident":
                    self._error("expected a group name", gname)
                self._next()
                self._expect(")")
                return GroupProb(gname.text)
            if name == "inf_norm_diff":
                self._expect("(")
                self._expect(")")
                return InfNormDiff()
            self._error(f"unknown identifier {name!r} in term", tok)
        shown = tok.text if tok.kind != "eof" else "end of input"
        self._error(f"expected a term, found {shown!r}")

    def _index(self) -> int:
        tok = self._peek()
        if tok.kind != "num" or tok.value != int(tok.value):
            self._error("expected an integer index")
        self._next()
        return int(tok.value)


def parse(text: str) -> Formula:
    """Parse constraint source text into a formula tree."""
    return _Parser(_lex(text)).start()


# -- printing -----------------------------------------------------------------

_LEVEL_IFF = 1
_LEVEL_IMP = 2
_LEVEL_OR = 3
_LEVEL_AND = 4
_LEVEL_UNARY = 5


def to_source(f: Formula) -> str:
    """Render a formula back to source; inverse of ``parse`` up to whitespace.

    Big conjunctions and disjunctions print as plain chained connectives, so
    reparsing them yields the equivalent left-folded binary tree.
    """
    if isinstance(f, ForallBall):
        return f"forall_ball({_num(f.epsilon)}): {_fmt(f.body, _LEVEL_IFF)}"
    return _fmt(f, _LEVEL_IFF)


def _fmt(f: Formula, level: int) -> str:
    if isinstance(f, Iff):
        out = f"{_fmt(f.left, _LEVEL_IFF)} <-> {_fmt(f.right, _LEVEL_IMP)}"
        own = _LEVEL_IFF
    elif isinstance(f, Implies):
        out = f"{_fmt(f.left, _LEVEL_OR)} -> {_fmt(f.right, _LEVEL_IMP)}"
        own = _LEVEL_IMP
    elif isinstance(f, Or):
        out = f"{_fmt(f.left, _LEVEL_OR)} | {_fmt(f.right, _LEVEL_AND)}"
        own = _LEVEL_OR
    elif isinstance(f, And):
        out = f"{_fmt(f.left, _LEVEL_AND)} & {_fmt(f.right, _LEVEL_UNARY)}"
        own = _LEVEL_AND
    elif isinstance(f, Not):
        return f"!{_fmt(f.arg, _LEVEL_UNARY)}"
    elif isinstance(f, BigAnd):
        return "(" + " & ".join(_fmt(p, _LEVEL_UNARY) for p in f.parts) + ")"
    elif isinstance(f, BigOr):
        return "(" + " | ".join(_fmt(p, _LEVEL_UNARY) for p in f.parts) + ")"
    elif isinstance(f, PropVar):
        return f.name
    elif isinstance(f, Compare):
        return f"{_term_src(f.left, 1)} {f.op} {_term_src(f.right, 1)}"
    elif isinstance(f, ForallBall):
        raise ValueError("the bounded quantifier is only valid at the top level")
    else:
        raise ValueError(f"unknown formula node {f!r}")
    if own < level:
        return f"({out})"
    return out


def _num(v: float) -> str:
    return repr(float(v))


def _term_src(t: Term, level: int) -> str:
    # Term levels: 1 = sum, 2 = product, 3 = primary.
    if isinstance(t, Const):
        out = _num(t.value)
        return out
    if isinstance(t, Arith):
        if t.op in ("+", "-"):
            out = f"{_term_src(t.left, 1)} {t.op} {_term_src(t.right, 2)}"
            own = 1
        else:
            out = f"{_term_src(t.left, 2)} {t.op} {_term_src(t.right, 3)}"
            own = 2
        return f"({out})" if own < level else out
    if isinstance(t, Neg):
        return f"-{_term_src(t.arg, 3)}"
    if isinstance(t, NetOut):
        return f"N({t.which})[{t.index}]"
    if isinstance(t, InputRef):
        return f"{t.which}[{t.index}]"
    if isinstance(t, GroupProb):
        return f"group({t.group})"
    if isinstance(t, InfNormDiff):
        return "inf_norm_diff()"
    raise ValueError(f"unknown term node {t!r}")
