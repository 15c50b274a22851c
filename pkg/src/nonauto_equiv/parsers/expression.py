"""Parser for system-definition expressions.

Converts infix expression text to an AST using a character tokenizer and a
recursive-descent parser.

Grammar (whitespace insignificant):

    expression := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := "-" unary | power
    power      := primary ("^" unary)?
    primary    := number | "t" | "x" index | "pi" | function "(" expression ")"
                | "(" expression ")"

so ``^`` binds tighter than unary minus, which binds tighter than ``*`` and
``/``, which bind tighter than ``+`` and ``-``. All binary operators are left
associative except ``^``.
"""

import math
from dataclasses import dataclass

from ..dsl import UNARY_FUNCTIONS, Binary, Expr, Num, State, Time, Unary
from ..exceptions import DimensionError, ParseError, UnknownIdentifier

OPERATOR_CHARS = "+-*/^"
CONSTANTS = {"pi": math.pi}

_PRIMARY_START = ["(", "-", "identifier", "number"]
_AFTER_OPERAND = ["*", "+", "-", "/", "^", "end of input"]


@dataclass
class Token:
    """Token produced by the tokenizer."""

    type: str  # "number", "identifier", "op", "(", ")", "end"
    content: str
    pos: int


class ExprTokenizer:
    """Character tokenizer for expression text.

    Numbers accept an optional fraction and exponent (``1``, ``0.25``,
    ``.5``, ``1e-05``). Identifiers start with a letter and continue with
    letters, digits or underscores.
    """

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.length = len(text)
        self.tokens: list[Token] = []

    def tokenize(self) -> list[Token]:
        """Tokenize input into a list of tokens terminated by an ``end`` token."""
        while self.pos < self.length:
            char = self._peek()
            if char.isspace():
                self._advance()
            elif char.isdigit() or (char == "." and self._peek(2)[1:].isdigit()):
                self._parse_number()
            elif char.isalpha():
                self._parse_identifier()
            elif char in OPERATOR_CHARS:
                self.tokens.append(Token("op", char, self.pos))
                self._advance()
            elif char in "()":
                self.tokens.append(Token(char, char, self.pos))
                self._advance()
            else:
                raise ParseError(
                    f"Unexpected character {char!r}",
                    context={"position": self.pos, "expected": sorted(_PRIMARY_START)},
                )
        self.tokens.append(Token("end", "", self.length))
        return self.tokens

    def _peek(self, n: int = 1) -> str:
        """Peek ahead n characters without advancing position."""
        return self.text[self.pos : self.pos + n]

    def _advance(self, n: int = 1) -> None:
        """Advance position by n characters."""
        self.pos += n

    def _parse_number(self) -> None:
        """Parse a decimal literal with optional exponent."""
        start = self.pos
        while self._peek().isdigit():
            self._advance()
        if self._peek() == ".":
            self._advance()
            while self._peek().isdigit():
                self._advance()
        if self._peek() in ("e", "E"):
            # Only an exponent if digits follow (optionally signed)
            mark = self.pos
            self._advance()
            if self._peek() in ("+", "-"):
                self._advance()
            if self._peek().isdigit():
                while self._peek().isdigit():
                    self._advance()
            else:
                self.pos = mark
        self.tokens.append(Token("number", self.text[start : self.pos], start))

    def _parse_identifier(self) -> None:
        """Parse a name: variable, constant or function."""
        start = self.pos
        while self.pos < self.length and (self._peek().isalnum() or self._peek() == "_"):
            self._advance()
        self.tokens.append(Token("identifier", self.text[start : self.pos], start))


class ExprParser:
    """Recursive-descent parser from tokens to an expression tree."""

    def __init__(self, tokens: list[Token], n: int):
        self.tokens = tokens
        self.n = n
        self.i = 0

    def parse(self) -> Expr:
        """Parse a complete expression; trailing tokens are an error."""
        expr = self._expression()
        token = self._current()
        if token.type != "end":
            raise ParseError(
                f"Unexpected {token.content!r} after complete expression",
                context={"position": token.pos, "expected": _AFTER_OPERAND},
            )
        return expr

    def _current(self) -> Token:
        return self.tokens[self.i]

    def _is_op(self, *ops: str) -> bool:
        token = self._current()
        return token.type == "op" and token.content in ops

    def _expression(self) -> Expr:
        left = self._term()
        while self._is_op("+", "-"):
            op = self._current().content
            self.i += 1
            left = Binary(op, left, self._term())
        return left

    def _term(self) -> Expr:
        left = self._unary()
        while self._is_op("*", "/"):
            op = self._current().content
            self.i += 1
            left = Binary(op, left, self._unary())
        return left

    def _unary(self) -> Expr:
        if self._is_op("-"):
            self.i += 1
            return Unary("neg", self._unary())
        return self._power()

    def _power(self) -> Expr:
        base = self._primary()
        if self._is_op("^"):
            self.i += 1
            return Binary("^", base, self._unary())
        return base

    def _primary(self) -> Expr:
        token = self._current()

        if token.type == "number":
            self.i += 1
            return Num(float(token.content))

        if token.type == "(":
            self.i += 1
            inner = self._expression()
            self._expect(")")
            return inner

        if token.type == "identifier":
            self.i += 1
            return self._identifier(token)

        what = "end of input" if token.type == "end" else repr(token.content)
        raise ParseError(
            f"Expected an operand, found {what}",
            context={"position": token.pos, "expected": _PRIMARY_START},
        )

    def _identifier(self, token: Token) -> Expr:
        name = token.content

        if name == "t":
            return Time()

        if name in CONSTANTS:
            return Num(CONSTANTS[name])

        if name[0] == "x" and name[1:].isdigit():
            index = int(name[1:])
            if not 1 <= index <= self.n:
                raise DimensionError(
                    f"State variable {name} is outside x1..x{self.n}",
                    context={"position": token.pos, "expected": [], "dimension": self.n},
                )
            return State(index)

        if name in UNARY_FUNCTIONS:
            self._expect("(")
            argument = self._expression()
            self._expect(")")
            return Unary(name, argument)

        raise UnknownIdentifier(
            f"Unknown identifier {name!r}",
            context={"position": token.pos, "expected": ["t", "x1..xn", "pi", *UNARY_FUNCTIONS]},
        )

    def _expect(self, kind: str) -> None:
        token = self._current()
        if token.type != kind:
            what = "end of input" if token.type == "end" else repr(token.content)
            raise ParseError(
                f"Expected {kind!r}, found {what}",
                context={"position": token.pos, "expected": [kind]},
            )
        self.i += 1


def parse_expr(text: str, n: int) -> Expr:
    """Parse expression text for a system of dimension ``n``.

    Args:
        text: Infix expression, e.g. ``"0.2*(sqrt(1+x1^2)+cos(t))"``
        n: Declared state dimension (``x1..xn`` are valid)

    Returns:
        Expression AST

    Raises:
        ParseError: Malformed input, with ``position`` and ``expected``
        UnknownIdentifier: Name that is not a variable, constant or function
        DimensionError: ``xk`` with ``k > n`` (or ``k < 1``)

    Example:
        >>> parse_expr("0.25*x1", 1)
        Binary(op='*', left=Num(value=0.25), right=State(index=1))
    """
    tokens = ExprTokenizer(text).tokenize()
    return ExprParser(tokens, n).parse()
