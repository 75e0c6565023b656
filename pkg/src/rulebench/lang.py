"""Rule DSL: parser, DNF normalization into a rule tree, canonical rendering.

Grammar (EBNF):

    rule     = expr ;
    expr     = term , { "OR" , term } ;
    term     = factor , { "AND" , factor } ;
    factor   = "NOT" , factor | "[" , expr , "]" | atom ;
    atom     = name , "." , name , "." , name , "(" , literal , ")"
             | name , "." , "Entity" , "." , name , "(" , literal , ")" ;
    literal  = string | integer | boolean ;

Operator precedence NOT > AND > OR; square brackets group. String literals
take single or double quotes with backslash escapes. Keywords are
case-insensitive. Atoms follow Dataset.Function.Operator(argument), with
entity features written Dataset.Entity.Person / .Organization / .Location.
"""

from __future__ import annotations

from dataclasses import dataclass

from .rules import COMPATIBLE, Feature, RuleError, RuleNode, RuleTree, enumerate_paths

DEFAULT_DEPTH_LIMIT = 8


class ParseError(Exception):
    """Syntax error carrying line, column and the expected-token set."""

    def __init__(self, message: str, line: int, column: int, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        suffix = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"line {line}, column {column}: {message}{suffix}")


class NormalizeError(Exception):
    """Raised when an expression cannot become a valid rule tree."""


# ----------------------------------------------------------------------- AST


@dataclass(frozen=True)
class Atom:
    feature: Feature


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


@dataclass(frozen=True)
class Not:
    child: object


# ------------------------------------------------------------------ tokenizer


@dataclass(frozen=True)
class _Token:
    kind: str  # NAME, STRING, NUMBER, DOT, LPAREN, RPAREN, LBRACKET, RBRACKET, AND, OR, NOT, EOF
    value: str
    line: int
    column: int


_KEYWORDS = {"and": "AND", "or": "OR", "not": "NOT"}


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
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
        start_line, start_col = line, col
        if ch in "'\"":
            quote = ch
            i += 1
            col += 1
            buf = []
            closed = False
            while i < n:
                c = text[i]
                if c == "\\" and i + 1 < n:
                    buf.append(text[i + 1])
                    i += 2
                    col += 2
                    continue
                if c == quote:
                    i += 1
                    col += 1
                    closed = True
                    break
                if c == "\n":
                    break
                buf.append(c)
                i += 1
                col += 1
            if not closed:
                raise ParseError("unterminated string literal", start_line, start_col, (quote,))
            tokens.append(_Token("STRING", "".join(buf), start_line, start_col))
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            lowered = word.casefold()
            if lowered in _KEYWORDS:
                tokens.append(_Token(_KEYWORDS[lowered], word, start_line, start_col))
            elif lowered in ("true", "false"):
                tokens.append(_Token("STRING", lowered, start_line, start_col))
            else:
                tokens.append(_Token("NAME", word, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("STRING", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        simple = {".": "DOT", "(": "LPAREN", ")": "RPAREN", "[": "LBRACKET", "]": "RBRACKET"}
        if ch in simple:
            tokens.append(_Token(simple[ch], ch, start_line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", start_line, start_col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# -------------------------------------------------------------------- parser

_FUNCTION_NAMES = {
    "keyword": "keyword",
    "topic": "topic",
    "category": "category",
    "hashtag": "hashtag",
}

_ENTITY_OPERATORS = {
    "person": "entity_person",
    "organization": "entity_org",
    "org": "entity_org",
    "location": "entity_location",
}

_OPERATOR_NAMES = {
    "contains": "contains",
    "exact": "exact",
    "ingroup": "in_group",
    "in_group": "in_group",
}


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self, kind: str, expected: tuple[str, ...] | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"unexpected {tok.kind} {tok.value!r}",
                tok.line,
                tok.column,
                expected or (kind,),
            )
        self.pos += 1
        return tok

    def parse(self):
        expr = self.parse_or()
        tok = self.peek()
        if tok.kind != "EOF":
            raise ParseError(
                f"unexpected {tok.kind} {tok.value!r} after expression",
                tok.line,
                tok.column,
                ("AND", "OR", "end of input"),
            )
        return expr

    def parse_or(self):
        children = [self.parse_and()]
        while self.peek().kind == "OR":
            self.pos += 1
            children.append(self.parse_and())
        if len(children) == 1:
            return children[0]
        return Or(tuple(children))

    def parse_and(self):
        children = [self.parse_factor()]
        while self.peek().kind == "AND":
            self.pos += 1
            children.append(self.parse_factor())
        if len(children) == 1:
            return children[0]
        return And(tuple(children))

    def parse_factor(self):
        tok = self.peek()
        if tok.kind == "NOT":
            self.pos += 1
            return Not(self.parse_factor())
        if tok.kind == "LBRACKET":
            self.pos += 1
            inner = self.parse_or()
            self.take("RBRACKET", ("]",))
            return inner
        if tok.kind == "NAME":
            return self.parse_atom()
        raise ParseError(
            f"unexpected {tok.kind} {tok.value!r}",
            tok.line,
            tok.column,
            ("NOT", "[", "feature atom"),
        )

    def parse_atom(self) -> Atom:
        dataset_tok = self.take("NAME", ("dataset name",))
        self.take("DOT", (".",))
        fn_tok = self.take("NAME", ("function name",))
        fn_word = fn_tok.value.casefold()
        if fn_word == "entity":
            self.take("DOT", (".",))
            op_tok = self.take("NAME", ("Person", "Organization", "Location"))
            op_word = op_tok.value.casefold()
            if op_word not in _ENTITY_OPERATORS:
                raise ParseError(
                    f"unknown entity kind {op_tok.value!r}",
                    op_tok.line,
                    op_tok.column,
                    ("Person", "Organization", "Location"),
                )
            function = _ENTITY_OPERATORS[op_word]
            operator = "in_group"
        else:
            if fn_word not in _FUNCTION_NAMES:
                raise ParseError(
                    f"unknown function {fn_tok.value!r}",
                    fn_tok.line,
                    fn_tok.column,
                    ("Keyword", "Topic", "Category", "Hashtag", "Entity"),
                )
            function = _FUNCTION_NAMES[fn_word]
            self.take("DOT", (".",))
            op_tok = self.take("NAME", ("operator name",))
            op_word = op_tok.value.casefold()
            if op_word not in _OPERATOR_NAMES:
                raise ParseError(
                    f"unknown operator {op_tok.value!r}",
                    op_tok.line,
                    op_tok.column,
                    ("Contains", "Exact", "InGroup"),
                )
            operator = _OPERATOR_NAMES[op_word]
        self.take("LPAREN", ("(",))
        arg_tok = self.take("STRING", ("string literal",))
        self.take("RPAREN", (")",))
        try:
            feature = Feature(
                dataset=dataset_tok.value.casefold(),
                function=function,
                operator=operator,
                argument=arg_tok.value,
            )
        except RuleError as exc:
            raise ParseError(str(exc), fn_tok.line, fn_tok.column) from exc
        return Atom(feature)


def parse_rule(text: str):
    """Parse DSL text into an expression AST."""
    return _Parser(text).parse()


# ------------------------------------------------------------- normalization


def _push_not(node, negate: bool):
    if isinstance(node, Atom):
        if negate:
            feat = node.feature
            return Atom(
                Feature(feat.dataset, feat.function, feat.operator, feat.argument, not feat.negated)
            )
        return node
    if isinstance(node, Not):
        return _push_not(node.child, not negate)
    if isinstance(node, And):
        children = tuple(_push_not(c, negate) for c in node.children)
        return Or(children) if negate else And(children)
    if isinstance(node, Or):
        children = tuple(_push_not(c, negate) for c in node.children)
        return And(children) if negate else Or(children)
    raise NormalizeError(f"unknown node {node!r}")


def _disjuncts(node) -> list[list[Feature]]:
    """Expand an NNF expression into DNF disjuncts (ordered feature lists)."""
    if isinstance(node, Atom):
        return [[node.feature]]
    if isinstance(node, Or):
        out: list[list[Feature]] = []
        for child in node.children:
            out.extend(_disjuncts(child))
        return out
    if isinstance(node, And):
        combos: list[list[Feature]] = [[]]
        for child in node.children:
            child_disjuncts = _disjuncts(child)
            combos = [left + right for left in combos for right in child_disjuncts]
        return combos
    raise NormalizeError(f"unexpected node in NNF: {node!r}")


def _dedupe_features(disjunct: list[Feature]) -> list[Feature] | None:
    """Drop repeated atoms; return None for contradictions (A AND NOT A)."""
    seen: dict[tuple, Feature] = {}
    positive_or_negative: dict[tuple, bool] = {}
    out: list[Feature] = []
    for feat in disjunct:
        base = feat.key()[:4]
        if base in positive_or_negative and positive_or_negative[base] != feat.negated:
            return None
        positive_or_negative[base] = feat.negated
        if feat.key() in seen:
            continue
        seen[feat.key()] = feat
        out.append(feat)
    return out


def to_dnf(expr, rule_id: str, tag: str, children_cap: int = 10,
           depth_limit: int = DEFAULT_DEPTH_LIMIT) -> RuleTree:
    """Normalize an expression into a rule tree of shared-prefix paths.

    Truth-table equivalent to the source expression. Errors on all-negative
    disjuncts, disjuncts deeper than `depth_limit`, and sibling overflow
    against `children_cap`.
    """
    nnf = _push_not(expr, False)
    raw_disjuncts = _disjuncts(nnf)
    candidates: list[list[Feature]] = []
    for disjunct in raw_disjuncts:
        deduped = _dedupe_features(disjunct)
        if deduped is None:
            continue  # contradictory conjunction can never match
        if all(f.negated for f in deduped):
            raise NormalizeError(
                "disjunct with only negated features cannot anchor a path: "
                + " AND ".join(_render_feature(f) for f in deduped)
            )
        if len(deduped) > depth_limit:
            raise NormalizeError(
                f"disjunct of {len(deduped)} features exceeds depth limit {depth_limit}"
            )
        candidates.append(deduped)
    # absorption: A OR [A AND B] = A; keeps the trie prefix-free so no path
    # is swallowed when a shorter disjunct prefixes a longer one
    disjuncts: list[list[Feature]] = []
    kept_sets: list[frozenset] = []
    for disjunct in candidates:
        feature_set = frozenset(f.key() for f in disjunct)
        if any(ks <= feature_set for ks in kept_sets):
            continue
        keep = [not feature_set < ks for ks in kept_sets]
        disjuncts = [d for d, k in zip(disjuncts, keep) if k]
        kept_sets = [s for s, k in zip(kept_sets, keep) if k]
        disjuncts.append(disjunct)
        kept_sets.append(feature_set)
    if not disjuncts:
        raise NormalizeError("expression reduces to an unsatisfiable rule")
    roots: list[RuleNode] = []
    for disjunct in disjuncts:
        siblings = roots
        for feat in disjunct:
            node = next((s for s in siblings if s.feature == feat), None)
            if node is None:
                node = RuleNode(feat)
                siblings.append(node)
                if len(siblings) > children_cap:
                    raise NormalizeError(
                        f"{len(siblings)} siblings exceed the children cap {children_cap}"
                    )
            siblings = node.children
    rule = RuleTree(rule_id=rule_id, tag=tag, roots=roots, children_cap=children_cap)
    rule.validate()
    return rule


# ------------------------------------------------------------------ rendering

_FUNCTION_RENDER = {
    "keyword": "Keyword",
    "topic": "Topic",
    "category": "Category",
    "hashtag": "Hashtag",
}

_OPERATOR_RENDER = {"contains": "Contains", "exact": "Exact", "in_group": "InGroup"}

_ENTITY_RENDER = {
    "entity_person": "Entity.Person",
    "entity_org": "Entity.Organization",
    "entity_location": "Entity.Location",
}


def _escape(arg: str) -> str:
    return arg.replace("\\", "\\\\").replace("'", "\\'")


def _render_feature(feature: Feature) -> str:
    dataset = feature.dataset.capitalize()
    if feature.function in _ENTITY_RENDER:
        dotted = f"{dataset}.{_ENTITY_RENDER[feature.function]}"
    else:
        dotted = (
            f"{dataset}.{_FUNCTION_RENDER[feature.function]}"
            f".{_OPERATOR_RENDER[feature.operator]}"
        )
    text = f"{dotted}('{_escape(feature.argument)}')"
    return f"NOT {text}" if feature.negated else text


def render(rule: RuleTree) -> str:
    """Canonical text: fully bracketed DNF in depth-first path order."""
    parts = []
    for path in enumerate_paths(rule):
        inner = " AND ".join(_render_feature(f) for f in path.features)
        parts.append(f"[{inner}]")
    return " OR ".join(parts)


def parse_to_rule(text: str, rule_id: str, tag: str, children_cap: int = 10,
                  depth_limit: int = DEFAULT_DEPTH_LIMIT) -> RuleTree:
    return to_dnf(parse_rule(text), rule_id, tag, children_cap, depth_limit)


# ------------------------------------------------------------------ rule files


def load_rule_file(path: str, rule_id: str, children_cap: int = 10) -> RuleTree:
    """Rule file: first line `tag: <label>`, remaining lines the expression."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        rest = fh.read()
    if not first.casefold().startswith("tag:"):
        raise NormalizeError("rule file must start with a 'tag: <label>' line")
    tag = first.split(":", 1)[1].strip()
    if not tag:
        raise NormalizeError("rule file tag is empty")
    return parse_to_rule(rest.strip(), rule_id=rule_id, tag=tag, children_cap=children_cap)


def dump_rule_file(rule: RuleTree, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"tag: {rule.tag}\n{render(rule)}\n")


def evaluate_expr(expr, assignment) -> bool:
    """Evaluate an AST against a feature->bool assignment (for equivalence checks)."""
    if isinstance(expr, Atom):
        base = assignment[
            (expr.feature.dataset, expr.feature.function, expr.feature.operator, expr.feature.argument)
        ]
        return not base if expr.feature.negated else base
    if isinstance(expr, Not):
        return not evaluate_expr(expr.child, assignment)
    if isinstance(expr, And):
        return all(evaluate_expr(c, assignment) for c in expr.children)
    if isinstance(expr, Or):
        return any(evaluate_expr(c, assignment) for c in expr.children)
    raise NormalizeError(f"unknown node {expr!r}")
