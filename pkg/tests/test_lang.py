"""Rule DSL: parsing, DNF normalization, canonical rendering."""

import random
from itertools import product

import pytest

from oracles.brute import BoolNode
from rulebench.lang import (
    And,
    Atom,
    Not,
    NormalizeError,
    Or,
    ParseError,
    dump_rule_file,
    evaluate_expr,
    load_rule_file,
    parse_rule,
    parse_to_rule,
    render,
    to_dnf,
)
from rulebench.rules import Feature, enumerate_paths


def kw(arg: str, negated: bool = False) -> Feature:
    return Feature("tweets", "keyword", "contains", arg, negated)


def paths_of(rule):
    return {p.features for p in enumerate_paths(rule)}


def test_parse_conjunction_of_keyword_and_entity():
    expr = parse_rule(
        "Tweet.Keyword.Contains('Health') AND Tweet.Entity.Person('Hon Greg Hunt')"
    )
    assert isinstance(expr, And)
    left, right = expr.children
    assert left == Atom(Feature("tweet", "keyword", "contains", "Health"))
    assert right.feature.function == "entity_person"
    assert right.feature.operator == "in_group"
    assert right.feature.argument == "Hon Greg Hunt"


def test_parse_single_atom():
    expr = parse_rule("Tweet.Keyword.Contains('x')")
    assert expr == Atom(Feature("tweet", "keyword", "contains", "x"))


def test_parse_bracketed_or_of_ands():
    expr = parse_rule(
        "[Tweets.Keyword.Contains('a') AND Tweets.Keyword.Contains('b')]"
        " OR [Tweets.Keyword.Contains('c') AND Tweets.Keyword.Contains('d')]"
    )
    assert isinstance(expr, Or)
    assert all(isinstance(c, And) for c in expr.children)


def test_and_binds_tighter_than_or():
    expr = parse_rule(
        "Tweets.Keyword.Contains('a') OR Tweets.Keyword.Contains('b')"
        " AND Tweets.Keyword.Contains('c')"
    )
    assert isinstance(expr, Or)
    assert isinstance(expr.children[1], And)


def test_not_binds_tighter_than_and():
    expr = parse_rule("Tweets.Keyword.Contains('a') AND NOT Tweets.Keyword.Contains('b')")
    assert isinstance(expr, And)
    assert isinstance(expr.children[1], Not)


def test_double_quoted_strings_and_escapes():
    expr = parse_rule('Tweets.Keyword.Contains("it\\\'s")')
    assert expr.feature.argument == "it's"


def test_syntax_error_carries_position_and_expectations():
    with pytest.raises(ParseError) as err:
        parse_rule("Tweets.Keyword.Contains('a') AND")
    assert err.value.line == 1
    assert err.value.column <= len("Tweets.Keyword.Contains('a') AND") + 1
    assert err.value.expected


def test_unknown_function_name_is_a_parse_error():
    with pytest.raises(ParseError, match="unknown function"):
        parse_rule("Tweets.Regex.Contains('a')")


def test_unknown_operator_name_is_a_parse_error():
    with pytest.raises(ParseError, match="unknown operator"):
        parse_rule("Tweets.Keyword.Near('a')")


def test_dnf_distributes_or_under_and():
    rule = to_dnf(
        parse_rule(
            "[Tweets.Keyword.Contains('a') OR Tweets.Keyword.Contains('b')]"
            " AND Tweets.Keyword.Contains('c')"
        ),
        "r",
        "tag",
    )
    assert paths_of(rule) == {(kw("a"), kw("c")), (kw("b"), kw("c"))}


def test_dnf_keeps_negated_feature_on_the_path():
    rule = to_dnf(
        parse_rule("Tweets.Keyword.Contains('a') AND NOT Tweets.Keyword.Contains('b')"),
        "r",
        "tag",
    )
    assert paths_of(rule) == {(kw("a"), kw("b", negated=True))}


def test_dnf_factors_shared_prefix_into_one_root():
    rule = to_dnf(
        parse_rule(
            "Tweets.Keyword.Contains('a') AND"
            " [Tweets.Keyword.Contains('b') OR Tweets.Keyword.Contains('c')]"
        ),
        "r",
        "tag",
    )
    assert len(rule.roots) == 1
    assert rule.roots[0].feature == kw("a")
    assert {c.feature for c in rule.roots[0].children} == {kw("b"), kw("c")}
    # truth-table equivalence over all 8 assignments of a, b, c
    expr = parse_rule(
        "Tweets.Keyword.Contains('a') AND"
        " [Tweets.Keyword.Contains('b') OR Tweets.Keyword.Contains('c')]"
    )
    for bits in product([False, True], repeat=3):
        assignment = {
            ("tweets", "keyword", "contains", name): bit for name, bit in zip("abc", bits)
        }
        via_tree = any(
            all(assignment[f.key()[:4]] != f.negated for f in path.features)
            for path in enumerate_paths(rule)
        )
        assert via_tree == evaluate_expr(expr, assignment)


def test_all_negative_disjunct_is_rejected():
    with pytest.raises(NormalizeError, match="negated"):
        to_dnf(parse_rule("NOT Tweets.Keyword.Contains('a')"), "r", "tag")


def test_unsatisfiable_expression_is_rejected():
    with pytest.raises(NormalizeError, match="unsatisfiable"):
        to_dnf(
            parse_rule("Tweets.Keyword.Contains('a') AND NOT Tweets.Keyword.Contains('a')"),
            "r",
            "tag",
        )


def test_depth_limit_enforced():
    text = " AND ".join(f"Tweets.Keyword.Contains('w{i}')" for i in range(4))
    with pytest.raises(NormalizeError, match="depth limit"):
        to_dnf(parse_rule(text), "r", "tag", depth_limit=3)


def test_sibling_cap_enforced():
    text = " OR ".join(f"Tweets.Keyword.Contains('w{i}')" for i in range(4))
    with pytest.raises(NormalizeError, match="cap"):
        to_dnf(parse_rule(text), "r", "tag", children_cap=3)


def test_absorption_drops_redundant_longer_disjunct():
    # a OR [a AND b] must collapse to just a, else the trie would bury
    # the standalone path under the longer one
    rule = to_dnf(
        parse_rule(
            "Tweets.Keyword.Contains('a') OR"
            " [Tweets.Keyword.Contains('a') AND Tweets.Keyword.Contains('b')]"
        ),
        "r",
        "tag",
    )
    assert paths_of(rule) == {(kw("a"),)}


def test_render_single_path():
    rule = parse_to_rule(
        "Tweets.Keyword.Contains('a') AND Tweets.Keyword.Contains('b')", "r", "tag"
    )
    assert render(rule) == "[Tweets.Keyword.Contains('a') AND Tweets.Keyword.Contains('b')]"


def test_render_two_children_as_two_paths():
    rule = parse_to_rule(
        "Tweets.Keyword.Contains('a') AND"
        " [Tweets.Keyword.Contains('b') OR Tweets.Keyword.Contains('c')]",
        "r",
        "tag",
    )
    assert render(rule) == (
        "[Tweets.Keyword.Contains('a') AND Tweets.Keyword.Contains('b')]"
        " OR [Tweets.Keyword.Contains('a') AND Tweets.Keyword.Contains('c')]"
    )


def test_render_escapes_quotes():
    rule = parse_to_rule("Tweets.Keyword.Contains('it\\'s')", "r", "tag")
    assert render(rule) == "[Tweets.Keyword.Contains('it\\'s')]"
    reparsed = parse_to_rule(render(rule), "r", "tag")
    assert paths_of(reparsed) == paths_of(rule)


def random_expression(rng: random.Random, names: list[str], depth: int = 0) -> BoolNode:
    roll = rng.random()
    if depth >= 3 or roll < 0.4:
        return BoolNode("atom", atom=rng.choice(names))
    if roll < 0.55:
        return BoolNode("not", children=[random_expression(rng, names, depth + 1)])
    kind = "and" if roll < 0.8 else "or"
    width = rng.randint(2, 3)
    return BoolNode(kind, children=[random_expression(rng, names, depth + 1) for _ in range(width)])


def test_render_parse_render_is_idempotent_on_generated_rules():
    rng = random.Random(11)
    names = [f"w{i}" for i in range(6)]
    done = 0
    attempts = 0
    while done < 200 and attempts < 4000:
        attempts += 1
        node = random_expression(rng, names)
        try:
            rule = to_dnf(parse_rule(node.render()), "r", "tag", children_cap=64, depth_limit=12)
        except NormalizeError:
            continue
        first = render(rule)
        reparsed = parse_to_rule(first, "r", "tag", children_cap=64, depth_limit=12)
        assert render(reparsed) == first
        assert paths_of(reparsed) == paths_of(rule)
        done += 1
    assert done == 200


def test_rule_file_round_trip(tmp_path):
    path = tmp_path / "rule.txt"
    path.write_text("tag: alpha\nTweets.Keyword.Contains('hook')\n", encoding="utf-8")
    rule = load_rule_file(str(path), rule_id="seed")
    assert rule.tag == "alpha"
    assert paths_of(rule) == {(kw("hook"),)}
    out = tmp_path / "out.txt"
    dump_rule_file(rule, str(out))
    again = load_rule_file(str(out), rule_id="seed")
    assert paths_of(again) == paths_of(rule)


def test_rule_file_requires_tag_line(tmp_path):
    path = tmp_path / "rule.txt"
    path.write_text("Tweets.Keyword.Contains('hook')\n", encoding="utf-8")
    with pytest.raises(NormalizeError, match="tag"):
        load_rule_file(str(path), rule_id="seed")


def test_error_positions_stay_inside_the_input():
    rng = random.Random(3)
    alphabet = "abc.()[]'\" ANDORNT"
    for _ in range(300):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 30)))
        try:
            parse_rule(text)
        except ParseError as err:
            assert 1 <= err.line <= text.count("\n") + 1
            assert err.column >= 1
            assert err.column <= len(text) + 1
