"""Tokenizer contract: Unicode letter/digit runs, case-folded, set
semantics; agreement with an independent category-walker oracle."""

import random
import unicodedata

from hypothesis import given
from hypothesis import strategies as st

from ctxmem.text import token_sequence, tokenize


def oracle_tokens(text: str) -> set:
    """Independent splitter: walk characters by Unicode category."""
    tokens, current = set(), []
    for ch in text:
        if unicodedata.category(ch)[0] in ("L", "N") and ch != "_":
            current.append(ch)
        else:
            if current:
                tokens.add("".join(current).casefold())
            current = []
    if current:
        tokens.add("".join(current).casefold())
    return tokens


def test_case_fold_and_dedup():
    assert tokenize("Tokyo hotel Hotel") == {"tokyo", "hotel"}


def test_empty_text():
    assert tokenize("") == set()


def test_underscore_is_a_separator():
    assert tokenize("snake_case_name") == {"snake", "case", "name"}


def test_digits_kept():
    assert tokenize("JR Pass costs 210 USD") == {"jr", "pass", "costs", "210", "usd"}


def test_sequence_keeps_order_and_multiplicity():
    assert token_sequence("a b a c") == ["a", "b", "a", "c"]


def test_oracle_agreement_on_corpus():
    rng = random.Random(99)
    alphabet = ("abc XYZ 012 ,.;:!?()[]{} \t\n-_/\\'\"@#$%^&* "
                "ä Ö ß ñ é 中 文 日本語 한글 кирилл  ①②")
    corpus = ["".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 120)))
              for _ in range(1000)]
    corpus += ["", " ", "___", "a_b", "Tokyo2026", "naïve café", "ΣΦ σφ"]
    for text in corpus:
        assert tokenize(text) == oracle_tokens(text), repr(text)


@given(st.text(max_size=200))
def test_oracle_agreement_property(text):
    assert tokenize(text) == oracle_tokens(text)
