import random
import statistics
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesb.cards import CardCatalog, builtin_catalog, minion
from mesb.deck import (
    Deck,
    DeckError,
    MutationConfig,
    behavior_of,
    mutate_deck,
    random_deck,
    sample_swap_count,
    validate_deck,
)


def vanilla_catalog(n, legendary=()):
    return CardCatalog(tuple(minion(f"c{i:02d}", f"C{i}", i % 11, 1, 1, legendary=(i in legendary)) for i in range(n)))


def two_pass(costs):
    mean = sum(costs) / len(costs)
    return mean, sum((c - mean) ** 2 for c in costs) / len(costs)


CAT60 = builtin_catalog("default")


class TestRandomDeck:
    def test_forced_composition(self):
        cat = vanilla_catalog(15)
        deck = random_deck(cat, random.Random(0))
        assert deck == Deck([c for c in cat.ids for _ in range(2)])

    def test_catalog_too_small(self):
        cat = vanilla_catalog(15, legendary={3})
        assert cat.capacity == 29
        with pytest.raises(DeckError):
            random_deck(cat, random.Random(0))

    def test_always_valid(self):
        rng = random.Random(5)
        for _ in range(10_000):
            assert validate_deck(random_deck(CAT60, rng), CAT60) == []


class TestValidate:
    def test_legal(self):
        assert validate_deck(random_deck(CAT60, random.Random(1)), CAT60) == []

    def test_three_copies(self):
        deck = Deck(["wisp"] * 3 + [c for c in CAT60.ids if c != "wisp"][:27])
        problems = validate_deck(deck, CAT60)
        assert any("multiplicity" in p and "wisp" in p for p in problems)

    def test_two_legendaries(self):
        filler = [c.id for c in CAT60 if not c.legendary][:14]
        deck = Deck(["sunwalker"] * 2 + filler * 2)
        assert validate_deck(deck, CAT60) == ["multiplicity: sunwalker x2 exceeds limit 1"]

    def test_size_and_unknown(self):
        problems = validate_deck(Deck(["nope"]), CAT60)
        assert problems[0].startswith("size") and "unknown id: nope" in problems


class TestMutation:
    def test_swap_count_law(self):
        rng = random.Random(9)
        n = 200_000
        counts = Counter(sample_swap_count(rng) for _ in range(n))
        assert abs(counts[1] / n - 0.5) < 0.005
        assert abs(counts[2] / n - 0.25) < 0.005
        assert max(counts) <= 30

    def test_tail_mass_lands_on_cap(self):
        class Always:
            def random(self):
                return 0.0

        assert sample_swap_count(Always()) == 30
        assert sample_swap_count(Always(), MutationConfig(max_k=5)) == 5

    def test_forced_full_swap_is_identity(self):
        cat = vanilla_catalog(15)
        deck = random_deck(cat, random.Random(0))
        assert mutate_deck(deck, cat, random.Random(3), k=30) == deck

    def test_changes_at_most_k(self):
        rng = random.Random(4)
        deck = random_deck(CAT60, rng)
        for k in (1, 2, 5, 30):
            child = mutate_deck(deck, CAT60, rng, k=k)
            removed = sum((deck.counts() - child.counts()).values())
            assert removed <= k

    def test_outputs_valid(self):
        rng = random.Random(8)
        deck = random_deck(CAT60, rng)
        for _ in range(5_000):
            deck = mutate_deck(deck, CAT60, rng)
            assert validate_deck(deck, CAT60) == []


class TestBehavior:
    def test_constant(self):
        cat = vanilla_catalog(15)
        assert behavior_of(Deck(["c02"] * 30), cat) == (2.0, 0.0)

    def test_symmetric(self):
        cat = vanilla_catalog(15)
        deck = Deck(["c01"] * 15 + ["c03"] * 15)
        assert behavior_of(deck, cat) == (2.0, 1.0)

    def test_matches_two_pass(self):
        rng = random.Random(6)
        for _ in range(500):
            deck = random_deck(CAT60, rng)
            costs = [CAT60[c].mana_cost for c in deck.cards]
            m, v = behavior_of(deck, CAT60)
            om, ov = two_pass(costs)
            assert abs(m - om) <= 1e-12 and abs(v - ov) <= 1e-12
            assert v == pytest.approx(statistics.pvariance(costs), abs=1e-12)

    def test_bounds(self):
        costs = [c.mana_cost for c in CAT60]
        lo, hi = min(costs), max(costs)
        rng = random.Random(7)
        for _ in range(500):
            m, v = behavior_of(random_deck(CAT60, rng), CAT60)
            assert lo <= m <= hi
            assert 0 <= v <= ((hi - lo) / 2) ** 2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 2**32))
def test_reachable_with_single_swaps(seed_a, seed_b):
    """Any deck reaches any other through at most 30 single-card swaps."""
    src = random_deck(CAT60, random.Random(seed_a))
    dst = random_deck(CAT60, random.Random(seed_b))
    cur = list(src.cards)
    extra = src.counts() - dst.counts()
    missing = dst.counts() - src.counts()
    outs = list(extra.elements())
    ins = list(missing.elements())
    assert len(outs) == len(ins) <= 30
    for out, inn in zip(outs, ins):
        cur.remove(out)
        cur.append(inn)
        assert validate_deck(Deck(cur), CAT60) == []
    assert Deck(cur) == dst


def test_canonical_equality():
    ids = list(random_deck(CAT60, random.Random(1)).cards)
    shuffled = ids[:]
    random.Random(2).shuffle(shuffled)
    assert Deck(ids) == Deck(shuffled)
    assert hash(Deck(ids)) == hash(Deck(shuffled))
