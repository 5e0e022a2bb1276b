"""Deck genome: construction, validation, geometric swap mutation, mana behavior."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .cards import CardCatalog

DECK_SIZE = 30


class DeckError(ValueError):
    pass


@dataclass(frozen=True)
class Deck:
    """Multiset of card ids, stored sorted so equal multisets compare equal."""

    cards: tuple[str, ...]

    def __init__(self, cards: Iterable[str]):
        object.__setattr__(self, "cards", tuple(sorted(cards)))

    def __len__(self) -> int:
        return len(self.cards)

    def __iter__(self):
        return iter(self.cards)

    def counts(self) -> Counter:
        return Counter(self.cards)

    def to_list(self) -> list[str]:
        return list(self.cards)


@dataclass(frozen=True)
class MutationConfig:
    ratio: float = 0.5
    max_k: int = DECK_SIZE


def validate_deck(deck: Deck, catalog: CardCatalog, size: int = DECK_SIZE) -> list[str]:
    """Every violated deck invariant; empty when the deck is legal."""
    problems = []
    if len(deck) != size:
        problems.append(f"size: deck has {len(deck)} cards, expected {size}")
    for cid, n in sorted(deck.counts().items()):
        if cid not in catalog:
            problems.append(f"unknown id: {cid}")
        elif n > catalog.copy_limit(cid):
            problems.append(f"multiplicity: {cid} x{n} exceeds limit {catalog.copy_limit(cid)}")
    return problems


def check_deck(deck: Deck, catalog: CardCatalog, size: int = DECK_SIZE) -> Deck:
    problems = validate_deck(deck, catalog, size)
    if problems:
        raise DeckError("invalid deck: " + "; ".join(problems))
    return deck


def random_deck(catalog: CardCatalog, rng, size: int = DECK_SIZE) -> Deck:
    """Draw ids uniformly among those with copies left until the deck is full."""
    if catalog.capacity < size:
        raise DeckError(f"catalog capacity {catalog.capacity} < deck size {size}")
    left = {c.id: c.copy_limit for c in catalog}
    open_ids = list(catalog.ids)
    picked = []
    while len(picked) < size:
        i = rng.randrange(len(open_ids))
        cid = open_ids[i]
        picked.append(cid)
        left[cid] -= 1
        if left[cid] == 0:
            open_ids.pop(i)
    return Deck(picked)


def sample_swap_count(rng, config: MutationConfig = MutationConfig()) -> int:
    """k with Pr(k) = ratio**k for k < max_k, remaining tail mass at max_k."""
    k = 1
    while k < config.max_k and rng.random() < config.ratio:
        k += 1
    return k


def mutate_deck(deck: Deck, catalog: CardCatalog, rng, config: MutationConfig = MutationConfig(), k: int = None) -> Deck:
    """Swap ``k`` random card instances for random legal replacements."""
    if k is None:
        k = sample_swap_count(rng, config)
    cards = list(deck.cards)
    k = min(k, len(cards))
    drop = set(rng.sample(range(len(cards)), k))
    kept = [c for i, c in enumerate(cards) if i not in drop]
    counts = Counter(kept)
    ids = catalog.ids
    for _ in range(k):
        while True:
            cid = ids[rng.randrange(len(ids))]
            if counts[cid] < catalog.copy_limit(cid):
                break
        counts[cid] += 1
        kept.append(cid)
    return Deck(kept)


def behavior_of(deck: Deck, catalog: CardCatalog) -> tuple[float, float]:
    """(mean mana cost, population variance of mana cost); no simulation needed."""
    costs = [catalog[c].mana_cost for c in deck.cards]
    n = len(costs)
    s = sum(costs)
    q = sum(c * c for c in costs)
    # exact integer numerators, one rounding each
    return s / n, (n * q - s * s) / (n * n)
