"""Card definitions and catalogs (the gene pool decks are built from)."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Optional

MINION = "minion"
SPELL = "spell"
KEYWORDS = ("taunt", "charge")
SPELL_TARGETS = ("enemy-hero", "enemy-minion", "all-enemy-minions")
MAX_COST = 10


class CatalogError(ValueError):
    """Raised for malformed cards or catalogs."""


@dataclass(frozen=True)
class SpellEffect:
    damage: int
    target: str


@dataclass(frozen=True)
class Card:
    id: str
    name: str
    mana_cost: int
    kind: str
    attack: Optional[int] = None
    health: Optional[int] = None
    keywords: tuple[str, ...] = ()
    spell_effect: Optional[SpellEffect] = None
    legendary: bool = False

    def __post_init__(self):
        problems = card_problems(self)
        if problems:
            raise CatalogError(f"card {self.id!r}: " + "; ".join(problems))

    @property
    def copy_limit(self) -> int:
        return 1 if self.legendary else 2

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "mana_cost": self.mana_cost,
            "kind": self.kind,
            "attack": self.attack,
            "health": self.health,
            "keywords": list(self.keywords),
            "spell_effect": (
                None
                if self.spell_effect is None
                else {"damage": self.spell_effect.damage, "target": self.spell_effect.target}
            ),
            "legendary": self.legendary,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Card":
        try:
            effect = rec.get("spell_effect")
            return cls(
                id=str(rec["id"]),
                name=str(rec.get("name", rec["id"])),
                mana_cost=rec["mana_cost"],
                kind=rec["kind"],
                attack=rec.get("attack"),
                health=rec.get("health"),
                keywords=tuple(sorted(rec.get("keywords") or ())),
                spell_effect=None if effect is None else SpellEffect(effect["damage"], effect["target"]),
                legendary=bool(rec.get("legendary", False)),
            )
        except (KeyError, TypeError) as exc:
            raise CatalogError(f"bad card record {rec!r}: {exc}") from exc


def card_problems(card: Card) -> list[str]:
    out = []
    if not isinstance(card.mana_cost, int) or not 0 <= card.mana_cost <= MAX_COST:
        out.append(f"mana_cost {card.mana_cost!r} outside 0..{MAX_COST}")
    for kw in card.keywords:
        if kw not in KEYWORDS:
            out.append(f"unknown keyword {kw!r}")
    if card.kind == MINION:
        if not isinstance(card.attack, int) or card.attack < 0:
            out.append(f"attack {card.attack!r} must be an integer >= 0")
        if not isinstance(card.health, int) or card.health < 1:
            out.append(f"health {card.health!r} must be an integer >= 1")
        if card.spell_effect is not None:
            out.append("minions cannot carry a spell effect")
    elif card.kind == SPELL:
        if card.attack is not None or card.health is not None:
            out.append("spells have no attack/health")
        if card.keywords:
            out.append("spells have no keywords")
        eff = card.spell_effect
        if eff is None:
            out.append("spell without spell_effect")
        else:
            if not isinstance(eff.damage, int) or eff.damage < 1:
                out.append(f"spell damage {eff.damage!r} must be >= 1")
            if eff.target not in SPELL_TARGETS:
                out.append(f"unknown spell target {eff.target!r}")
    else:
        out.append(f"unknown kind {card.kind!r}")
    return out


@dataclass(frozen=True)
class CardCatalog:
    """Immutable, id-ordered collection of cards.

    Card order is the order given at construction; it fixes the integer
    index used by the simulator and therefore every seeded result.
    """

    cards: tuple[Card, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not self.cards:
            raise CatalogError("catalog is empty")
        index = {}
        for i, card in enumerate(self.cards):
            if card.id in index:
                raise CatalogError(f"duplicate card id {card.id!r}")
            index[card.id] = i
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.cards)

    def __iter__(self) -> Iterator[Card]:
        return iter(self.cards)

    def __contains__(self, card_id: str) -> bool:
        return card_id in self._index

    def __getitem__(self, card_id: str) -> Card:
        try:
            return self.cards[self._index[card_id]]
        except KeyError:
            raise KeyError(f"unknown card id {card_id!r}") from None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.cards)

    def index_of(self, card_id: str) -> int:
        return self._index[card_id]

    def copy_limit(self, card_id: str) -> int:
        return self[card_id].copy_limit

    @property
    def capacity(self) -> int:
        return sum(c.copy_limit for c in self.cards)

    def replace_card(self, card: Card) -> "CardCatalog":
        i = self._index[card.id]
        return CardCatalog(self.cards[:i] + (card,) + self.cards[i + 1 :])

    def to_records(self) -> list[dict]:
        return [c.to_record() for c in self.cards]

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=1, sort_keys=True) + "\n"

    def digest(self) -> str:
        blob = json.dumps(self.to_records(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "CardCatalog":
        if not isinstance(records, list):
            raise CatalogError("catalog file must hold an array of card records")
        return cls(tuple(Card.from_record(r) for r in records))


def minion(cid, name, cost, attack, health, *keywords, legendary=False) -> Card:
    return Card(cid, name, cost, MINION, attack, health, tuple(sorted(keywords)), None, legendary)


def spell(cid, name, cost, damage, target, legendary=False) -> Card:
    return Card(cid, name, cost, SPELL, None, None, (), SpellEffect(damage, target), legendary)


def load_catalog(path) -> CardCatalog:
    try:
        records = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: not valid JSON ({exc})") from exc
    return CardCatalog.from_records(records)


def save_catalog(catalog: CardCatalog, path) -> None:
    Path(path).write_text(catalog.to_json())


def builtin_catalog(name: str = "default") -> CardCatalog:
    """Shipped synthetic catalogs: ``basic`` (30 cards) or ``default`` (60 cards)."""
    files = {"basic": "catalog_basic30.json", "default": "catalog_default60.json"}
    if name not in files:
        raise CatalogError(f"no built-in catalog named {name!r}; choose from {sorted(files)}")
    text = resources.files("mesb.data").joinpath(files[name]).read_text()
    return CardCatalog.from_records(json.loads(text))


def patch_card(card: Card, **changes) -> Card:
    return replace(card, **changes)
