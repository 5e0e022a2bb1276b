"""Post-run analytics: frequent card sets, balance patches, behavior densities."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .archive import BoundaryGrid, SlidingArchive, locate_cell
from .cards import MAX_COST, CardCatalog


class AnalysisError(ValueError):
    pass


# --- frequent itemsets --------------------------------------------------------

@dataclass
class ItemsetReport:
    supports: dict[frozenset, int]
    n_transactions: int
    min_support: float

    def ratio(self, itemset) -> float:
        return self.supports[frozenset(itemset)] / self.n_transactions

    def by_size(self) -> dict[int, list[tuple[frozenset, int]]]:
        out = defaultdict(list)
        for s, n in self.supports.items():
            out[len(s)].append((s, n))
        return {k: sorted(v, key=lambda t: (-t[1], sorted(t[0]))) for k, v in sorted(out.items())}

    def rows(self) -> list[tuple[int, str, int, float]]:
        """(size, items joined by '+', support count, support ratio), largest support first."""
        return [
            (size, "+".join(sorted(s)), n, n / self.n_transactions)
            for size, group in self.by_size().items()
            for s, n in group
        ]


def transactions_from(decks: Iterable[Iterable[str]]) -> list[frozenset]:
    """Card presence sets; copy counts are dropped."""
    return [frozenset(d) for d in decks]


def _min_count(min_support_ratio: float, n: int) -> int:
    if not 0 < min_support_ratio <= 1:
        raise AnalysisError(f"min_support_ratio {min_support_ratio} outside (0, 1]")
    return max(1, math.ceil(min_support_ratio * n - 1e-9))


def apriori(
    transactions: Sequence[Iterable[str]], min_support_ratio: float = 0.5, max_size: Optional[int] = None
) -> ItemsetReport:
    """Level-wise frequent itemset mining with subset pruning.

    ``max_size`` stops after itemsets of that many items. Near-identical decks
    make the full lattice exponential, so callers on real archives should cap it.
    """
    if max_size is not None and max_size < 1:
        raise AnalysisError("max_size must be >= 1")
    txs = [frozenset(t) for t in transactions]
    if not txs:
        raise AnalysisError("no transactions")
    need = _min_count(min_support_ratio, len(txs))

    counts: dict[frozenset, int] = defaultdict(int)
    for t in txs:
        for item in t:
            counts[frozenset((item,))] += 1
    level = {s: n for s, n in counts.items() if n >= need}
    found = dict(level)
    k = 1
    while level and (max_size is None or k < max_size):
        prev = sorted(tuple(sorted(s)) for s in level)
        candidates = set()
        # join itemsets sharing their first k-1 items
        for i in range(len(prev)):
            for j in range(i + 1, len(prev)):
                a, b = prev[i], prev[j]
                if a[:-1] != b[:-1]:
                    break
                cand = frozenset(a + b[-1:])
                if all(frozenset(sub) in level for sub in combinations(sorted(cand), k)):
                    candidates.add(cand)
        support = dict.fromkeys(candidates, 0)
        for t in txs:
            for c in candidates:
                if c <= t:
                    support[c] += 1
        level = {s: n for s, n in support.items() if n >= need}
        found.update(level)
        k += 1
    return ItemsetReport(found, len(txs), min_support_ratio)


def closure_violations(report: ItemsetReport) -> list[frozenset]:
    """Reported itemsets with a non-empty proper subset missing from the report."""
    bad = []
    for s in report.supports:
        for r in range(1, len(s)):
            if any(frozenset(sub) not in report.supports for sub in combinations(s, r)):
                bad.append(s)
                break
    return bad


# --- card frequencies -------------------------------------------------------------

def card_frequency(archive: SlidingArchive, catalog: Optional[CardCatalog] = None) -> dict[str, float]:
    """Fraction of elite decks holding at least one copy of each card."""
    decks = [e.genome for e in archive.elites()]
    return deck_frequency(decks, catalog)


def deck_frequency(decks: Sequence, catalog: Optional[CardCatalog] = None) -> dict[str, float]:
    if not decks:
        raise AnalysisError("no elites")
    present = defaultdict(int)
    for d in decks:
        for cid in set(d):
            present[cid] += 1
    universe = list(catalog.ids) if catalog is not None else sorted(present)
    return {cid: present[cid] / len(decks) for cid in universe}


@dataclass(frozen=True)
class FrequencyShift:
    card: str
    before: float
    after: float
    delta: float
    rare_before: bool
    rare_after: bool


def frequency_diff(before: dict[str, float], after: dict[str, float], threshold: float = 0.25) -> list[FrequencyShift]:
    """Per-card change; ``rare_*`` marks occurrence in ``threshold`` or fewer decks."""
    if set(before) != set(after):
        missing = sorted(set(before) ^ set(after))
        raise AnalysisError(f"frequency tables cover different cards: {missing[:5]}")
    return [
        FrequencyShift(cid, before[cid], after[cid], after[cid] - before[cid],
                       before[cid] <= threshold, after[cid] <= threshold)
        for cid in sorted(before)
    ]


# --- balance patches --------------------------------------------------------------

PATCH_FIELDS = ("mana_cost", "attack", "health")


@dataclass(frozen=True)
class PatchEdit:
    card: str
    field: str
    delta: int


@dataclass(frozen=True)
class BalancePatch:
    edits: tuple[PatchEdit, ...] = ()

    def negate(self) -> "BalancePatch":
        return BalancePatch(tuple(PatchEdit(e.card, e.field, -e.delta) for e in self.edits))

    def to_records(self) -> list[dict]:
        return [{"card": e.card, "field": e.field, "delta": e.delta} for e in self.edits]

    @classmethod
    def from_records(cls, records) -> "BalancePatch":
        if not isinstance(records, list):
            raise AnalysisError("patch must be a list of edits")
        try:
            return cls(tuple(PatchEdit(str(r["card"]), str(r["field"]), int(r["delta"])) for r in records))
        except (KeyError, TypeError, ValueError) as exc:
            raise AnalysisError(f"malformed patch edit: {exc}") from exc


def apply_patch(catalog: CardCatalog, patch: BalancePatch) -> CardCatalog:
    """New catalog with the edits applied; every offending edit is reported at once."""
    values = {}
    errors = []
    for e in patch.edits:
        if e.card not in catalog:
            errors.append(f"{e.card}: unknown card")
            continue
        if e.field not in PATCH_FIELDS:
            errors.append(f"{e.card}: field {e.field!r} is not patchable")
            continue
        card = catalog[e.card]
        current = values.get((e.card, e.field), getattr(card, e.field))
        if current is None:
            errors.append(f"{e.card}: spells have no {e.field}")
            continue
        values[(e.card, e.field)] = current + e.delta
    for (cid, fld), v in values.items():
        lo, hi = {"mana_cost": (0, MAX_COST), "attack": (0, None), "health": (1, None)}[fld]
        if v < lo or (hi is not None and v > hi):
            errors.append(f"{cid}: {fld} would become {v}")
    if errors:
        raise AnalysisError("patch rejected: " + "; ".join(errors))
    cards = []
    for card in catalog:
        changes = {fld: v for (cid, fld), v in values.items() if cid == card.id}
        cards.append(replace(card, **changes) if changes else card)
    return CardCatalog(tuple(cards))


# --- behavior-space densities ------------------------------------------------------

@dataclass
class DensityGrid:
    """Cell weights over (mean mana, mana variance); ``counts[i][j]`` uses integer weights."""

    grid: BoundaryGrid
    counts: list[list[int]]
    catalog_hash: str = ""
    deck_size: int = 0
    points: dict = field(default_factory=dict)  # (mean, variance) -> count

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def normalized(self) -> np.ndarray:
        total = self.total
        if total == 0:
            raise AnalysisError("empty density")
        # exact rational rounding, safe for counts beyond float range of int64
        return np.array([[float(c / total) if c else 0.0 for c in row] for row in self.counts])

    def log_counts(self) -> np.ndarray:
        return np.array([[math.log10(c) if c else -math.inf for c in row] for row in self.counts])

    def occupied_columns(self) -> list[int]:
        """Mean-mana bins holding non-zero weight."""
        return [i for i, row in enumerate(self.counts) if any(row)]


def _copy_ways(n_cards: int, limit: int, max_total: int) -> list[int]:
    """ways[c] = number of copy assignments (0..limit each) over n_cards ids summing to c."""
    ways = [1] + [0] * max_total
    for _ in range(n_cards):
        nxt = [0] * (max_total + 1)
        for c, w in enumerate(ways):
            if w:
                for add in range(min(limit, max_total - c) + 1):
                    nxt[c + add] += w
        ways = nxt
    return ways


def deck_sum_counts(catalog: CardCatalog, deck_size: int) -> dict[tuple[int, int], int]:
    """Exact number of legal decks per (sum of costs, sum of squared costs).

    Cards sharing a cost and copy limit are interchangeable for these sums, so
    they are merged into one group whose copy-count polynomial is expanded
    first; the joint DP then runs over at most 22 groups.
    """
    if catalog.capacity < deck_size:
        raise AnalysisError(f"catalog capacity {catalog.capacity} < deck size {deck_size}")
    groups = defaultdict(int)
    for card in catalog:
        groups[(card.mana_cost, card.copy_limit)] += 1
    # states[n] maps (sum cost, sum cost^2) -> count
    states: list[dict] = [defaultdict(int) for _ in range(deck_size + 1)]
    states[0][(0, 0)] = 1
    for (cost, limit), n_cards in sorted(groups.items()):
        ways = _copy_ways(n_cards, limit, deck_size)
        nxt = [defaultdict(int) for _ in range(deck_size + 1)]
        for n, table in enumerate(states):
            for (s, q), cnt in table.items():
                for c in range(0, deck_size - n + 1):
                    w = ways[c]
                    if w:
                        nxt[n + c][(s + c * cost, q + c * cost * cost)] += cnt * w
        states = nxt
    return dict(states[deck_size])


def sums_to_behavior(s: int, q: int, n: int) -> tuple[float, float]:
    return s / n, (n * q - s * s) / (n * n)


def exact_behavior_distribution(catalog: CardCatalog, deck_size: int, grid: BoundaryGrid) -> DensityGrid:
    """Exact count of every legal deck, binned by mana mean and variance."""
    r = grid.resolution
    counts = [[0] * r for _ in range(r)]
    points = {}
    for (s, q), cnt in sorted(deck_sum_counts(catalog, deck_size).items()):
        b = sums_to_behavior(s, q, deck_size)
        points[b] = points.get(b, 0) + cnt
        i, j = locate_cell(grid, b)
        counts[i][j] += cnt
    return DensityGrid(grid, counts, catalog.digest(), deck_size, points)


def observed_density(behaviors: Iterable[Sequence[float]], grid: BoundaryGrid) -> DensityGrid:
    """Bin evaluated behaviors (e.g. ``RunLog.behaviors()``) into ``grid``."""
    r = grid.resolution
    counts = [[0] * r for _ in range(r)]
    points = {}
    for b in behaviors:
        b = tuple(b)
        i, j = locate_cell(grid, b)
        counts[i][j] += 1
        points[b] = points.get(b, 0) + 1
    return DensityGrid(grid, counts, "", 0, points)


def behavior_support(catalog: CardCatalog, deck_size: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """((min mean, max mean), (min variance, max variance)) over all legal decks."""
    pts = [sums_to_behavior(s, q, deck_size) for s, q in deck_sum_counts(catalog, deck_size)]
    means = [p[0] for p in pts]
    vars_ = [p[1] for p in pts]
    return (min(means), max(means)), (min(vars_), max(vars_))
