"""Generate-evaluate-insert driver over a sliding archive."""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from .archive import ArchiveConfig, ArchiveError, Elite, SlidingArchive, resolution_for
from .cards import CardCatalog
from .deck import Deck, MutationConfig, behavior_of, check_deck, mutate_deck, random_deck
from .game import (
    DEFAULT_SAMPLE_BUDGET,
    DEFAULT_TURN_LIMIT,
    GameError,
    HeuristicWeights,
    derive_seed,
    evaluate_deck,
    play_game,
)


@dataclass
class RunConfig:
    archive: ArchiveConfig
    opponents: list  # (Deck, HeuristicWeights) pairs
    player_weights: HeuristicWeights = field(default_factory=lambda: HeuristicWeights.preset("aggro"))
    games_per_evaluation: int = 200
    seed: int = 0
    batch_size: int = 1
    bootstrap: int = 100
    sample_budget: int = DEFAULT_SAMPLE_BUDGET
    turn_limit: int = DEFAULT_TURN_LIMIT
    mutation: MutationConfig = field(default_factory=MutationConfig)

    def __post_init__(self):
        if self.games_per_evaluation < 1:
            raise ValueError("games_per_evaluation must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.opponents:
            raise ValueError("opponent pool is empty")

    @property
    def total_evaluations(self) -> int:
        return self.archive.total_evaluations


@dataclass
class LogEntry:
    index: int
    origin: str
    mean_mana: float
    mana_variance: float
    fitness: int
    winrate: float
    outcome: str
    resolution: int
    occupied: int
    best_fitness: int
    best_winrate: float
    mean_elite_winrate: float
    deck: tuple[str, ...] = ()

    @property
    def behavior(self) -> tuple[float, float]:
        return (self.mean_mana, self.mana_variance)


@dataclass
class RunLog:
    entries: list[LogEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def behaviors(self) -> list[tuple[float, float]]:
        return [e.behavior for e in self.entries]


def _evaluate_job(args):
    deck, opponents, games, weights, seed, catalog, budget, turn_limit = args
    return evaluate_deck(deck, opponents, games, weights, seed, catalog, budget, turn_limit)


def _propose(index: int, archive: SlidingArchive, catalog: CardCatalog, config: RunConfig) -> tuple[Deck, str]:
    rng = random.Random(derive_seed(config.seed, "propose", index))
    if index < config.bootstrap or len(archive) == 0:
        return random_deck(catalog, rng), "random"
    parent = archive.select_random_elite(rng)
    return mutate_deck(parent.genome, catalog, rng, config.mutation), "mutant"


def run_mesb(config: RunConfig, catalog: CardCatalog, workers: int = 1, progress=None) -> tuple[SlidingArchive, RunLog]:
    """Run the whole evaluation budget and return the final archive and log.

    Candidates of one batch pick parents from the archive as it stood at the
    start of the batch; results are inserted in index order, so the outcome
    depends on ``batch_size`` but never on ``workers``.
    """
    for deck, _ in config.opponents:
        check_deck(deck, catalog)
    archive = SlidingArchive(config.archive)
    log = RunLog()
    total = config.total_evaluations
    best_fit = None
    best_win = 0.0
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for start in range(0, total, config.batch_size):
            idx = range(start, min(start + config.batch_size, total))
            proposals = [_propose(i, archive, catalog, config) for i in idx]
            # behavior is a pure function of the deck, known before any game is played
            behaviors = [behavior_of(deck, catalog) for deck, _ in proposals]
            jobs = [
                (deck, config.opponents, config.games_per_evaluation, config.player_weights,
                 derive_seed(config.seed, "evaluate", i), catalog, config.sample_budget, config.turn_limit)
                for i, (deck, _) in zip(idx, proposals)
            ]
            results = list(pool.map(_evaluate_job, jobs)) if pool else [_evaluate_job(j) for j in jobs]
            for i, (deck, origin), behavior, res in zip(idx, proposals, behaviors, results):
                resolution = resolution_for(i, config.archive)
                if resolution != archive.resolution:
                    raise ArchiveError(f"resolution trace diverged at index {i}")
                elite = Elite(deck, behavior, res.fitness,
                              {"winrate": res.winrate, "games": res.games})
                outcome = archive.try_insert(elite)
                best_fit = res.fitness if best_fit is None else max(best_fit, res.fitness)
                elites = archive.elites()
                best_win = max(best_win, res.winrate)
                log.entries.append(LogEntry(
                    index=i, origin=origin, mean_mana=behavior[0], mana_variance=behavior[1],
                    fitness=res.fitness, winrate=res.winrate, outcome=outcome.value,
                    resolution=resolution, occupied=len(elites), best_fitness=best_fit,
                    best_winrate=best_win,
                    mean_elite_winrate=sum(e.winrate for e in elites) / len(elites),
                    deck=deck.cards,
                ))
                if progress is not None:
                    progress(log.entries[-1])
    finally:
        if pool is not None:
            pool.shutdown()
    return archive, log


def ranked_elites(archive: SlidingArchive) -> list:
    """(cell, elite) pairs by fitness descending, ties by cell ascending."""
    return sorted(archive.items(), key=lambda ce: (-ce[1].fitness, ce[0]))


def build_adversary_pool(archive: SlidingArchive, top_n: int, weights: HeuristicWeights) -> list:
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    if len(archive) < top_n:
        raise ArchiveError(f"archive holds {len(archive)} elites, need {top_n}")
    return [(elite.genome, weights) for _, elite in ranked_elites(archive)[:top_n]]


@dataclass(frozen=True)
class HeadToHead:
    games: int
    a_wins: int
    b_wins: int
    draws: int
    a_mean_margin: float
    b_mean_margin: float

    @property
    def a_winrate(self) -> float:
        return self.a_wins / self.games

    @property
    def b_winrate(self) -> float:
        return self.b_wins / self.games

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(a_winrate=self.a_winrate, b_winrate=self.b_winrate)
        return d


def compare_archives(a: SlidingArchive, b: SlidingArchive, games: int, seed: int, catalog: CardCatalog,
                     weights_a: HeuristicWeights, weights_b: Optional[HeuristicWeights] = None,
                     sample_budget: int = DEFAULT_SAMPLE_BUDGET, turn_limit: int = DEFAULT_TURN_LIMIT) -> HeadToHead:
    """Best elite of ``a`` against best elite of ``b``; seats alternate each game."""
    if len(a) == 0 or len(b) == 0:
        raise ArchiveError("no elites")
    if games < 1:
        raise GameError("games must be >= 1")
    weights_b = weights_b or weights_a
    deck_a = ranked_elites(a)[0][1].genome
    deck_b = ranked_elites(b)[0][1].genome
    wins = losses = draws = margin = 0
    for g in range(games):
        out = play_game(deck_a, deck_b, weights_a, weights_b, derive_seed(seed, "compare", g), catalog,
                        sample_budget, turn_limit, a_first=(g % 2 == 0))
        margin += out.health_margin
        if out.winner == 0:
            wins += 1
        elif out.winner == 1:
            losses += 1
        else:
            draws += 1
    return HeadToHead(games, wins, losses, draws, margin / games, -margin / games)
