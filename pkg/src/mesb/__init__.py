"""Quality-diversity deckbuilding: MAP-Elites with sliding boundaries."""

from .archive import (
    ArchiveConfig,
    BoundaryGrid,
    Elite,
    InsertOutcome,
    SampleBuffer,
    SlidingArchive,
    compute_boundaries,
    locate_cell,
    resolution_for,
)
from .cards import Card, CardCatalog, builtin_catalog, load_catalog
from .deck import Deck, MutationConfig, behavior_of, mutate_deck, random_deck, validate_deck
from .evolution import RunConfig, RunLog, build_adversary_pool, compare_archives, run_mesb
from .game import GameOutcome, HeuristicWeights, evaluate_deck, play_game

__version__ = "0.1.0"
