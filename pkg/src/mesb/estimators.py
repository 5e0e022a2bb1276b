"""scikit-learn compatible wrappers around the archive and deck search."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .archive import ArchiveConfig, compute_boundaries, locate_cell
from .cards import CardCatalog
from .deck import Deck, behavior_of
from .evolution import RunConfig, run_mesb
from .game import HeuristicWeights


class SlidingBoundaryBinner(TransformerMixin, BaseEstimator):
    """Bin samples into percentile cells.

    ``fit`` places ``resolution - 1`` nearest-rank boundaries per feature;
    ``transform`` maps each row to its integer cell coordinates.
    """

    def __init__(self, resolution: int = 20):
        self.resolution = resolution

    def fit(self, X, y=None):
        X = check_array(X, ensure_all_finite=True)
        self.grid_ = compute_boundaries(X, self.resolution)
        self.boundaries_ = [np.asarray(b) for b in self.grid_.boundaries]
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_array(X, ensure_all_finite=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, binner was fitted with {self.n_features_in_}")
        # bisect_right per column, vectorised
        return np.stack(
            [np.searchsorted(b, X[:, d], side="right") for d, b in enumerate(self.boundaries_)], axis=1
        )


class DeckBehaviorTransformer(TransformerMixin, BaseEstimator):
    """Decks (iterables of card ids) to ``[mean mana, mana variance]`` rows."""

    def __init__(self, catalog: CardCatalog = None):
        self.catalog = catalog

    def fit(self, X=None, y=None):
        if self.catalog is None:
            raise ValueError("catalog is required")
        return self

    def transform(self, X):
        if self.catalog is None:
            raise ValueError("catalog is required")
        return np.array([behavior_of(d if isinstance(d, Deck) else Deck(d), self.catalog) for d in X], dtype=float)


class MESBDeckSearch(BaseEstimator):
    """Evolve an archive of decks; ``predict`` maps decks to archive cells.

    Parameters mirror the run configuration. ``fit`` takes no training data:
    the opponent pool and catalog are parameters, and the fitted attributes
    are ``archive_`` and ``log_``.
    """

    def __init__(self, catalog=None, opponents=None, player_weights="aggro", total_evaluations=10_000,
                 games_per_evaluation=200, remap_frequency=100, buffer_capacity=None, min_resolution=2,
                 max_resolution=20, bootstrap=100, batch_size=1, sample_budget=200, turn_limit=50,
                 n_jobs=1, random_state=0):
        self.catalog = catalog
        self.opponents = opponents
        self.player_weights = player_weights
        self.total_evaluations = total_evaluations
        self.games_per_evaluation = games_per_evaluation
        self.remap_frequency = remap_frequency
        self.buffer_capacity = buffer_capacity
        self.min_resolution = min_resolution
        self.max_resolution = max_resolution
        self.bootstrap = bootstrap
        self.batch_size = batch_size
        self.sample_budget = sample_budget
        self.turn_limit = turn_limit
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _run_config(self) -> RunConfig:
        if self.catalog is None or not self.opponents:
            raise ValueError("catalog and opponents are required")
        archive = ArchiveConfig(self.remap_frequency, self.buffer_capacity, self.min_resolution,
                                self.max_resolution, self.total_evaluations)
        return RunConfig(
            archive=archive,
            opponents=[(d if isinstance(d, Deck) else Deck(d), HeuristicWeights.from_spec(w))
                       for d, w in self.opponents],
            player_weights=HeuristicWeights.from_spec(self.player_weights),
            games_per_evaluation=self.games_per_evaluation,
            seed=int(self.random_state or 0),
            batch_size=self.batch_size,
            bootstrap=self.bootstrap,
            sample_budget=self.sample_budget,
            turn_limit=self.turn_limit,
        )

    def fit(self, X=None, y=None):
        self.archive_, self.log_ = run_mesb(self._run_config(), self.catalog, workers=self.n_jobs)
        return self

    def predict(self, X):
        """Cell coordinates of each deck under the final boundaries."""
        check_is_fitted(self, "archive_")
        B = DeckBehaviorTransformer(self.catalog).transform(X)
        return np.array([locate_cell(self.archive_.grid, row) for row in B])

    @property
    def elites_(self):
        check_is_fitted(self, "archive_")
        return self.archive_.elites()
