"""Command-line entry point: ``mesb <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io as mio
from .analysis import (
    AnalysisError,
    apply_patch,
    apriori,
    behavior_support,
    card_frequency,
    closure_violations,
    exact_behavior_distribution,
    frequency_diff,
    observed_density,
    transactions_from,
)
from .archive import ArchiveError, BoundaryGrid
from .cards import CatalogError, save_catalog
from .deck import DeckError
from .evolution import build_adversary_pool, compare_archives, run_mesb
from .game import GameError, HeuristicWeights

log = logging.getLogger("mesb")

EXIT_CONFIG, EXIT_MISSING, EXIT_INVARIANT = 2, 3, 4


def _out_dir(args) -> Path:
    out = Path(args.out_dir or os.environ.get("MESB_OUT_DIR", "mesb-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _execute_run(config, catalog, echo, out: Path, workers: int) -> None:
    def progress(entry):
        if (entry.index + 1) % 50 == 0:
            log.info("eval %d res=%d occupied=%d best=%d", entry.index + 1, entry.resolution,
                     entry.occupied, entry.best_fitness)

    archive, runlog = run_mesb(config, catalog, workers=workers, progress=progress)
    h = mio.config_hash(echo)
    mio._write(out / "config.json", json.dumps(echo, indent=1, sort_keys=True) + "\n")
    mio.save_snapshot(archive, out / "snapshot.jsonl", config.seed, h)
    mio.save_log(runlog, out / "runlog.csv")
    mio._write(out / "samples.csv", mio.samples_text(archive))
    mio.export_archive_heatmap(archive, out)
    print(f"run complete: {len(archive)} elites at {archive.resolution}x{archive.resolution}, output in {out}")


def cmd_run(args) -> None:
    config, catalog, echo = mio.load_run_config(args.config, args.seed)
    _execute_run(config, catalog, echo, _out_dir(args), args.workers)


def cmd_adversaries(args) -> None:
    config, catalog, echo = mio.load_run_config(args.config, args.seed)
    archive, _ = mio.load_snapshot(args.snapshot)
    config.opponents = build_adversary_pool(archive, args.top_n, config.player_weights)
    echo = mio.config_echo(config, echo["catalog"])
    _execute_run(config, catalog, echo, _out_dir(args), args.workers)


def cmd_patch(args) -> None:
    catalog = mio.resolve_catalog(args.catalog)
    patched = apply_patch(catalog, mio.load_patch(args.patch))
    out = _out_dir(args) / "catalog.json"
    save_catalog(patched, out)
    print(f"patched catalog written to {out}")


def cmd_mine(args) -> None:
    archive, _ = mio.load_snapshot(args.snapshot)
    catalog = mio.resolve_catalog(args.catalog) if args.catalog else None
    if len(archive) == 0:
        raise AnalysisError("snapshot holds no elites")
    report = apriori(transactions_from(e.genome for e in archive.elites()), args.min_support, args.max_size or None)
    bad = closure_violations(report)
    if bad:
        raise AnalysisError(f"downward closure violated for {sorted(bad[0])}")
    out = _out_dir(args)
    mio._write(out / "itemsets.csv", mio.itemsets_text(report))
    mio._write(out / "frequency.csv", mio.frequency_text(card_frequency(archive, catalog)))
    print(f"{len(report.supports)} frequent itemsets over {len(archive)} elites, output in {out}")


def cmd_distribution(args) -> None:
    catalog = mio.resolve_catalog(args.catalog)
    if args.snapshot:
        archive, _ = mio.load_snapshot(args.snapshot)
        grid = archive.grid
    else:
        (m0, m1), (v0, v1) = behavior_support(catalog, args.deck_size)
        grid = BoundaryGrid.uniform((m0, v0), (m1, v1), args.resolution)
    out = _out_dir(args)
    exact = exact_behavior_distribution(catalog, args.deck_size, grid)
    mio.export_density(exact, out, "exact")
    if args.log:
        observed = observed_density(mio.load_log(args.log).behaviors(), grid)
        mio.export_density(observed, out, "observed")
    print(f"{exact.total} decks binned into {grid.resolution}x{grid.resolution} cells, output in {out}")


def cmd_compare(args) -> None:
    catalog = mio.resolve_catalog(args.catalog)
    a, _ = mio.load_snapshot(args.a)
    b, _ = mio.load_snapshot(args.b)
    wa = HeuristicWeights.preset(args.weights)
    wb = HeuristicWeights.preset(args.weights_b or args.weights)
    report = compare_archives(a, b, args.games, args.seed or 0, catalog, wa, wb, args.sample_budget)
    out = _out_dir(args) / "compare.json"
    mio._write(out, json.dumps(report.as_dict(), indent=1, sort_keys=True) + "\n")
    print(f"A wins {report.a_winrate:.3f}, B wins {report.b_winrate:.3f} over {report.games} games")


def cmd_diff(args) -> None:
    shifts = frequency_diff(mio.load_frequency(args.before), mio.load_frequency(args.after), args.threshold)
    out = _out_dir(args) / "diff.csv"
    mio._write(out, mio.diff_text(shifts))
    print(f"frequency shifts for {len(shifts)} cards written to {out}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out-dir", default=None, help="default: $MESB_OUT_DIR or ./mesb-out")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="mesb", description="MAP-Elites with sliding boundaries for deckbuilding")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="evolve decks from a run config")
    s.add_argument("--config", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("adversaries", parents=[common], help="evolve against the best elites of a snapshot")
    s.add_argument("--config", required=True)
    s.add_argument("--snapshot", required=True)
    s.add_argument("--top-n", type=int, default=5)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_adversaries)

    s = sub.add_parser("patch", parents=[common], help="apply a balance patch to a catalog")
    s.add_argument("--catalog", required=True)
    s.add_argument("--patch", required=True)
    s.set_defaults(func=cmd_patch)

    s = sub.add_parser("mine", parents=[common], help="frequent card sets and card frequencies")
    s.add_argument("--snapshot", required=True)
    s.add_argument("--catalog", default=None)
    s.add_argument("--min-support", type=float, default=0.5)
    s.add_argument("--max-size", type=int, default=4, help="largest itemset to mine (0 = no limit)")
    s.set_defaults(func=cmd_mine)

    s = sub.add_parser("distribution", parents=[common], help="exact and observed behavior densities")
    s.add_argument("--catalog", required=True)
    s.add_argument("--deck-size", type=int, default=30)
    s.add_argument("--resolution", type=int, default=20)
    s.add_argument("--snapshot", default=None, help="bin with this snapshot's boundaries")
    s.add_argument("--log", default=None, help="run log to bin as the observed density")
    s.set_defaults(func=cmd_distribution)

    s = sub.add_parser("compare", parents=[common], help="best elite of A against best elite of B")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--catalog", required=True)
    s.add_argument("--games", type=int, default=1000)
    s.add_argument("--weights", default="aggro", choices=["aggro", "control"])
    s.add_argument("--weights-b", default=None, choices=["aggro", "control"])
    s.add_argument("--sample-budget", type=int, default=200)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("diff", parents=[common], help="compare two card frequency tables")
    s.add_argument("--before", required=True)
    s.add_argument("--after", required=True)
    s.add_argument("--threshold", type=float, default=0.25)
    s.set_defaults(func=cmd_diff)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_MISSING
    except (mio.FormatError, CatalogError, json.JSONDecodeError) as exc:
        print(f"error: config parse: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArchiveError, DeckError, GameError, AnalysisError, ValueError) as exc:
        print(f"error: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return 0


if __name__ == "__main__":
    sys.exit(main())
