"""Line-oriented text formats: run config, snapshots, logs, reports, exports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from .analysis import AnalysisError, BalancePatch, DensityGrid, FrequencyShift, ItemsetReport
from .archive import ArchiveConfig, BoundaryGrid, Elite, SlidingArchive, locate_cell
from .cards import CardCatalog, builtin_catalog, load_catalog
from .deck import Deck, MutationConfig
from .evolution import LogEntry, RunConfig, RunLog
from .game import HeuristicWeights

SNAPSHOT_FORMAT = "mesb-snapshot/1"


class FormatError(ValueError):
    """Malformed input file."""


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


# --- run configuration ------------------------------------------------------------

def resolve_catalog(ref: str, base: Optional[Path] = None) -> CardCatalog:
    """``builtin:<name>`` or a path (relative paths resolve against ``base``)."""
    if ref.startswith("builtin:"):
        return builtin_catalog(ref.split(":", 1)[1])
    path = Path(ref)
    if base is not None and not path.is_absolute():
        path = base / path
    return load_catalog(path)


def starter_deck(catalog: CardCatalog, size: int = 30) -> Deck:
    """Cheapest-first curve: one copy of each card, then second copies, until full."""
    order = sorted(catalog, key=lambda c: (c.mana_cost, c.id))
    picked = [c.id for c in order][:size]
    for c in order:
        if len(picked) >= size:
            break
        if c.copy_limit > 1:
            picked.append(c.id)
    return Deck(picked)


def parse_opponents(spec, catalog: CardCatalog) -> list:
    """``"starter"`` or a list of ``{"deck": [...] | "starter", "weights": ...}``."""
    if spec == "starter":
        deck = starter_deck(catalog)
        return [(deck, HeuristicWeights.preset("aggro")), (deck, HeuristicWeights.preset("control"))]
    if not isinstance(spec, list) or not spec:
        raise FormatError("opponents must be 'starter' or a non-empty list")
    pool = []
    for i, rec in enumerate(spec):
        try:
            deck = starter_deck(catalog) if rec["deck"] == "starter" else Deck(rec["deck"])
            pool.append((deck, HeuristicWeights.from_spec(rec.get("weights", "aggro"))))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"opponent {i}: {exc}") from exc
    return pool


CONFIG_KEYS = {
    "catalog", "opponents", "player_weights", "games_per_evaluation", "total_evaluations", "seed",
    "batch_size", "bootstrap", "sample_budget", "turn_limit", "remap_frequency", "buffer_capacity",
    "min_resolution", "max_resolution", "mutation_ratio",
}


def load_run_config(path, seed: Optional[int] = None) -> tuple[RunConfig, CardCatalog, dict]:
    """Parse a JSON run config; returns (config, catalog, echo-with-defaults)."""
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: run config must be a JSON object")
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise FormatError(f"{path}: unknown config keys {sorted(unknown)}")
    if seed is not None:
        raw["seed"] = seed
    return config_from_dict(raw, Path(path).parent)


def config_from_dict(raw: dict, base: Optional[Path] = None) -> tuple[RunConfig, CardCatalog, dict]:
    catalog_ref = raw.get("catalog", "builtin:default")
    catalog = resolve_catalog(catalog_ref, base)
    try:
        archive = ArchiveConfig(
            remap_frequency=int(raw.get("remap_frequency", 100)),
            buffer_capacity=raw.get("buffer_capacity"),
            min_resolution=int(raw.get("min_resolution", 2)),
            max_resolution=int(raw.get("max_resolution", 20)),
            total_evaluations=int(raw.get("total_evaluations", 10_000)),
        )
        opponents_spec = raw.get("opponents", "starter")
        config = RunConfig(
            archive=archive,
            opponents=parse_opponents(opponents_spec, catalog),
            player_weights=HeuristicWeights.from_spec(raw.get("player_weights", "aggro")),
            games_per_evaluation=int(raw.get("games_per_evaluation", 200)),
            seed=int(raw.get("seed", 0)),
            batch_size=int(raw.get("batch_size", 1)),
            bootstrap=int(raw.get("bootstrap", 100)),
            sample_budget=int(raw.get("sample_budget", 200)),
            turn_limit=int(raw.get("turn_limit", 50)),
            mutation=MutationConfig(ratio=float(raw.get("mutation_ratio", 0.5))),
        )
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad run config: {exc}") from exc
    echo = config_echo(config, catalog_ref)
    return config, catalog, echo


def config_echo(config: RunConfig, catalog_ref: str) -> dict:
    """Every setting with defaults resolved; feeding it back reproduces the run."""
    a = config.archive
    return {
        "catalog": catalog_ref,
        "opponents": [{"deck": list(d.cards), "weights": w.to_dict()} for d, w in config.opponents],
        "player_weights": config.player_weights.to_dict(),
        "games_per_evaluation": config.games_per_evaluation,
        "total_evaluations": a.total_evaluations,
        "seed": config.seed,
        "batch_size": config.batch_size,
        "bootstrap": config.bootstrap,
        "sample_budget": config.sample_budget,
        "turn_limit": config.turn_limit,
        "remap_frequency": a.remap_frequency,
        "buffer_capacity": a.buffer_capacity,
        "min_resolution": a.min_resolution,
        "max_resolution": a.max_resolution,
        "mutation_ratio": config.mutation.ratio,
    }


def config_hash(echo: dict) -> str:
    return hashlib.sha256(_dumps(echo).encode()).hexdigest()[:16]


# --- snapshots -----------------------------------------------------------------------

def snapshot_text(archive: SlidingArchive, seed: Optional[int] = None, cfg_hash: str = "") -> str:
    c = archive.config
    header = {
        "format": SNAPSHOT_FORMAT,
        "resolution": archive.grid.resolution if archive.grid else archive.resolution,
        "boundaries": [list(b) for b in archive.grid.boundaries] if archive.grid else [],
        "archive_config": asdict(c),
        "config_hash": cfg_hash,
        "seed": seed,
        "inserted_count": archive.inserted_count,
        "buffer_size": archive.sample_count,
        "cells": len(archive),
    }
    lines = [_dumps(header)]
    for cell, e in archive.items():
        lines.append(_dumps({
            "cell": list(cell),
            "behavior": list(e.behavior),
            "fitness": e.fitness,
            "winrate": e.stats.get("winrate", 0.0),
            "games": e.stats.get("games", 0),
            "deck": list(e.genome.cards),
        }))
    return "\n".join(lines) + "\n"


def save_snapshot(archive: SlidingArchive, path, seed: Optional[int] = None, cfg_hash: str = "") -> Path:
    return _write(path, snapshot_text(archive, seed, cfg_hash))


def load_snapshot(path) -> tuple[SlidingArchive, dict]:
    """Rebuild an archive (grid + elites, no sample buffer) and return its header."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty snapshot")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:1: bad header ({exc.msg})") from exc
    if not isinstance(header, dict) or header.get("format") != SNAPSHOT_FORMAT:
        raise FormatError(f"{path}:1: not a {SNAPSHOT_FORMAT} file")
    try:
        archive = SlidingArchive(ArchiveConfig(**header["archive_config"]))
        archive.resolution = header["resolution"]
        if header["boundaries"]:
            archive.grid = BoundaryGrid(tuple(tuple(b) for b in header["boundaries"]), header["resolution"])
        archive.inserted_count = header["inserted_count"]
        archive.detached_samples = header["buffer_size"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}:1: bad header ({exc})") from exc
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
            cell = tuple(rec["cell"])
            elite = Elite(Deck(rec["deck"]), tuple(rec["behavior"]), rec["fitness"],
                          {"winrate": rec["winrate"], "games": rec["games"]})
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}:{lineno}: bad cell record ({exc})") from exc
        if archive.grid is None or locate_cell(archive.grid, elite.behavior) != cell:
            raise FormatError(f"{path}:{lineno}: behavior does not map to cell {list(cell)}")
        if cell in archive.cells:
            raise FormatError(f"{path}:{lineno}: duplicate cell {list(cell)}")
        archive.cells[cell] = elite
    if len(archive.cells) != header.get("cells"):
        raise FormatError(f"{path}: truncated, expected {header.get('cells')} cells, found {len(archive.cells)}")
    return archive, header


# --- delimited tables -------------------------------------------------------------------

def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


LOG_COLUMNS = [
    "index", "origin", "mean_mana", "mana_variance", "fitness", "winrate", "outcome", "resolution",
    "occupied", "best_fitness", "best_winrate", "mean_elite_winrate", "deck",
]


def log_text(log: RunLog) -> str:
    rows = []
    for e in log:
        d = asdict(e)
        d["deck"] = " ".join(e.deck)
        rows.append([repr(d[c]) if isinstance(d[c], float) else d[c] for c in LOG_COLUMNS])
    return _csv(LOG_COLUMNS, rows)


def save_log(log: RunLog, path) -> Path:
    return _write(path, log_text(log))


def load_log(path) -> RunLog:
    log = RunLog()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != LOG_COLUMNS:
            raise FormatError(f"{path}: unexpected run log header {reader.fieldnames}")
        for lineno, row in enumerate(reader, start=2):
            try:
                log.entries.append(LogEntry(
                    index=int(row["index"]), origin=row["origin"], mean_mana=float(row["mean_mana"]),
                    mana_variance=float(row["mana_variance"]), fitness=int(row["fitness"]),
                    winrate=float(row["winrate"]), outcome=row["outcome"], resolution=int(row["resolution"]),
                    occupied=int(row["occupied"]), best_fitness=int(row["best_fitness"]),
                    best_winrate=float(row["best_winrate"]),
                    mean_elite_winrate=float(row["mean_elite_winrate"]),
                    deck=tuple(row["deck"].split()),
                ))
            except (TypeError, ValueError, AttributeError) as exc:
                raise FormatError(f"{path}:{lineno}: bad log row ({exc})") from exc
    return log


def samples_text(archive: SlidingArchive) -> str:
    return _csv(["mean_mana", "mana_variance"], ([repr(v) for v in b] for b in archive.buffer))


def itemsets_text(report: ItemsetReport) -> str:
    return _csv(["size", "items", "support", "ratio"], ([s, i, n, repr(r)] for s, i, n, r in report.rows()))


def frequency_text(freq: dict[str, float]) -> str:
    return _csv(["card", "fraction"], ([c, repr(f)] for c, f in sorted(freq.items())))


def load_frequency(path) -> dict[str, float]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["card", "fraction"]:
            raise FormatError(f"{path}: expected columns card,fraction")
        try:
            return {row["card"]: float(row["fraction"]) for row in reader}
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from exc


def diff_text(shifts: list[FrequencyShift]) -> str:
    """Frequency shifts; ``x`` marks a side at or below the rarity threshold."""
    return _csv(
        ["card", "before", "after", "delta", "before_mark", "after_mark", "direction"],
        (
            [s.card, f"{s.before:.4f}", f"{s.after:.4f}", f"{s.delta:+.4f}",
             "x" if s.rare_before else "", "x" if s.rare_after else "",
             "down" if s.delta < 0 else "up" if s.delta > 0 else "same"]
            for s in shifts
        ),
    )


def load_patch(path) -> BalancePatch:
    try:
        return BalancePatch.from_records(_read_json(path))
    except AnalysisError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_patch(patch: BalancePatch, path) -> Path:
    return _write(path, json.dumps(patch.to_records(), indent=1) + "\n")


# --- heatmap exports ------------------------------------------------------------------

def _axis_meta(grid: BoundaryGrid, xs, ys) -> dict:
    return {
        "x": "mean_mana", "y": "mana_variance", "resolution": grid.resolution,
        "x_boundaries": list(grid.boundaries[0]), "y_boundaries": list(grid.boundaries[1]),
        "x_range": [min(xs), max(xs)] if xs else None, "y_range": [min(ys), max(ys)] if ys else None,
    }


def export_archive_heatmap(archive: SlidingArchive, out_dir, stem: str = "archive") -> dict[str, Path]:
    """Point cloud (x, y, fitness, winrate), fitness matrix and a JSON sidecar."""
    if len(archive) == 0:
        raise FormatError("nothing to export: archive is empty")
    out = Path(out_dir)
    items = archive.items()
    points = _csv(["mean_mana", "mana_variance", "fitness", "winrate"],
                  ([repr(e.behavior[0]), repr(e.behavior[1]), e.fitness, repr(e.winrate)] for _, e in items))
    r = archive.grid.resolution
    matrix = [[""] * r for _ in range(r)]
    for (i, j), e in items:
        matrix[j][i] = str(e.fitness)
    meta = _axis_meta(archive.grid, [e.behavior[0] for _, e in items], [e.behavior[1] for _, e in items])
    meta.update(value="fitness", rows="mana_variance cell", columns="mean_mana cell")
    return {
        "points": _write(out / f"{stem}_points.csv", points),
        "matrix": _write(out / f"{stem}_matrix.csv", "\n".join(",".join(row) for row in matrix) + "\n"),
        "meta": _write(out / f"{stem}_meta.json", json.dumps(meta, indent=1, sort_keys=True) + "\n"),
    }


def export_density(density: DensityGrid, out_dir, stem: str = "density") -> dict[str, Path]:
    """Exact integer counts matrix (rows = variance cell, columns = mean cell) and points."""
    if density.total == 0:
        raise FormatError("nothing to export: density is empty")
    out = Path(out_dir)
    r = density.grid.resolution
    matrix = "\n".join(",".join(str(density.counts[i][j]) for i in range(r)) for j in range(r)) + "\n"
    points = _csv(["mean_mana", "mana_variance", "count"],
                  ([repr(x), repr(y), n] for (x, y), n in sorted(density.points.items())))
    xs = [p[0] for p in density.points]
    ys = [p[1] for p in density.points]
    meta = _axis_meta(density.grid, xs, ys)
    meta.update(value="count", total=str(density.total), catalog_hash=density.catalog_hash,
                deck_size=density.deck_size, rows="mana_variance cell", columns="mean_mana cell")
    return {
        "matrix": _write(out / f"{stem}_matrix.csv", matrix),
        "points": _write(out / f"{stem}_points.csv", points),
        "meta": _write(out / f"{stem}_meta.json", json.dumps(meta, indent=1, sort_keys=True) + "\n"),
    }
