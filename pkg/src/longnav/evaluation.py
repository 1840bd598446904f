"""Registration-error statistics, paired t-tests, and strategy comparisons.

A comparison replays every strategy over the same evidence: in open loop each
strategy consumes an identical frame stream (regenerated or re-read per
strategy and verified byte-identical by hashing), in closed loop each strategy
drives its own copy of the same seeded world. Errors eps_i = |delta_i -
gamma_i| feed per-strategy CDFs and pairwise paired t-tests.
"""

from __future__ import annotations

import hashlib
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import ConfigError, DatasetError
from .registration import RegistrationParams
from .simulator import (World, WorldConfig, generate_frames, replay_frames,
                        run_closed_loop, teach)

DEFAULT_THRESHOLDS = tuple(float(v) for v in range(0, 101))


@dataclass
class ErrorSequence:
    """Per-frame registration errors for one strategy, aligned by frame key."""

    strategy: str
    values: np.ndarray  # eps_i >= 0, pixels
    failed: np.ndarray  # True where the penalty was substituted
    keys: list  # (traversal, location) per entry

    def __len__(self):
        return len(self.values)

    def mean(self) -> float:
        return float(self.values.mean()) if len(self.values) else math.nan


@dataclass
class TTestResult:
    t: float
    df: int
    p_value: float
    significant: bool


def registration_errors(logs, failure_penalty: float = 320.0,
                        strategy: str | None = None) -> ErrorSequence:
    """eps_i = |delta_i - gamma_i| over all records; failed registrations get
    the penalty value and a flag."""
    values = []
    failed = []
    keys = []
    name = strategy
    for log in logs:
        if name is None:
            name = log.strategy
        for rec in log.records:
            if rec.delta is None:
                values.append(float(failure_penalty))
                failed.append(True)
            else:
                values.append(abs(rec.delta - rec.gamma))
                failed.append(False)
            keys.append((log.traversal, rec.location))
    return ErrorSequence(name or "", np.asarray(values, dtype=np.float64),
                         np.asarray(failed, dtype=bool), keys)


def error_cdf(eps: ErrorSequence, thresholds) -> list:
    """(threshold, fraction of errors <= threshold) for each threshold."""
    if len(eps) == 0:
        raise ValueError("cannot compute a CDF over an empty error sequence")
    vals = np.sort(eps.values)
    n = vals.shape[0]
    out = []
    for thr in thresholds:
        c = int(np.searchsorted(vals, float(thr), side="right"))
        out.append((float(thr), c / n))
    return out


def paired_t_test(a: ErrorSequence, b: ErrorSequence,
                  alpha: float = 0.05) -> TTestResult:
    """Two-sided paired Student t-test on aligned error sequences.

    Degenerate zero-variance differences follow the stated convention:
    t = +-inf with p = 0 when the mean difference is nonzero, t = 0 with
    p = 1 when the sequences are identical.
    """
    if len(a) != len(b):
        raise ValueError(f"sequence lengths differ: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least 2 samples")
    if a.keys and b.keys and a.keys != b.keys:
        raise ValueError("sequences are not aligned by frame key")
    d = a.values - b.values
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, df, 1.0, False)
        t = math.inf if mean > 0 else -math.inf
        return TTestResult(t, df, 0.0, 0.0 < alpha)
    t = mean / (sd / math.sqrt(n))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return TTestResult(t, df, p, p < alpha)


def _digest_frame(h, traversal: int, frame) -> None:
    h.update(struct.pack("<qqdd", traversal, frame.location, frame.time,
                         frame.gamma))
    h.update(struct.pack("<q", len(frame.features)))
    for f in frame.features:
        h.update(struct.pack("<dd", f.x, f.y))
        h.update(f.descriptor.words.tobytes())


class _HashingStream:
    """Iterates (traversal, frame) pairs while folding them into a sha256."""

    def __init__(self, pairs):
        self._pairs = pairs
        self.digest = None

    def __iter__(self):
        h = hashlib.sha256()
        for tr, frame in self._pairs:
            _digest_frame(h, tr, frame)
            yield tr, frame
        self.digest = h.hexdigest()


def unique_labels(names) -> list:
    """Disambiguate repeated strategy names: static, static.2, static.3 ..."""
    seen = {}
    labels = []
    for name in names:
        seen[name] = seen.get(name, 0) + 1
        k = seen[name]
        labels.append(name if k == 1 else f"{name}.{k}")
    return labels


@dataclass
class ComparisonReport:
    mode: str
    labels: list
    sequences: dict  # label -> ErrorSequence
    mean_errors: dict
    failure_counts: dict
    thresholds: tuple
    cdf: dict  # label -> probability list aligned with thresholds
    ttests: dict  # label -> {other label -> TTestResult}
    ranking: list  # labels sorted by mean error, best first
    alpha: float
    stream_hashes: dict
    dropped_frames: int = 0
    n_frames: int = 0


def _align(sequences) -> tuple:
    """Restrict all sequences to the frame keys present in every one of them."""
    key_sets = [set(s.keys) for s in sequences]
    common = set.intersection(*key_sets) if key_sets else set()
    total = sum(len(s) for s in sequences)
    if all(len(s) == len(common) for s in sequences):
        return list(sequences), 0
    aligned = []
    for s in sequences:
        sel = [i for i, k in enumerate(s.keys) if k in common]
        aligned.append(ErrorSequence(s.strategy, s.values[sel], s.failed[sel],
                                     [s.keys[i] for i in sel]))
    dropped = total - sum(len(s) for s in aligned)
    return aligned, dropped


def _normalize_schedule(schedule) -> tuple:
    try:
        traversals, interval_s = schedule
    except (TypeError, ValueError):
        raise ConfigError("schedule must be (traversal count, interval seconds)")
    traversals = int(traversals)
    if traversals < 1:
        raise ConfigError("schedule needs at least one traversal")
    return traversals, float(interval_s)


def _thread_count(threads) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("LONGNAV_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"LONGNAV_THREADS must be an integer, got {env!r}")
    return 1


def compare_strategies(source, strategies, schedule=None, *, mode: str = "open",
                       run_seed: int = 0, offset_fn=None,
                       params: RegistrationParams | None = None,
                       feature_cap: int = 500,
                       failure_penalty: float | None = None,
                       thresholds=DEFAULT_THRESHOLDS, alpha: float = 0.05,
                       initial_offset_m: float = 0.0, teach_time: float = 0.0,
                       threads: int | None = None) -> ComparisonReport:
    """Run every strategy over the same evidence and assemble the report.

    source: a World/WorldConfig (frames are generated), a dataset path, or an
    in-memory list of (traversal, frame) pairs. mode "open" replays a shared
    frame stream; mode "closed" gives each strategy a fresh world with the
    same seed and lets its steering feed back.
    """
    if not strategies:
        raise ConfigError("no strategies to compare")
    if mode not in ("open", "closed"):
        raise ConfigError(f"mode must be open|closed, got {mode!r}")
    labels = unique_labels([cfg.kind for cfg in strategies])

    world_cfg = None
    if isinstance(source, World):
        world_cfg = source.config
    elif isinstance(source, WorldConfig):
        world_cfg = source

    if failure_penalty is None:
        width = world_cfg.image_width if world_cfg else 640
        failure_penalty = width / 2.0

    if world_cfg is not None:
        traversals, interval_s = _normalize_schedule(schedule)

        def make_stream():
            w = World(world_cfg)
            return generate_frames(w, traversals, interval_s, run_seed,
                                   offset_fn=offset_fn, teach_time=teach_time)
    elif mode == "closed":
        raise ConfigError("closed-loop comparison needs a world source")
    elif isinstance(source, (str, os.PathLike)):
        from .io import read_dataset

        def make_stream():
            return read_dataset(source)
    else:
        frame_list = source if isinstance(source, (list, tuple)) else list(source)
        if not frame_list:
            raise DatasetError("empty frame source")

        def make_stream():
            return iter(frame_list)

    image_width = world_cfg.image_width if world_cfg else 640
    reg_params = params or RegistrationParams(image_width=image_width)

    def run_one(i: int):
        cfg = strategies[i]
        if mode == "closed":
            world = World(world_cfg)
            path = teach(world, teach_time, feature_cap=feature_cap)
            logs = run_closed_loop(world, path, cfg, traversals, interval_s,
                                   run_seed=run_seed,
                                   initial_offset_m=initial_offset_m,
                                   params=reg_params)
            return logs, None
        stream = _HashingStream(make_stream())
        _, logs = replay_frames(stream, cfg, feature_cap=feature_cap,
                                image_width=image_width, params=reg_params)
        return logs, stream.digest

    n_workers = min(_thread_count(threads), len(strategies))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run_one, range(len(strategies))))
    else:
        results = [run_one(i) for i in range(len(strategies))]

    stream_hashes = {lab: digest for lab, (_, digest) in zip(labels, results)}
    digests = {d for d in stream_hashes.values() if d is not None}
    if len(digests) > 1:
        raise RuntimeError("strategies consumed different frame streams: "
                           f"{sorted(digests)}")

    sequences = [registration_errors(logs, failure_penalty, lab)
                 for lab, (logs, _) in zip(labels, results)]
    return build_report(sequences, thresholds=thresholds, alpha=alpha,
                        mode=mode, stream_hashes=stream_hashes)


def build_report(sequences, *, thresholds=DEFAULT_THRESHOLDS,
                 alpha: float = 0.05, mode: str = "open",
                 stream_hashes: dict | None = None) -> ComparisonReport:
    """Assemble a ComparisonReport from labeled error sequences, aligning them
    on common frame keys first."""
    if not sequences:
        raise ConfigError("no error sequences to report on")
    labels = [s.strategy for s in sequences]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"duplicate sequence labels: {labels}")
    sequences, dropped = _align(sequences)
    seq_by_label = dict(zip(labels, sequences))

    mean_errors = {lab: s.mean() for lab, s in seq_by_label.items()}
    failure_counts = {lab: int(s.failed.sum()) for lab, s in seq_by_label.items()}
    cdf = {lab: [p for _, p in error_cdf(s, thresholds)]
           for lab, s in seq_by_label.items()}
    ttests = {}
    for la in labels:
        row = {}
        for lb in labels:
            if la != lb:
                row[lb] = paired_t_test(seq_by_label[la], seq_by_label[lb], alpha)
        ttests[la] = row
    ranking = sorted(labels, key=lambda lab: mean_errors[lab])
    n_frames = len(sequences[0]) if sequences else 0
    return ComparisonReport(mode, labels, seq_by_label, mean_errors,
                            failure_counts, tuple(float(t) for t in thresholds),
                            cdf, ttests, ranking, alpha, stream_hashes or {},
                            dropped, n_frames)


def _json_float(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def write_report(report: ComparisonReport, out_dir) -> tuple:
    """Write summary.json and cdf.csv; returns their paths."""
    import json
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "mode": report.mode,
        "ranking": report.ranking,
        "mean_error_px": report.mean_errors,
        "failure_count": report.failure_counts,
        "n_frames": report.n_frames,
        "dropped_frames": report.dropped_frames,
        "alpha": report.alpha,
        "stream_hash": report.stream_hashes,
        "t_tests": {
            la: {lb: {"t": _json_float(r.t), "df": r.df, "p_value": r.p_value,
                      "significant": r.significant}
                 for lb, r in row.items()}
            for la, row in report.ttests.items()
        },
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    cdf_path = out / "cdf.csv"
    with cdf_path.open("w") as fh:
        fh.write("threshold_px," + ",".join(report.labels) + "\n")
        for i, thr in enumerate(report.thresholds):
            row = [f"{thr:g}"] + [f"{report.cdf[lab][i]:.6f}" for lab in report.labels]
            fh.write(",".join(row) + "\n")
    return summary_path, cdf_path
