"""File formats: frame datasets (JSONL), map snapshots (JSON), logs (JSONL).

Dataset lines look like
{"traversal":0,"location":3,"time_s":0.0,"gamma_px":0.0,
 "features":[{"x":12.5,"y":80.0,"d":"<hex>"}]}
with the teach pass stored as traversal 0. Descriptors are lowercase hex,
width/4 characters. Positions round-trip at full float precision.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DatasetError
from .features import Descriptor, Feature, LocalMap, PathMap
from .fremen import FremenModel
from .simulator import Frame, LocationRecord, TraversalLog


def _descriptor_from_hex(s: str, width: int) -> Descriptor:
    if len(s) % 2 == 0:
        raw = bytes.fromhex(s)[::-1]
        nw = (width + 63) // 64
        buf = raw.ljust(nw * 8, b"\x00")
        words = np.frombuffer(buf, dtype="<u8").astype(np.uint64, copy=False)
        return Descriptor._wrap(words, width)
    return Descriptor.from_hex(s, width)


def _feature_record(f: Feature) -> dict:
    return {"x": f.x, "y": f.y, "d": f.descriptor.to_hex()}


def write_dataset(pairs, path) -> int:
    """Write (traversal, Frame) pairs as JSONL; returns the line count."""
    n = 0
    with Path(path).open("w") as fh:
        for traversal, frame in pairs:
            rec = {
                "traversal": int(traversal),
                "location": int(frame.location),
                "time_s": float(frame.time),
                "gamma_px": float(frame.gamma),
                "features": [_feature_record(f) for f in frame.features],
            }
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
            n += 1
    return n


def read_dataset(path):
    """Yield (traversal, Frame) pairs from a dataset file."""
    p = Path(path)
    with p.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                feats = []
                for fr in rec["features"]:
                    s = fr["d"]
                    feats.append(Feature(float(fr["x"]), float(fr["y"]),
                                         _descriptor_from_hex(s, 4 * len(s))))
                frame = Frame(int(rec["location"]), float(rec["time_s"]),
                              feats, float(rec["gamma_px"]))
                yield int(rec["traversal"]), frame
            except (KeyError, ValueError, TypeError) as e:
                raise DatasetError(f"{p}:{lineno}: bad dataset record: {e}") from e


def _feature_snapshot(f: Feature) -> dict:
    return {
        "x": f.x, "y": f.y, "d": f.descriptor.to_hex(),
        "score": f.score, "inserted_at": f.inserted_at,
        "temporal": f.temporal.to_dict() if f.temporal is not None else None,
    }


def _feature_from_snapshot(rec: dict, width: int) -> Feature:
    temporal = rec.get("temporal")
    return Feature(float(rec["x"]), float(rec["y"]),
                   _descriptor_from_hex(rec["d"], width),
                   score=float(rec.get("score", 0.0)),
                   temporal=FremenModel.from_dict(temporal) if temporal else None,
                   inserted_at=int(rec.get("inserted_at", 0)))


def write_map_snapshot(path_map: PathMap, path) -> None:
    doc = {
        "image_width": path_map.image_width,
        "descriptor_width": path_map.descriptor_width,
        "taught_at": path_map.taught_at,
        "local_maps": [
            {
                "index": lm.index,
                "odometry_distance": lm.odometry_distance,
                "features": [_feature_snapshot(f) for f in lm.features],
                "alternatives": [
                    {"created_at": alt.created_at,
                     "features": [_feature_snapshot(f) for f in alt.features]}
                    for alt in lm.alternatives
                ],
            }
            for lm in path_map.local_maps
        ],
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def read_map_snapshot(path) -> PathMap:
    from .features import MapAlternative

    p = Path(path)
    try:
        doc = json.loads(p.read_text())
        width = int(doc["descriptor_width"])
        maps = []
        for lm in doc["local_maps"]:
            feats = [_feature_from_snapshot(r, width) for r in lm["features"]]
            alts = [MapAlternative([_feature_from_snapshot(r, width)
                                    for r in a["features"]],
                                   int(a["created_at"]))
                    for a in lm.get("alternatives", [])]
            maps.append(LocalMap(int(lm["index"]), float(lm["odometry_distance"]),
                                 feats, alts))
        return PathMap(maps, image_width=int(doc["image_width"]),
                       descriptor_width=width,
                       taught_at=float(doc.get("taught_at", 0.0)))
    except (KeyError, ValueError, TypeError) as e:
        raise DatasetError(f"{p}: bad map snapshot: {e}") from e


def write_logs(logs, path) -> int:
    """One JSONL line per location record; returns the line count."""
    n = 0
    with Path(path).open("w") as fh:
        for log in logs:
            for rec in log.records:
                row = {
                    "traversal": log.traversal,
                    "strategy": log.strategy,
                    "time_s": log.time,
                    "location": rec.location,
                    "delta_px": rec.delta,
                    "gamma_px": rec.gamma,
                    "n_correct": rec.n_correct,
                    "n_incorrect": rec.n_incorrect,
                    "n_not_matched": rec.n_not_matched,
                    "map_size": rec.map_size,
                    "n_alternatives": rec.n_alternatives,
                    "best_alternative": rec.best_alternative,
                    "offset_m": rec.offset_m,
                }
                fh.write(json.dumps(row, separators=(",", ":")) + "\n")
                n += 1
    return n


def read_logs(path) -> list:
    """Rebuild TraversalLogs from a log file written by write_logs."""
    p = Path(path)
    logs = []
    current = None
    try:
        with p.open() as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                rec = LocationRecord(
                    location=int(row["location"]),
                    delta=row["delta_px"],
                    gamma=float(row["gamma_px"]),
                    n_correct=int(row["n_correct"]),
                    n_incorrect=int(row["n_incorrect"]),
                    n_not_matched=int(row["n_not_matched"]),
                    map_size=int(row["map_size"]),
                    n_alternatives=int(row.get("n_alternatives", 1)),
                    best_alternative=int(row.get("best_alternative", 0)),
                    offset_m=row.get("offset_m"))
                tr = int(row["traversal"])
                if current is None or current.traversal != tr:
                    current = TraversalLog(tr, row["strategy"],
                                           float(row["time_s"]), [])
                    logs.append(current)
                current.records.append(rec)
    except (KeyError, ValueError, TypeError) as e:
        raise DatasetError(f"{p}: bad log record: {e}") from e
    return logs
