"""Literal brute-force oracle for the two fusion recipes.

Implemented over plain dict/tuple lookup tables, independent of the package's
dataclasses and control flow, following the two documented steps of each
recipe word by word:

multi-round detection for frame m:
  1. extend the range to [m-alpha, m+alpha] (clipped) and detect everywhere;
  2. per target class, take the sighting with the highest detector confidence
     strictly above the threshold (earliest frame on ties, detector output
     order within a frame), initialize tracking there, read the tracked box
     and confidence at frame m.

name-initialized tracking over [start, end]:
  1. detect the named class across the range, scanning forward;
  2. at the first frame whose best sighting exceeds the threshold, initialize
     tracking and keep the per-frame boxes/confidences over the whole range.

Tables:
  det_table:  {frame_id: [(name, (x0, y0, x1, y1), confidence), ...]}
  trk_table:  {(init_frame, frame_id): ((x0, y0, x1, y1), confidence)}
              missing pairs mean the track is lost on that frame
"""

from __future__ import annotations


def oracle_detect_multiround(
    m: int,
    alpha: int,
    thr: float,
    det_table: dict,
    trk_table: dict,
    total_frames: int,
) -> list[tuple[int, str, tuple[int, int, int, int], float]]:
    lo = max(0, m - alpha)
    hi = min(total_frames - 1, m + alpha)
    best: dict[str, tuple[float, int, tuple]] = {}
    for f in range(lo, hi + 1):
        for name, bbox, conf in det_table.get(f, ()):
            if conf > thr:
                seen = best.get(name)
                if seen is None or conf > seen[0]:
                    best[name] = (conf, f, bbox)
    results = []
    for name in sorted(best):
        _, init_frame, _init_bbox = best[name]
        obs = trk_table.get((init_frame, m))
        if obs is None:
            continue
        bbox, conf = obs
        results.append((len(results), name, tuple(bbox), conf))
    return results


def oracle_track_by_name(
    name: str,
    start: int,
    end: int,
    thr: float,
    det_table: dict,
    trk_table: dict,
) -> list[tuple[int, str, tuple[int, int, int, int], float]]:
    init = None
    for f in range(start, end + 1):
        best = None
        for det_name, bbox, conf in det_table.get(f, ()):
            if det_name != name or conf <= thr:
                continue
            if best is None or conf > best[0]:
                best = (conf, bbox)
        if best is not None:
            init = (f, best[1])
            break
    if init is None:
        return []
    points = []
    for f in range(start, end + 1):
        obs = trk_table.get((init[0], f))
        if obs is None:
            continue
        bbox, conf = obs
        points.append((f, name, tuple(bbox), conf))
    return points


def random_tables(rng, total_frames: int, classes=("phone", "cup", "person", "book")):
    """Random detector/tracker tables with quantized confidences so
    tie-breaking rules actually fire."""
    det_table: dict[int, list] = {}
    for f in range(total_frames):
        dets = []
        for _ in range(rng.randint(0, 3)):
            name = rng.choice(classes)
            x0, y0 = rng.randint(0, 50), rng.randint(0, 50)
            bbox = (x0, y0, x0 + rng.randint(1, 30), y0 + rng.randint(1, 30))
            conf = rng.randint(1, 10) / 10.0
            dets.append((name, bbox, conf))
        if dets:
            det_table[f] = dets
    trk_table: dict[tuple[int, int], tuple] = {}
    for init in range(total_frames):
        for f in range(total_frames):
            if rng.random() < 0.15:
                continue  # lost on this frame
            x0, y0 = rng.randint(0, 50), rng.randint(0, 50)
            bbox = (x0, y0, x0 + rng.randint(1, 30), y0 + rng.randint(1, 30))
            trk_table[(init, f)] = (bbox, rng.randint(0, 10) / 10.0)
    return det_table, trk_table
