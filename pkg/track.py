# track.py
"""
Waypoint tracks: centerline geometry, projection, and lap counting.

Track file format: one point per line, ``x_m, y_m, half_width_m``;
``#`` starts a comment; blank lines are ignored. A track whose first and
last points lie within 1 m of each other is closed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from constants import CLOSED_TRACK_TOL, LAP_HYSTERESIS, PROJECTION_NEIGHBOURS, TRACKS_DIR
from errors import TrackFormatError
from io_utils import FileIO


@dataclass(frozen=True, eq=False)
class Track:
    centerline: np.ndarray   # (N, 2)
    half_width: np.ndarray   # (N,)
    arclength: np.ndarray    # cumulative, N+1 entries when closed
    closed: bool

    def __post_init__(self):
        n = self.centerline.shape[0]
        idx = np.arange(n)
        nxt = (idx + 1) % n if self.closed else idx[1:]
        start = self.centerline if self.closed else self.centerline[:-1]
        cur = idx if self.closed else idx[:-1]
        vec = self.centerline[nxt] - start
        object.__setattr__(self, "_seg_start", start)
        object.__setattr__(self, "_seg_vec", vec)
        object.__setattr__(self, "_seg_len", np.hypot(vec[:, 0], vec[:, 1]))
        object.__setattr__(self, "_seg_hw", np.stack([self.half_width[cur], self.half_width[nxt]], axis=1))
        # segments touching each vertex: (following, preceding)
        n_seg = vec.shape[0]
        touching = np.stack([np.minimum(idx, n_seg - 1), (idx - 1) % n if self.closed else np.maximum(idx - 1, 0)],
                            axis=1)
        object.__setattr__(self, "_vertex_segs", touching)
        object.__setattr__(self, "_tree", cKDTree(self.centerline))
        object.__setattr__(self, "_reach", 0.5 * float(self._seg_len.max()))

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    def _nearest_segment(self, p, cand):
        """Index of the nearest of the candidate segments (K, C); ties go to the lowest index."""
        rel = p[:, None, :] - self._seg_start[cand]
        vec = self._seg_vec[cand]
        t = np.clip(np.sum(rel * vec, axis=2) / self._seg_len[cand] ** 2, 0.0, 1.0)
        diff = rel - t[:, :, None] * vec
        dist2 = np.sum(diff * diff, axis=2)
        best = dist2.min(axis=1, keepdims=True)
        return np.where(dist2 == best, cand, self._seg_len.size).min(axis=1)

    def project(self, points):
        """
        Nearest-segment projection of (K, 2) points.
        Returns (d, s, inside): signed lateral offset (left of travel positive),
        arclength of the foot point, and |d| <= half width.

        Candidates are the segments touching the nearest centerline vertices.
        The nearest segment has an end within (nearest vertex distance + half
        the longest segment) of the point, so rows whose farthest queried
        vertex lies beyond that radius are exact; the rest are searched in full.
        """
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        n_vert, n_seg = self.centerline.shape[0], self._seg_len.size
        k = min(PROJECTION_NEIGHBOURS, n_vert)
        everything = np.broadcast_to(np.arange(n_seg), (p.shape[0], n_seg))
        if k == n_vert or p.shape[0] == 0:
            i = self._nearest_segment(p, everything)
        else:
            dist, vert = self._tree.query(p, k=k)
            cand = self._vertex_segs[vert].reshape(p.shape[0], -1)
            i = self._nearest_segment(p, cand)
            unsure = dist[:, -1] <= dist[:, 0] + self._reach
            if unsure.any():
                i[unsure] = self._nearest_segment(p[unsure], everything[unsure])
        reli = p - self._seg_start[i]
        veci = self._seg_vec[i]
        ti = np.clip(np.sum(reli * veci, axis=1) / self._seg_len[i] ** 2, 0.0, 1.0)
        foot = reli - ti[:, None] * veci
        cross = veci[:, 0] * reli[:, 1] - veci[:, 1] * reli[:, 0]
        d = np.where(cross >= 0.0, 1.0, -1.0) * np.sqrt(np.sum(foot * foot, axis=1))
        s = self.arclength[i] + ti * self._seg_len[i]
        hw = self._seg_hw[i, 0] + ti * (self._seg_hw[i, 1] - self._seg_hw[i, 0])
        return d, s, np.abs(d) <= hw

    def pose_at(self, s: float):
        """Centerline point and heading at arclength s (wrapped on closed tracks)."""
        if self.closed:
            s = s % self.length
        i = int(np.clip(np.searchsorted(self.arclength, s, side="right") - 1, 0, len(self._seg_len) - 1))
        t = (s - self.arclength[i]) / self._seg_len[i]
        pos = self._seg_start[i] + t * self._seg_vec[i]
        return pos, float(np.arctan2(self._seg_vec[i, 1], self._seg_vec[i, 0]))


def track_project(track: Track, pos):
    """Single-point projection -> (d, s, inside)."""
    d, s, inside = track.project(np.asarray(pos, dtype=np.float64).reshape(1, 2))
    return float(d[0]), float(s[0]), bool(inside[0])


def resolve_track_path(spec) -> Path:
    """Bundled track name or filesystem path."""
    p = Path(spec)
    if not p.exists() and (TRACKS_DIR / p.name).exists():
        return TRACKS_DIR / p.name
    return p


def parse_track_text(text: str, path: str = "") -> np.ndarray:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise TrackFormatError(f"expected 'x_m, y_m, half_width_m', got {raw.strip()!r}", path, lineno)
        try:
            x, y, hw = (float(p) for p in parts)
        except ValueError:
            raise TrackFormatError(f"non-numeric field in {raw.strip()!r}", path, lineno) from None
        if not np.isfinite([x, y, hw]).all() or hw <= 0.0:
            raise TrackFormatError(f"bad values in {raw.strip()!r}", path, lineno)
        if rows and np.hypot(x - rows[-1][0], y - rows[-1][1]) <= 1e-9:
            raise TrackFormatError("duplicate consecutive point", path, lineno)
        rows.append((x, y, hw))
    if len(rows) < 3:
        raise TrackFormatError(f"need at least 3 points, found {len(rows)}", path)
    return np.array(rows)


def build_track(points: np.ndarray, require_closed: bool = False, path: str = "") -> Track:
    xy, hw = points[:, :2], points[:, 2]
    gap = float(np.hypot(*(xy[-1] - xy[0])))
    closed = gap <= CLOSED_TRACK_TOL
    if require_closed and not closed:
        raise TrackFormatError(f"track is open (ends {gap:.2f} m apart) but a closed track is required", path)
    if closed and gap <= 1e-9:
        xy, hw = xy[:-1], hw[:-1]
    if closed and len(xy) < 3:
        raise TrackFormatError("closed track needs at least 3 distinct points", path)
    ring = np.vstack([xy, xy[:1]]) if closed else xy
    seg = np.hypot(*np.diff(ring, axis=0).T)
    return Track(xy, hw, np.concatenate([[0.0], np.cumsum(seg)]), closed)


@lru_cache(maxsize=16)
def _load(path: str, require_closed: bool) -> Track:
    text = FileIO.read_text(path)
    return build_track(parse_track_text(text, path), require_closed, path)


def make_track(spec, require_closed: bool = False) -> Track:
    """Load and validate a track definition file (cached per path)."""
    return _load(str(resolve_track_path(spec)), require_closed)


class LapCounter:
    """
    Counts forward crossings of s = 0. A crossing only counts when armed;
    arming needs the car to be at least ``hysteresis`` metres away from the line.
    A car starting behind the line (second half of the lap) starts at -1 laps.
    """

    def __init__(self, length: float, hysteresis: float = LAP_HYSTERESIS, start_s: float = 0.0):
        self.length = length
        self.hysteresis = hysteresis
        self.laps = -1 if start_s % length > 0.5 * length else 0
        self.armed = False
        self.last_s: float | None = None

    def update(self, s: float) -> int:
        h = self.hysteresis
        if self.last_s is not None and self.armed and self.last_s > self.length - h and s < h:
            self.laps += 1
            self.armed = False
        if h <= s <= self.length - h:
            self.armed = True
        self.last_s = s
        return self.laps
