"""OD flow data model: locations, flows, marginals, and k-NN neighborhoods.

A :class:`FlowDataset` is immutable after construction and safe to share
across threads.  k-NN orderings are computed lazily per center (backed by a
shared KD-tree) and cached, so datasets that differ only in their flow table
(e.g. permutations of the same data) can share one spatial index.
"""

from __future__ import annotations

import csv
import io
import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

EARTH_RADIUS_M = 6371008.8  # IUGG mean Earth radius


class IngestionError(ValueError):
    """Base class for all dataset ingestion failures."""


class DuplicateLocationError(IngestionError):
    pass


class UnknownLocationError(IngestionError):
    pass


class SelfFlowError(IngestionError):
    pass


class NonPositiveVolumeError(IngestionError):
    pass


class EmptyFlowTableError(IngestionError):
    pass


@dataclass(frozen=True)
class Location:
    id: str
    x: float
    y: float
    population: float | None = None


@dataclass(frozen=True)
class Flow:
    origin_id: str
    dest_id: str
    volume: int


class Neighborhood:
    """A circular k-NN region: the center plus its (k-1) nearest locations.

    ``members`` is ordered (center first, then ascending distance with
    lexicographic-id tie break) and forms a prefix of the center's k-NN
    ordering.
    """

    __slots__ = ("center_id", "k", "members", "member_indices", "radius",
                 "outflow_total", "inflow_total", "_member_set")

    def __init__(self, center_id, k, members, member_indices, radius,
                 outflow_total, inflow_total):
        self.center_id = center_id
        self.k = k
        self.members = tuple(members)
        self.member_indices = member_indices
        self.radius = radius
        self.outflow_total = int(outflow_total)
        self.inflow_total = int(inflow_total)
        self._member_set = None

    @property
    def member_set(self) -> frozenset:
        if self._member_set is None:
            self._member_set = frozenset(self.members)
        return self._member_set

    def __repr__(self):
        return (f"Neighborhood(center={self.center_id!r}, k={self.k}, "
                f"radius={self.radius:.6g})")

    def __eq__(self, other):
        if not isinstance(other, Neighborhood):
            return NotImplemented
        return self.center_id == other.center_id and self.members == other.members

    def __hash__(self):
        return hash((self.center_id, self.members))


class _SpatialIndex:
    """Lazy, thread-safe k-NN ordering provider shared between datasets.

    Cache fills are idempotent: concurrent writers compute identical rows, so
    a lost race only wastes work.
    """

    def __init__(self, xy: np.ndarray, lexrank: np.ndarray, spherical: bool):
        self.xy = xy
        self.lexrank = lexrank
        self.spherical = spherical
        self.m = xy.shape[0]
        if spherical:
            lon = np.radians(xy[:, 0])
            lat = np.radians(xy[:, 1])
            self._pts = np.column_stack([
                np.cos(lat) * np.cos(lon),
                np.cos(lat) * np.sin(lon),
                np.sin(lat),
            ])
        else:
            self._pts = xy
        self._tree = None
        self._tree_lock = threading.Lock()
        # center index -> (order int32, dist float64); tie-safe prefixes
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def _get_tree(self) -> cKDTree:
        if self._tree is None:
            with self._tree_lock:
                if self._tree is None:
                    self._tree = cKDTree(self._pts)
        return self._tree

    def _chord_to_distance(self, chord: np.ndarray) -> np.ndarray:
        if not self.spherical:
            return chord
        half = np.clip(chord / 2.0, 0.0, 1.0)
        return 2.0 * EARTH_RADIUS_M * np.arcsin(half)

    def _query_rows(self, centers: np.ndarray, kq: int):
        """Query kq nearest (excluding self); return tie-safe prefixes.

        A row is tie-safe up to the last entry whose distance is strictly
        below the final returned distance, so no equally-distant point can
        be missing from the prefix.
        """
        tree = self._get_tree()
        kq = min(kq, self.m)
        dist, idx = tree.query(self._pts[centers], k=kq, workers=-1)
        if kq == 1:
            dist = dist[:, None]
            idx = idx[:, None]
        rows = []
        for r, c in enumerate(centers):
            d = dist[r]
            ii = idx[r]
            keep = ii != c
            d = d[keep]
            ii = ii[keep]
            order = np.lexsort((self.lexrank[ii], d))
            d = d[order]
            ii = ii[order]
            if len(ii) < self.m - 1 and len(d) > 0:
                usable = int(np.searchsorted(d, d[-1], side="left"))
                d = d[:usable]
                ii = ii[:usable]
            rows.append((ii.astype(np.int32), self._chord_to_distance(d)))
        return rows

    def prefix(self, center: int, length: int):
        """Return (order, dist) covering at least ``length`` neighbors
        (or all m-1 when fewer exist)."""
        length = min(length, self.m - 1)
        cached = self._cache.get(center)
        if cached is not None and len(cached[0]) >= length:
            return cached
        kq = max(2 * length + 2, 16)
        while True:
            (row,) = self._query_rows(np.array([center]), kq)
            if len(row[0]) >= length or kq >= self.m:
                break
            kq = min(kq * 2, self.m)
        self._cache[center] = row
        return row

    def prefixes(self, centers: np.ndarray, length: int):
        """Bulk version of :meth:`prefix`; returns a list of rows."""
        length = min(length, self.m - 1)
        missing = [c for c in centers
                   if c not in self._cache or len(self._cache[c][0]) < length]
        if missing:
            todo = np.array(sorted(set(missing)), dtype=np.int64)
            kq = max(min(2 * length + 2, self.m), 16)
            while len(todo):
                rows = self._query_rows(todo, kq)
                still = []
                for c, row in zip(todo, rows):
                    if len(row[0]) >= length or kq >= self.m:
                        self._cache[int(c)] = row
                    else:
                        still.append(c)
                todo = np.array(still, dtype=np.int64)
                kq = min(kq * 2, self.m)
        return [self._cache[int(c)] for c in centers]

    def full_order(self, center: int):
        return self.prefix(center, self.m - 1)

    def distance(self, i: int, j: int) -> float:
        if self.spherical:
            chord = float(np.linalg.norm(self._pts[i] - self._pts[j]))
            return float(self._chord_to_distance(np.array(chord)))
        return float(np.hypot(*(self.xy[i] - self.xy[j])))


class FlowDataset:
    """Immutable OD dataset with precomputed marginals and adjacency."""

    def __init__(self, locations: Sequence[Location],
                 origin_idx: np.ndarray, dest_idx: np.ndarray,
                 volumes: np.ndarray, geometry_mode: str = "planar",
                 _index: _SpatialIndex | None = None,
                 _validate: bool = True):
        if geometry_mode not in ("planar", "spherical"):
            raise ValueError(f"unknown geometry_mode {geometry_mode!r}")
        self.geometry_mode = geometry_mode
        self.locations = tuple(locations)
        self._id_to_index = {}
        for i, loc in enumerate(self.locations):
            if _validate:
                if loc.id in self._id_to_index:
                    raise DuplicateLocationError(f"duplicate location id {loc.id!r}")
                if not (math.isfinite(loc.x) and math.isfinite(loc.y)):
                    raise IngestionError(f"non-finite coordinates for {loc.id!r}")
            self._id_to_index[loc.id] = i

        origin_idx = np.asarray(origin_idx, dtype=np.int32)
        dest_idx = np.asarray(dest_idx, dtype=np.int32)
        volumes = np.asarray(volumes, dtype=np.int64)
        if _validate:
            if origin_idx.size == 0:
                raise EmptyFlowTableError("flow table is empty")
            if np.any(volumes < 1):
                raise NonPositiveVolumeError("flow volumes must be >= 1")
            if np.any(origin_idx == dest_idx):
                n_self = int(np.sum(origin_idx == dest_idx))
                raise SelfFlowError(f"{n_self} self-flow record(s) present; "
                                    "remove flows with origin == destination")
        # aggregate duplicate (origin, dest) pairs and canonicalize order
        m = len(self.locations)
        key = origin_idx.astype(np.int64) * m + dest_idx
        ukey, inv = np.unique(key, return_inverse=True)
        agg = np.zeros(len(ukey), dtype=np.int64)
        np.add.at(agg, inv, volumes)
        self.origin_idx = (ukey // m).astype(np.int32)
        self.dest_idx = (ukey % m).astype(np.int32)
        self.volumes = agg
        self.origin_idx.setflags(write=False)
        self.dest_idx.setflags(write=False)
        self.volumes.setflags(write=False)

        self.F = int(self.volumes.sum())
        self.outflow = np.zeros(m, dtype=np.int64)
        self.inflow = np.zeros(m, dtype=np.int64)
        np.add.at(self.outflow, self.origin_idx, self.volumes)
        np.add.at(self.inflow, self.dest_idx, self.volumes)
        self.outflow.setflags(write=False)
        self.inflow.setflags(write=False)

        # CSR adjacency by origin (flows already sorted by origin then dest)
        self.out_ptr = np.zeros(m + 1, dtype=np.int64)
        np.add.at(self.out_ptr, self.origin_idx + 1, 1)
        np.cumsum(self.out_ptr, out=self.out_ptr)
        self.out_ptr.setflags(write=False)
        # CSR by destination
        dorder = np.lexsort((self.origin_idx, self.dest_idx))
        self._in_order = dorder
        self.in_ptr = np.zeros(m + 1, dtype=np.int64)
        np.add.at(self.in_ptr, self.dest_idx + 1, 1)
        np.cumsum(self.in_ptr, out=self.in_ptr)
        self.in_ptr.setflags(write=False)

        if _index is None:
            xy = np.array([[loc.x, loc.y] for loc in self.locations], dtype=np.float64)
            lexrank = np.empty(m, dtype=np.int32)
            lexrank[np.argsort([loc.id for loc in self.locations])] = np.arange(m, dtype=np.int32)
            _index = _SpatialIndex(xy, lexrank, geometry_mode == "spherical")
        self._index = _index
        self._flows_cache = None
        # diagnostics slot filled by significance.permute
        self.permutation_skips: int | None = None

    # -- basic accessors ---------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.locations)

    @property
    def n(self) -> int:
        return len(self.volumes)

    @property
    def xy(self) -> np.ndarray:
        return self._index.xy

    @property
    def flows(self) -> tuple[Flow, ...]:
        if self._flows_cache is None:
            ids = [loc.id for loc in self.locations]
            self._flows_cache = tuple(
                Flow(ids[o], ids[d], int(v))
                for o, d, v in zip(self.origin_idx, self.dest_idx, self.volumes))
        return self._flows_cache

    def index(self, location_id: str) -> int:
        try:
            return self._id_to_index[location_id]
        except KeyError:
            raise UnknownLocationError(f"unknown location id {location_id!r}") from None

    def location(self, location_id: str) -> Location:
        return self.locations[self.index(location_id)]

    def distance(self, id_a: str, id_b: str) -> float:
        return self._index.distance(self.index(id_a), self.index(id_b))

    def flows_by_origin(self, location_id: str) -> tuple[Flow, ...]:
        i = self.index(location_id)
        lo, hi = self.out_ptr[i], self.out_ptr[i + 1]
        return self.flows[lo:hi]

    def flows_by_dest(self, location_id: str) -> tuple[Flow, ...]:
        i = self.index(location_id)
        rows = self._in_order[self.in_ptr[i]:self.in_ptr[i + 1]]
        flows = self.flows
        return tuple(flows[r] for r in rows)

    def knn_order(self, center_id: str) -> tuple[str, ...]:
        """All other locations sorted by ascending distance from the center,
        ties broken by lexicographically smaller id."""
        order, _ = self._index.full_order(self.index(center_id))
        return tuple(self.locations[i].id for i in order)

    # -- derived structures ------------------------------------------------

    def neighborhood(self, center_id: str, k: int) -> Neighborhood:
        c = self.index(center_id)
        if not (1 <= k <= self.m):
            raise ValueError(f"k={k} out of range 1..{self.m}")
        order, dist = self._index.prefix(c, k - 1)
        idx = np.concatenate([[c], order[:k - 1]]).astype(np.int32)
        radius = float(dist[k - 2]) if k > 1 else 0.0
        members = [self.locations[i].id for i in idx]
        return Neighborhood(center_id, k, members, idx, radius,
                            self.outflow[idx].sum(), self.inflow[idx].sum())

    def flow_between(self, origin: Neighborhood, dest: Neighborhood) -> int:
        """Total observed flow from the origin member set into the dest
        member set."""
        dset = set(int(i) for i in dest.member_indices)
        total = 0
        for o in origin.member_indices:
            lo, hi = self.out_ptr[o], self.out_ptr[o + 1]
            for e in range(lo, hi):
                if int(self.dest_idx[e]) in dset:
                    total += int(self.volumes[e])
        return total

    def replace_flows(self, origin_idx, dest_idx, volumes) -> "FlowDataset":
        """New dataset over the same locations (shares the spatial index)."""
        return FlowDataset(self.locations, origin_idx, dest_idx, volumes,
                           geometry_mode=self.geometry_mode,
                           _index=self._index, _validate=False)

    # -- export ------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "geometry_mode": self.geometry_mode,
            "total_flow": self.F,
            "locations": [
                {"id": loc.id, "x": loc.x, "y": loc.y,
                 **({"population": loc.population} if loc.population is not None else {}),
                 "outflow": int(self.outflow[i]), "inflow": int(self.inflow[i])}
                for i, loc in enumerate(self.locations)],
            "flows": [
                {"origin": self.locations[o].id, "dest": self.locations[d].id,
                 "volume": int(v)}
                for o, d, v in zip(self.origin_idx, self.dest_idx, self.volumes)],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


# -- module-level operation forms ------------------------------------------

def neighborhood(dataset: FlowDataset, center_id: str, k: int) -> Neighborhood:
    return dataset.neighborhood(center_id, k)


def flow_between(dataset: FlowDataset, origin: Neighborhood,
                 dest: Neighborhood) -> int:
    return dataset.flow_between(origin, dest)


# -- ingestion ---------------------------------------------------------------

def _open_text(source):
    if isinstance(source, (str, Path)) and ("\n" not in str(source)) and Path(source).exists():
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def load_dataset(locations_source, flows_source,
                 geometry_mode: str = "planar") -> FlowDataset:
    """Build a FlowDataset from the locations/flows CSV schemas.

    Locations CSV header: ``id,x,y[,population]``.
    Flows CSV header: ``origin,dest,volume``.
    Errors report the offending CSV row number.
    """
    locations: list[Location] = []
    seen: set[str] = set()
    with _open_text(locations_source) as fh:
        reader = csv.DictReader(fh)
        required = {"id", "x", "y"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise IngestionError("locations CSV must have header id,x,y[,population]")
        for rownum, row in enumerate(reader, start=2):
            lid = row["id"]
            if lid in seen:
                raise DuplicateLocationError(
                    f"duplicate location id {lid!r} (locations row {rownum})")
            seen.add(lid)
            try:
                x = float(row["x"])
                y = float(row["y"])
            except (TypeError, ValueError):
                raise IngestionError(
                    f"bad coordinates for {lid!r} (locations row {rownum})") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise IngestionError(
                    f"non-finite coordinates for {lid!r} (locations row {rownum})")
            pop = row.get("population")
            population = float(pop) if pop not in (None, "") else None
            locations.append(Location(lid, x, y, population))

    id_to_index = {loc.id: i for i, loc in enumerate(locations)}
    self_rows: list[int] = []
    origins: list[int] = []
    dests: list[int] = []
    vols: list[int] = []
    with _open_text(flows_source) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"origin", "dest", "volume"}.issubset(reader.fieldnames):
            raise IngestionError("flows CSV must have header origin,dest,volume")
        for rownum, row in enumerate(reader, start=2):
            o, d = row["origin"], row["dest"]
            if o not in id_to_index:
                raise UnknownLocationError(
                    f"unknown origin id {o!r} (flows row {rownum})")
            if d not in id_to_index:
                raise UnknownLocationError(
                    f"unknown destination id {d!r} (flows row {rownum})")
            try:
                v = int(row["volume"])
            except (TypeError, ValueError):
                raise NonPositiveVolumeError(
                    f"bad volume {row['volume']!r} (flows row {rownum})") from None
            if v < 1:
                raise NonPositiveVolumeError(
                    f"volume must be >= 1, got {v} (flows row {rownum})")
            if o == d:
                self_rows.append(rownum)
                continue
            origins.append(id_to_index[o])
            dests.append(id_to_index[d])
            vols.append(v)
    if self_rows:
        shown = ", ".join(map(str, self_rows[:5]))
        raise SelfFlowError(
            f"{len(self_rows)} self-flow record(s) rejected "
            f"(flow rows {shown}{'...' if len(self_rows) > 5 else ''}); "
            "pre-filter flows with origin == destination")
    if not origins:
        raise EmptyFlowTableError("flow table is empty")
    return FlowDataset(locations, np.array(origins), np.array(dests),
                       np.array(vols), geometry_mode=geometry_mode)
