"""Discrete-time network panels over a fixed vertex risk set.

A panel couples a risk set (every vertex that could ever appear) with a
time-ordered sequence of snapshots.  Each snapshot records which risk-set
members are present on that day and the undirected edges among them; days
with no observation are kept as explicit gap indices rather than silently
dropped, so lagged statistics can decide how to treat them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "PanelFormatError",
    "PanelValidationError",
    "VertexRef",
    "RiskSet",
    "Snapshot",
    "NetworkPanel",
    "load_panel",
    "save_panel",
    "subpanel",
    "panel_from_edge_presence",
    "read_edge_presence_tables",
]


class PanelFormatError(ValueError):
    """A panel file (or converter input) could not be parsed."""


class PanelValidationError(ValueError):
    """Panel contents violate a structural invariant."""


@dataclass(frozen=True)
class VertexRef:
    """Position of a vertex within a risk set, plus its opaque label."""

    index: int
    label: str


class RiskSet:
    """Ordered, immutable collection of all vertices at risk of appearing.

    ``attrs`` is a per-vertex attribute table: attribute name -> tuple of
    values aligned with vertex order.  Missing entries are normalized to
    ``None`` so every column covers every vertex.
    """

    __slots__ = ("labels", "attrs", "_index")

    def __init__(self, labels, attrs=None):
        labels = tuple(str(x) for x in labels)
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise PanelValidationError(f"duplicate vertex label(s): {dup}")
        object.__setattr__(self, "labels", labels)
        table = {}
        if attrs:
            if isinstance(attrs, dict):
                for name, column in attrs.items():
                    column = tuple(column)
                    if len(column) != len(labels):
                        raise PanelValidationError(
                            f"attribute column {name!r} has {len(column)} entries "
                            f"for {len(labels)} vertices"
                        )
                    table[name] = column
            else:
                # list of per-vertex dicts
                keys = sorted({k for d in attrs for k in d})
                for name in keys:
                    table[name] = tuple(d.get(name) for d in attrs)
        # all-None columns carry no information and would not survive a
        # save/load cycle; drop them so construction is canonical
        table = {k: v for k, v in table.items() if any(x is not None for x in v)}
        object.__setattr__(self, "attrs", table)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        return (
            isinstance(other, RiskSet)
            and self.labels == other.labels
            and self.attrs == other.attrs
        )

    def __repr__(self):
        return f"RiskSet(n={len(self)}, attrs={sorted(self.attrs)})"

    def index_of(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"label {label!r} not in risk set") from None

    def vertex(self, index: int) -> VertexRef:
        return VertexRef(index, self.labels[index])

    @property
    def vertices(self):
        return tuple(VertexRef(i, lab) for i, lab in enumerate(self.labels))

    def attr_values(self, name: str):
        if name not in self.attrs:
            raise KeyError(f"unknown vertex attribute {name!r}")
        return self.attrs[name]

    def attr_indicator(self, name: str) -> np.ndarray:
        """Attribute column coerced to a 0/1 float vector (None counts as 0)."""
        vals = self.attr_values(name)
        return np.array([1.0 if v in (True, 1) else 0.0 for v in vals])


class Snapshot:
    """One observed time slice: presence bitset plus undirected edges.

    ``present`` is a boolean vector over the risk set; ``edges`` holds
    unordered index pairs with the smaller index first.  Every edge endpoint
    must be present.  Instances are immutable after construction and cache
    derived structures (neighbor sets, per-pair cycle counts) on first use.
    """

    __slots__ = ("t", "present", "edges", "time_attrs", "_nbrs", "_cycle_memo")

    def __init__(self, t, present, edges, time_attrs=None, *, n=None):
        self.t = int(t)
        if isinstance(present, np.ndarray):
            bits = present.astype(bool).copy()
        else:
            if n is None:
                raise ValueError("need risk-set size n when present is an index set")
            bits = np.zeros(int(n), dtype=bool)
            idx = list(present)
            if idx:
                bits[np.asarray(idx, dtype=int)] = True
        bits.setflags(write=False)
        self.present = bits
        canon = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise PanelValidationError(f"loop edge ({i},{i}) at t={self.t}")
            if i > j:
                i, j = j, i
            if not (bits[i] and bits[j]):
                raise PanelValidationError(
                    f"edge endpoint not present at t={self.t}: ({i},{j})"
                )
            canon.add((i, j))
        self.edges = frozenset(canon)
        self.time_attrs = dict(time_attrs or {})
        self._nbrs = None
        self._cycle_memo = {}

    # -- basic accessors -------------------------------------------------

    @property
    def n_present(self) -> int:
        return int(self.present.sum())

    @property
    def present_indices(self) -> np.ndarray:
        return np.flatnonzero(self.present)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def has_vertex(self, i: int) -> bool:
        return bool(self.present[i])

    def has_edge(self, i: int, j: int) -> bool:
        if i > j:
            i, j = j, i
        return (i, j) in self.edges

    def neighbor_sets(self):
        """Adjacency as a dict index -> set of neighbor indices (present only)."""
        if self._nbrs is None:
            nbrs = {int(i): set() for i in self.present_indices}
            for i, j in self.edges:
                nbrs[i].add(j)
                nbrs[j].add(i)
            self._nbrs = nbrs
        return self._nbrs

    def degree(self, i: int) -> int:
        return len(self.neighbor_sets().get(i, ()))

    def degrees(self) -> np.ndarray:
        """Degree of every present vertex, ordered as ``present_indices``."""
        nbrs = self.neighbor_sets()
        return np.array([len(nbrs[int(i)]) for i in self.present_indices], dtype=int)

    def edge_codes(self, n: int) -> np.ndarray:
        """Edges encoded as sorted ``i * n + j`` ints, for vectorized lookup."""
        codes = np.fromiter((i * n + j for i, j in self.edges), dtype=np.int64,
                            count=len(self.edges))
        codes.sort()
        return codes

    def __eq__(self, other):
        return (
            isinstance(other, Snapshot)
            and self.t == other.t
            and np.array_equal(self.present, other.present)
            and self.edges == other.edges
            and self.time_attrs == other.time_attrs
        )

    def __repr__(self):
        return f"Snapshot(t={self.t}, |V|={self.n_present}, |E|={self.edge_count})"


class NetworkPanel:
    """A time-ordered sequence of snapshots over one risk set.

    Immutable after construction; snapshot time indices are strictly
    increasing and disjoint from the gap indices.
    """

    __slots__ = ("risk_set", "snapshots", "gaps", "directed", "_by_t")

    def __init__(self, risk_set: RiskSet, snapshots, gaps=(), directed=False):
        if directed:
            raise PanelValidationError("directed panels are not supported")
        snaps = tuple(sorted(snapshots, key=lambda s: s.t))
        times = [s.t for s in snaps]
        if len(set(times)) != len(times):
            dup = sorted({t for t in times if times.count(t) > 1})
            raise PanelValidationError(f"duplicate snapshot time index: {dup}")
        gaps = tuple(sorted(int(g) for g in gaps))
        if len(set(gaps)) != len(gaps):
            raise PanelValidationError("duplicate gap index")
        overlap = set(times) & set(gaps)
        if overlap:
            raise PanelValidationError(
                f"gap indices coincide with snapshots: {sorted(overlap)}"
            )
        n = len(risk_set)
        for s in snaps:
            if len(s.present) != n:
                raise PanelValidationError(
                    f"snapshot t={s.t} presence vector has length {len(s.present)}, "
                    f"risk set has {n}"
                )
        self.risk_set = risk_set
        self.snapshots = snaps
        self.gaps = gaps
        self.directed = False
        self._by_t = {s.t: s for s in snaps}

    def at(self, t: int):
        """Snapshot at time ``t`` or None if unobserved."""
        return self._by_t.get(t)

    def is_observed(self, t: int) -> bool:
        return t in self._by_t

    @property
    def observed_times(self):
        return tuple(s.t for s in self.snapshots)

    @property
    def t_min(self) -> int:
        ts = self.observed_times + self.gaps
        if not ts:
            raise ValueError("panel has no snapshots or gaps")
        return min(ts)

    @property
    def t_max(self) -> int:
        ts = self.observed_times + self.gaps
        if not ts:
            raise ValueError("panel has no snapshots or gaps")
        return max(ts)

    def __len__(self):
        return len(self.snapshots)

    def __eq__(self, other):
        return (
            isinstance(other, NetworkPanel)
            and self.risk_set == other.risk_set
            and self.snapshots == other.snapshots
            and self.gaps == other.gaps
        )

    def __repr__(self):
        return (
            f"NetworkPanel(n={len(self.risk_set)}, T={len(self.snapshots)}, "
            f"gaps={list(self.gaps)})"
        )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _panel_to_obj(panel: NetworkPanel) -> dict:
    rs = panel.risk_set
    risk = []
    for i, lab in enumerate(rs.labels):
        attrs = {k: rs.attrs[k][i] for k in sorted(rs.attrs) if rs.attrs[k][i] is not None}
        risk.append({"label": lab, "attrs": attrs})
    snaps = []
    for s in panel.snapshots:
        labels = [rs.labels[int(i)] for i in s.present_indices]
        edges = []
        for i, j in s.edges:
            a, b = rs.labels[i], rs.labels[j]
            if a > b:
                a, b = b, a
            edges.append([a, b])
        edges.sort()
        snaps.append({
            "t": s.t,
            "attrs": dict(s.time_attrs),
            "present": labels,
            "edges": edges,
        })
    return {
        "risk_set": risk,
        "snapshots": snaps,
        "gaps": list(panel.gaps),
        "directed": bool(panel.directed),
    }


def panel_to_json(panel: NetworkPanel) -> str:
    """Canonical serialization: same panel -> identical bytes."""
    return json.dumps(_panel_to_obj(panel), indent=2, sort_keys=True) + "\n"


def save_panel(panel: NetworkPanel, path) -> None:
    try:
        Path(path).write_text(panel_to_json(panel), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write panel file {path}: {exc}") from exc


def _require(obj, key, where):
    if key not in obj:
        raise PanelFormatError(f"missing key {key!r} in {where}")
    return obj[key]


def panel_from_obj(obj: dict) -> NetworkPanel:
    if not isinstance(obj, dict):
        raise PanelFormatError("top level of a panel file must be an object")
    risk_entries = _require(obj, "risk_set", "panel file")
    labels, attr_dicts = [], []
    for k, entry in enumerate(risk_entries):
        labels.append(str(_require(entry, "label", f"risk_set[{k}]")))
        attr_dicts.append(dict(entry.get("attrs", {})))
    risk = RiskSet(labels, attr_dicts)
    n = len(risk)

    snapshots = []
    for k, rec in enumerate(_require(obj, "snapshots", "panel file")):
        t = _require(rec, "t", f"snapshots[{k}]")
        present = []
        for lab in _require(rec, "present", f"snapshots[{k}]"):
            try:
                present.append(risk.index_of(str(lab)))
            except KeyError:
                raise PanelValidationError(
                    f"present vertex {lab!r} at t={t} is not in the risk set"
                ) from None
        present_set = set(present)
        edges = []
        for a, b in _require(rec, "edges", f"snapshots[{k}]"):
            try:
                i, j = risk.index_of(str(a)), risk.index_of(str(b))
            except KeyError as exc:
                raise PanelValidationError(f"edge label at t={t}: {exc}") from None
            if i not in present_set or j not in present_set:
                raise PanelValidationError(
                    f"edge endpoint absent at t={t}: ({a},{b})"
                )
            edges.append((i, j))
        snapshots.append(
            Snapshot(t, present, edges, rec.get("attrs", {}), n=n)
        )

    directed = bool(obj.get("directed", False))
    if directed:
        raise PanelValidationError("directed panels are not supported")
    return NetworkPanel(risk, snapshots, obj.get("gaps", ()), directed=False)


def load_panel(path) -> NetworkPanel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read panel file {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PanelFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return panel_from_obj(obj)


def subpanel(panel: NetworkPanel, t_from: int, t_to: int) -> NetworkPanel:
    """Panel restricted to the closed time window [t_from, t_to]."""
    if t_from > t_to:
        raise ValueError(f"t_from={t_from} exceeds t_to={t_to}")
    if t_from < panel.t_min or t_to > panel.t_max:
        raise ValueError(
            f"window [{t_from},{t_to}] outside panel range "
            f"[{panel.t_min},{panel.t_max}]"
        )
    snaps = [s for s in panel.snapshots if t_from <= s.t <= t_to]
    gaps = [g for g in panel.gaps if t_from <= g <= t_to]
    return NetworkPanel(panel.risk_set, snaps, gaps)


# ---------------------------------------------------------------------------
# converter: 3-column edge list + 2-column presence table -> panel
# ---------------------------------------------------------------------------

def _read_table(path, n_cols, what):
    rows = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {what} file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in (line.split(",") if "," in line else line.split())]
        if len(parts) != n_cols:
            raise PanelFormatError(
                f"{path}:{lineno}: expected {n_cols} columns in {what} row, "
                f"got {len(parts)}"
            )
        try:
            t = int(parts[0])
        except ValueError:
            raise PanelFormatError(
                f"{path}:{lineno}: first column must be an integer time index"
            ) from None
        rows.append((lineno, t, *parts[1:]))
    return rows


def read_edge_presence_tables(edge_path, presence_path):
    """Parse converter inputs: edge rows (t, i, j) and presence rows (t, label)."""
    return _read_table(edge_path, 3, "edge"), _read_table(presence_path, 2, "presence")


def panel_from_edge_presence(edge_rows, presence_rows, gaps=()) -> NetworkPanel:
    """Assemble a panel from row tuples as returned by the table reader.

    The risk set is the union of presence labels in sorted label order; an
    edge whose endpoint is not listed as present at its time index is a
    validation error naming the offending row.
    """
    present_by_t: dict[int, set] = {}
    for _lineno, t, lab in presence_rows:
        present_by_t.setdefault(t, set()).add(lab)
    labels = sorted({lab for members in present_by_t.values() for lab in members})
    risk = RiskSet(labels)
    n = len(risk)

    edges_by_t: dict[int, set] = {t: set() for t in present_by_t}
    for lineno, t, a, b in edge_rows:
        if t not in present_by_t:
            raise PanelValidationError(
                f"edge row {lineno}: time {t} has no presence records"
            )
        for lab in (a, b):
            if lab not in present_by_t[t]:
                raise PanelValidationError(
                    f"edge row {lineno}: vertex {lab!r} not present at t={t}"
                )
        i, j = risk.index_of(a), risk.index_of(b)
        if i == j:
            raise PanelValidationError(f"edge row {lineno}: loop edge at t={t}")
        edges_by_t[t].add((min(i, j), max(i, j)))

    snapshots = [
        Snapshot(t, [risk.index_of(lab) for lab in members], edges_by_t[t], n=n)
        for t, members in sorted(present_by_t.items())
    ]
    return NetworkPanel(risk, snapshots, gaps)
