"""Sufficient statistics for the vertex and edge models.

Each term maps panel history (lagged snapshots and covariates) to one real
statistic per vertex row or per edge row.  Lagged terms read only strictly
earlier snapshots, so the value at time t never depends on the time-t
outcome being predicted.

Vertex kinds: intercept, attr_dummy, lag_indicator, lag_triangle, seasonal.
Edge kinds: intercept, mixing, individual_dummy, log_size, lag_indicator,
lag_cycle_embed, seasonal.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .panel import NetworkPanel, RiskSet, Snapshot, VertexRef

__all__ = [
    "GapError",
    "SpecError",
    "WEEKDAYS",
    "TermSpec",
    "ModelSpec",
    "ModelValidationReport",
    "PanelHistory",
    "seasonal_terms",
    "resolve_lag",
    "usable_transitions",
    "vertex_stat",
    "edge_stat",
    "triangle_count",
    "triangle_counts",
    "pair_cycle_count",
    "validate_model",
    "load_model_spec",
    "save_model_spec",
]


class SpecError(ValueError):
    """A term or model specification is malformed or references unknown data."""


class GapError(ValueError):
    """A lagged statistic needs a snapshot that was never observed."""


WEEKDAYS = (
    "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday",
)

VERTEX_KINDS = frozenset(
    {"intercept", "attr_dummy", "lag_indicator", "lag_triangle", "seasonal"}
)
EDGE_KINDS = frozenset(
    {"intercept", "mixing", "individual_dummy", "log_size", "lag_indicator",
     "lag_cycle_embed", "seasonal"}
)
LAGGED_KINDS = frozenset({"lag_indicator", "lag_triangle", "lag_cycle_embed"})
MIXING_PAIRS = ("both", "neither", "mixed")


@dataclass(frozen=True)
class TermSpec:
    """Declarative description of one sufficient statistic."""

    target: str
    kind: str
    lag: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        allowed = {"vertex": VERTEX_KINDS, "edge": EDGE_KINDS}.get(self.target)
        if allowed is None:
            raise SpecError(f"term target must be 'vertex' or 'edge', got {self.target!r}")
        if self.kind not in allowed:
            raise SpecError(f"kind {self.kind!r} not valid for {self.target} terms")
        if self.kind in LAGGED_KINDS:
            if self.lag is None or int(self.lag) < 1:
                raise SpecError(f"{self.kind} term requires lag >= 1, got {self.lag}")
            object.__setattr__(self, "lag", int(self.lag))
        elif self.lag is not None:
            raise SpecError(f"{self.kind} term does not take a lag")
        p = self.params
        if self.kind == "attr_dummy" and not p.get("attr"):
            raise SpecError("attr_dummy term requires params.attr")
        if self.kind == "mixing":
            if not p.get("attr"):
                raise SpecError("mixing term requires params.attr")
            if p.get("pair") not in MIXING_PAIRS:
                raise SpecError(
                    f"mixing term requires params.pair in {MIXING_PAIRS}, "
                    f"got {p.get('pair')!r}"
                )
        if self.kind == "individual_dummy" and not p.get("label"):
            raise SpecError("individual_dummy term requires params.label")
        if self.kind == "seasonal":
            day = p.get("day")
            if day not in WEEKDAYS:
                raise SpecError(f"seasonal term requires params.day in {WEEKDAYS}")
        if self.kind == "lag_cycle_embed":
            ml = int(p.get("max_len", 9))
            if not 3 <= ml <= 9:
                raise SpecError(f"lag_cycle_embed max_len must be in [3, 9], got {ml}")
            object.__setattr__(self, "params", {**p, "max_len": ml})

    @property
    def name(self) -> str:
        k, p = self.kind, self.params
        if k == "intercept":
            return "intercept"
        if k == "attr_dummy":
            return p["attr"]
        if k == "mixing":
            return f"mix_{p['attr']}_{p['pair']}"
        if k == "individual_dummy":
            return f"indiv_{p['label']}"
        if k == "log_size":
            return "log_size"
        if k == "lag_indicator":
            return f"lag{self.lag}"
        if k == "lag_triangle":
            return f"triangle_lag{self.lag}"
        if k == "lag_cycle_embed":
            return f"cycles{p['max_len']}_lag{self.lag}"
        if k == "seasonal":
            return f"day_{p['day']}"
        raise AssertionError(k)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.lag is not None:
            d["lag"] = self.lag
        if self.params:
            d["params"] = dict(self.params)
        return d

    @classmethod
    def from_dict(cls, target: str, d: dict) -> "TermSpec":
        return cls(target=target, kind=d.get("kind", ""), lag=d.get("lag"),
                   params=dict(d.get("params", {})))


def seasonal_terms(target: str, reference: str = "Monday", key: str = "day"):
    """Day-of-week dummies for every day except the reference category."""
    if reference not in WEEKDAYS:
        raise SpecError(f"reference day must be one of {WEEKDAYS}")
    return [
        TermSpec(target, "seasonal", params={"day": day, "key": key})
        for day in WEEKDAYS
        if day != reference
    ]


@dataclass(frozen=True)
class ModelSpec:
    """Ordered vertex and edge term lists; order fixes the coefficient layout."""

    vertex_terms: tuple = ()
    edge_terms: tuple = ()
    gap_policy: str = "exclude"

    def __post_init__(self):
        object.__setattr__(self, "vertex_terms", tuple(self.vertex_terms))
        object.__setattr__(self, "edge_terms", tuple(self.edge_terms))
        for term in self.vertex_terms:
            if term.target != "vertex":
                raise SpecError(f"term {term.name} listed under vertex_terms")
        for term in self.edge_terms:
            if term.target != "edge":
                raise SpecError(f"term {term.name} listed under edge_terms")
        if self.gap_policy not in ("exclude", "bridge"):
            raise SpecError(f"gap_policy must be 'exclude' or 'bridge', got {self.gap_policy!r}")

    @property
    def max_lag(self) -> int:
        lags = [t.lag for t in self.vertex_terms + self.edge_terms if t.lag]
        return max(lags) if lags else 0

    @property
    def column_names(self) -> tuple:
        return tuple(f"v:{t.name}" for t in self.vertex_terms) + tuple(
            f"e:{t.name}" for t in self.edge_terms
        )

    def to_dict(self) -> dict:
        return {
            "vertex_terms": [t.to_dict() for t in self.vertex_terms],
            "edge_terms": [t.to_dict() for t in self.edge_terms],
            "gap_policy": self.gap_policy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(
            vertex_terms=[TermSpec.from_dict("vertex", x) for x in d.get("vertex_terms", [])],
            edge_terms=[TermSpec.from_dict("edge", x) for x in d.get("edge_terms", [])],
            gap_policy=d.get("gap_policy", "exclude"),
        )


def load_model_spec(path) -> ModelSpec:
    import json
    from pathlib import Path

    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return ModelSpec.from_dict(obj)


def save_model_spec(spec: ModelSpec, path) -> None:
    import json
    from pathlib import Path

    Path(path).write_text(
        json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# history access and lag resolution
# ---------------------------------------------------------------------------

class PanelHistory:
    """Snapshot lookup over an observed panel."""

    __slots__ = ("panel", "_times")

    def __init__(self, panel: NetworkPanel):
        self.panel = panel
        self._times = panel.observed_times  # sorted

    @property
    def risk_set(self) -> RiskSet:
        return self.panel.risk_set

    def available_times(self):
        return self._times

    def snapshot_at(self, t: int):
        return self.panel.at(t)

    def time_attrs_at(self, t: int):
        snap = self.snapshot_at(t)
        return None if snap is None else snap.time_attrs


def resolve_lag(history, t: int, lag: int, policy: str = "exclude") -> int:
    """Time index a lag-``lag`` statistic at time ``t`` should read.

    Under ``exclude`` the lag counts calendar slots and any unobserved slot
    in between is an error; under ``bridge`` it counts back over observed
    snapshots only.
    """
    if policy == "exclude":
        u = t - lag
        if history.snapshot_at(u) is None:
            raise GapError(f"lag {lag} at t={t} needs unobserved slot {u}")
        return u
    if policy == "bridge":
        times = history.available_times()
        pos = bisect_left(times, t)
        if pos - lag < 0:
            raise GapError(f"lag {lag} at t={t}: fewer than {lag} earlier snapshots")
        return times[pos - lag]
    raise SpecError(f"unknown gap policy {policy!r}")


def usable_transitions(history, max_lag: int, policy: str = "exclude"):
    """Observed times whose entire lag window 1..max_lag is resolvable."""
    if isinstance(history, NetworkPanel):
        history = PanelHistory(history)
    out = []
    for t in history.available_times():
        try:
            for lag in range(1, max_lag + 1):
                resolve_lag(history, t, lag, policy)
        except GapError:
            continue
        out.append(t)
    return tuple(out)


# ---------------------------------------------------------------------------
# statistic evaluation
# ---------------------------------------------------------------------------

def _as_index(p) -> int:
    return p.index if isinstance(p, VertexRef) else int(p)


def _as_bits(present, n: int) -> np.ndarray:
    if isinstance(present, np.ndarray) and present.dtype == bool:
        return present
    bits = np.zeros(n, dtype=bool)
    idx = list(present)
    if idx:
        bits[np.asarray(idx, dtype=int)] = True
    return bits


def triangle_counts(snapshot: Snapshot) -> np.ndarray:
    """Number of triangles through each risk-set vertex (0 for absent ones)."""
    n = len(snapshot.present)
    out = np.zeros(n)
    nbrs = snapshot.neighbor_sets()
    for p, np_set in nbrs.items():
        if len(np_set) < 2:
            continue
        c = 0
        for q in np_set:
            c += len(np_set & nbrs[q])
        out[p] = c // 2
    return out


def triangle_count(snapshot: Snapshot, p) -> int:
    """Triangles containing vertex p: adjacent neighbor pairs of p."""
    p = _as_index(p)
    nbrs = snapshot.neighbor_sets()
    mine = nbrs.get(p)
    if not mine:
        return 0
    return sum(len(mine & nbrs[q]) for q in mine) // 2


def pair_cycle_count(snapshot: Snapshot, i, j, max_len: int = 9) -> int:
    """Simple cycles of length 3..max_len that traverse the edge {i, j}.

    A cycle through the edge corresponds to exactly one simple path from i
    to j of 2..max_len-1 edges that avoids the direct edge, so the count is
    found by depth-limited DFS between the endpoints.  Pairs that are not
    adjacent lie on no such cycle and count 0.
    """
    if not 3 <= max_len <= 9:
        raise ValueError(f"max_len must be in [3, 9], got {max_len}")
    i, j = _as_index(i), _as_index(j)
    if i == j:
        raise ValueError("pair endpoints must differ")
    if not snapshot.has_edge(i, j):
        return 0
    nbrs = snapshot.neighbor_sets()
    limit = max_len - 1  # path length budget in edges
    visited = {i}

    def walk(u, depth):
        count = 0
        for v in nbrs[u]:
            if v == j:
                if depth + 1 >= 2:
                    count += 1
            elif v not in visited and depth + 1 < limit:
                visited.add(v)
                count += walk(v, depth + 1)
                visited.discard(v)
        return count

    return walk(i, 0)


def _cycle_count_cached(snapshot: Snapshot, i: int, j: int, max_len: int) -> int:
    # same lagged snapshot is queried for many rows/replicates; memoize on it
    key = (i, j, max_len)
    memo = snapshot._cycle_memo
    val = memo.get(key)
    if val is None:
        val = pair_cycle_count(snapshot, i, j, max_len)
        memo[key] = val
    return val


def _seasonal_value(term: TermSpec, history, t: int) -> float:
    key = term.params.get("key", "day")
    attrs = history.time_attrs_at(t)
    if attrs is None:
        raise GapError(f"seasonal term needs time attributes at unobserved t={t}")
    day = attrs.get(key)
    if day is None:
        raise SpecError(f"snapshot t={t} lacks time attribute {key!r}")
    return 1.0 if day == term.params["day"] else 0.0


def vertex_term_values(term: TermSpec, history, t: int,
                       policy: str = "exclude") -> np.ndarray:
    """Statistic of one vertex term for every risk-set vertex at time t."""
    rs = history.risk_set
    n = len(rs)
    kind = term.kind
    if kind == "intercept":
        return np.ones(n)
    if kind == "attr_dummy":
        try:
            return rs.attr_indicator(term.params["attr"])
        except KeyError as exc:
            raise SpecError(str(exc)) from None
    if kind == "seasonal":
        return np.full(n, _seasonal_value(term, history, t))
    u = resolve_lag(history, t, term.lag, policy)
    snap = history.snapshot_at(u)
    if kind == "lag_indicator":
        return snap.present.astype(float)
    if kind == "lag_triangle":
        return triangle_counts(snap)
    raise SpecError(f"kind {kind!r} is not a vertex statistic")


def edge_term_values(term: TermSpec, history, t: int, ii: np.ndarray,
                     jj: np.ndarray, present: np.ndarray,
                     policy: str = "exclude") -> np.ndarray:
    """Statistic of one edge term for the dyads (ii[r], jj[r]) at time t.

    ``present`` is the current vertex set the edge model conditions on; for
    simulated steps it is the sampled one, which is what log_size reads.
    """
    rs = history.risk_set
    n = len(rs)
    m = len(ii)
    kind = term.kind
    if kind == "intercept":
        return np.ones(m)
    if kind == "mixing":
        try:
            a = rs.attr_indicator(term.params["attr"])
        except KeyError as exc:
            raise SpecError(str(exc)) from None
        ai, aj = a[ii], a[jj]
        pair = term.params["pair"]
        if pair == "both":
            return ai * aj
        if pair == "neither":
            return (1.0 - ai) * (1.0 - aj)
        return ai * (1.0 - aj) + (1.0 - ai) * aj
    if kind == "individual_dummy":
        try:
            idx = rs.index_of(term.params["label"])
        except KeyError as exc:
            raise SpecError(str(exc)) from None
        return ((ii == idx) | (jj == idx)).astype(float)
    if kind == "log_size":
        return np.full(m, math.log(int(present.sum())))
    if kind == "seasonal":
        return np.full(m, _seasonal_value(term, history, t))
    u = resolve_lag(history, t, term.lag, policy)
    snap = history.snapshot_at(u)
    if kind == "lag_indicator":
        if not snap.edges:
            return np.zeros(m)
        codes = ii.astype(np.int64) * n + jj
        return np.isin(codes, snap.edge_codes(n)).astype(float)
    if kind == "lag_cycle_embed":
        max_len = term.params["max_len"]
        out = np.zeros(m)
        if snap.edges:
            codes = ii.astype(np.int64) * n + jj
            lagged = np.isin(codes, snap.edge_codes(n))
            for r in np.flatnonzero(lagged):
                z = _cycle_count_cached(snap, int(ii[r]), int(jj[r]), max_len)
                out[r] = math.log1p(z)
        return out
    raise SpecError(f"kind {kind!r} is not an edge statistic")


def vertex_stat(term: TermSpec, panel: NetworkPanel, t: int, p,
                policy: str | None = None) -> float:
    """One vertex statistic value; the per-row scalar entry of the design."""
    policy = policy or "exclude"
    vals = vertex_term_values(term, PanelHistory(panel), t, policy)
    return float(vals[_as_index(p)])


def edge_stat(term: TermSpec, panel: NetworkPanel, t: int, i, j,
              current_present, policy: str | None = None) -> float:
    """One edge statistic value for the dyad {i, j} given the current vertices."""
    policy = policy or "exclude"
    i, j = _as_index(i), _as_index(j)
    if i == j:
        raise ValueError("dyad endpoints must differ")
    if i > j:
        i, j = j, i
    bits = _as_bits(current_present, len(panel.risk_set))
    if not (bits[i] and bits[j]):
        raise ValueError(f"dyad ({i},{j}) endpoints must be in the current vertex set")
    vals = edge_term_values(
        term, PanelHistory(panel), t,
        np.array([i]), np.array([j]), bits, policy,
    )
    return float(vals[0])


# ---------------------------------------------------------------------------
# model validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelValidationReport:
    errors: tuple
    warnings: tuple
    usable_steps: tuple
    max_lag: int

    @property
    def ok(self) -> bool:
        return not self.errors


def _check_attr_refs(terms_list, risk_set, errors):
    for term in terms_list:
        if term.kind in ("attr_dummy", "mixing"):
            attr = term.params["attr"]
            if attr not in risk_set.attrs:
                errors.append(f"term {term.name}: unknown vertex attribute {attr!r}")
        if term.kind == "individual_dummy":
            label = term.params["label"]
            if label not in risk_set.labels:
                errors.append(f"term {term.name}: label {label!r} not in risk set")


def _check_collinear(terms_list, side, warnings):
    kinds = [t.kind for t in terms_list]
    names = [t.name for t in terms_list]
    for name in sorted({x for x in names if names.count(x) > 1}):
        warnings.append(f"{side} terms: duplicate term {name}")
    days = {t.params["day"] for t in terms_list if t.kind == "seasonal"}
    full_week = len(days) == 7
    has_intercept = "intercept" in kinds
    mix_pairs = {t.params["pair"] for t in terms_list if t.kind == "mixing"}
    full_mixing = mix_pairs == set(MIXING_PAIRS)
    if full_week and has_intercept:
        warnings.append(f"{side} terms: all 7 day dummies plus intercept are collinear")
    if full_mixing and has_intercept:
        warnings.append(f"{side} terms: full mixing set plus intercept is collinear")
    if full_week and full_mixing:
        warnings.append(f"{side} terms: all 7 day dummies plus full mixing set are collinear")


def validate_model(spec: ModelSpec, panel: NetworkPanel,
                   gap_policy: str | None = None) -> ModelValidationReport:
    """Static checks of a model against a panel, plus the usable time range."""
    policy = gap_policy or spec.gap_policy
    errors: list[str] = []
    warnings: list[str] = []
    _check_attr_refs(spec.vertex_terms + spec.edge_terms, panel.risk_set, errors)
    _check_collinear(spec.vertex_terms, "vertex", warnings)
    _check_collinear(spec.edge_terms, "edge", warnings)

    steps = usable_transitions(panel, spec.max_lag, policy)
    if not steps:
        errors.append(
            f"no usable transition steps for max lag {spec.max_lag} "
            f"under gap policy {policy!r}"
        )

    seasonal_keys = {
        t.params.get("key", "day")
        for t in spec.vertex_terms + spec.edge_terms
        if t.kind == "seasonal"
    }
    for key in sorted(seasonal_keys):
        missing = [t for t in steps if key not in (panel.at(t).time_attrs or {})]
        if missing:
            errors.append(
                f"time attribute {key!r} missing at usable steps {missing[:5]}"
                + ("..." if len(missing) > 5 else "")
            )

    return ModelValidationReport(
        errors=tuple(errors),
        warnings=tuple(warnings),
        usable_steps=steps,
        max_lag=spec.max_lag,
    )
