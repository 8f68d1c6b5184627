"""Forward simulation under the fitted model and index-based adequacy checks.

Prediction of a step samples the vertex set first (independent Bernoulli
draws from the vertex model) and then, conditional on the sampled vertices,
the edges (independent Bernoulli draws from the edge model).  Repeating
this per observed transition gives simulation intervals for graph-level
indices; chaining it forward gives n-step projections in which sampled
snapshots feed later lag terms.

Randomness is keyed by (seed, replicate, step), so reports are identical
across runs and scheduling orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .gli import GLI_NAMES, gli_vector
from .panel import NetworkPanel, RiskSet, Snapshot
from .solver import FitResult
from .terms import (
    GapError,
    ModelSpec,
    SpecError,
    WEEKDAYS,
    edge_term_values,
    usable_transitions,
    vertex_term_values,
)

__all__ = [
    "SimConfig",
    "GliSampleSet",
    "AdequacyReport",
    "ProjectionResult",
    "SimHistory",
    "one_step_sample",
    "one_step_intervals",
    "project",
    "classify_threshold",
    "generate_panel",
    "weekday_attrs",
    "interval_indices",
]


@dataclass(frozen=True)
class SimConfig:
    """Settings for simulation-based prediction and adequacy checks."""

    replicates: int = 100
    alpha: float = 0.95
    horizon: int = 1
    seed: int = 0
    mode: str = "stochastic"  # or "threshold50"
    fixed_vertex_set: bool = False

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.mode not in ("stochastic", "threshold50"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class GliSampleSet:
    """Simulated index draws per step: draws[s, r, g] for step s, replicate r."""

    steps: tuple
    draws: np.ndarray
    observed: np.ndarray | None
    names: tuple = GLI_NAMES


@dataclass(frozen=True)
class AdequacyReport:
    """Central simulation intervals per index and step, with coverage counts."""

    names: tuple
    steps: tuple
    lower: np.ndarray
    upper: np.ndarray
    observed: np.ndarray
    inside: np.ndarray
    alpha: float
    replicates: int
    notes: tuple = ()

    @property
    def covered(self) -> np.ndarray:
        return self.inside.sum(axis=0)

    @property
    def total(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict:
        out = {}
        cov = self.covered
        for g, name in enumerate(self.names):
            out[name] = {
                "steps": [
                    {
                        "step": int(s),
                        "lower": float(self.lower[k, g]),
                        "upper": float(self.upper[k, g]),
                        "observed": float(self.observed[k, g]),
                        "inside": bool(self.inside[k, g]),
                    }
                    for k, s in enumerate(self.steps)
                ],
                "summary": {"covered": int(cov[g]), "total": self.total},
            }
        return {
            "alpha": self.alpha,
            "replicates": self.replicates,
            "glis": out,
            "notes": list(self.notes),
        }

    def csv_rows(self):
        yield ("step", "gli", "lower", "upper", "observed", "inside")
        for k, s in enumerate(self.steps):
            for g, name in enumerate(self.names):
                yield (int(s), name, float(self.lower[k, g]), float(self.upper[k, g]),
                       float(self.observed[k, g]), int(self.inside[k, g]))


@dataclass(frozen=True)
class ProjectionResult:
    """GLI paths of n-step-ahead trajectories; snapshots only when kept."""

    steps: tuple
    gli_paths: np.ndarray  # (replicates, horizon, n_glis)
    names: tuple = GLI_NAMES
    snapshots: tuple | None = None  # per replicate: tuple of Snapshot


# ---------------------------------------------------------------------------
# history with sampled overlays
# ---------------------------------------------------------------------------

def weekday_attrs(t: int, offset: int = 0) -> dict:
    """Day-of-week attribute map for synthetic timelines."""
    return {"day": WEEKDAYS[(t + offset) % 7]}


def _weekday_offset(panel: NetworkPanel):
    """Offset o with day(t) = WEEKDAYS[(t + o) % 7] across the panel, if any."""
    offset = None
    for snap in panel.snapshots:
        day = snap.time_attrs.get("day")
        if day is None or day not in WEEKDAYS:
            return None
        o = (WEEKDAYS.index(day) - snap.t) % 7
        if offset is None:
            offset = o
        elif o != offset:
            return None
    return offset


class SimHistory:
    """Panel snapshots plus sampled ones; lag terms read both alike.

    Time attributes of unobserved steps are extrapolated from the panel's
    weekly day cycle when one exists, or supplied by ``attrs_fn``.
    """

    __slots__ = ("risk_set", "base", "overlay", "attrs_fn", "_offset")

    def __init__(self, risk_set: RiskSet, base: NetworkPanel | None = None,
                 attrs_fn=None):
        self.risk_set = risk_set
        self.base = base
        self.overlay: dict[int, Snapshot] = {}
        self.attrs_fn = attrs_fn
        self._offset = "unset"

    def add(self, snap: Snapshot) -> None:
        self.overlay[snap.t] = snap

    def available_times(self):
        ts = set(self.overlay)
        if self.base is not None:
            ts.update(self.base.observed_times)
        return tuple(sorted(ts))

    def snapshot_at(self, t: int):
        snap = self.overlay.get(t)
        if snap is None and self.base is not None:
            snap = self.base.at(t)
        return snap

    def time_attrs_at(self, t: int):
        snap = self.snapshot_at(t)
        if snap is not None:
            return snap.time_attrs
        if self.attrs_fn is not None:
            return self.attrs_fn(t)
        if self.base is not None:
            if self._offset == "unset":
                self._offset = _weekday_offset(self.base)
            if self._offset is not None:
                return weekday_attrs(t, self._offset)
        return None


def _stream(seed: int, replicate: int, step: int, base_step: int = 0):
    """Independent generator per (seed, replicate, step)."""
    key = (int(replicate), int(step - base_step))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


# ---------------------------------------------------------------------------
# per-step prediction
# ---------------------------------------------------------------------------

def _split_theta(fit: FitResult, spec: ModelSpec):
    if tuple(fit.column_names) != spec.column_names:
        raise ValueError(
            "fit columns do not match the model spec: "
            f"{list(fit.column_names)} vs {list(spec.column_names)}"
        )
    kv = len(spec.vertex_terms)
    return fit.coefficients[:kv], fit.coefficients[kv:]


def _vertex_probs(spec, theta_v, history, t, policy):
    n = len(history.risk_set)
    eta = np.zeros(n)
    for theta, term in zip(theta_v, spec.vertex_terms):
        eta += theta * vertex_term_values(term, history, t, policy)
    return expit(eta)


def _edge_probs(spec, theta_e, history, t, ii, jj, present, policy):
    eta = np.zeros(len(ii))
    for theta, term in zip(theta_e, spec.edge_terms):
        eta += theta * edge_term_values(term, history, t, ii, jj, present, policy)
    return expit(eta)


def _pairs_of(present_idx):
    k = len(present_idx)
    if k < 2:
        e = np.empty(0, dtype=np.int64)
        return e, e
    iu, ju = np.triu_indices(k, 1)
    return present_idx[iu].astype(np.int64), present_idx[ju].astype(np.int64)


def _sample_step(spec, theta_v, theta_e, history, target, rng=None, *,
                 threshold=False, fixed_vertex_set=False, policy=None) -> Snapshot:
    policy = policy or spec.gap_policy
    n = len(history.risk_set)
    if fixed_vertex_set:
        bits = np.ones(n, dtype=bool)
    else:
        if len(spec.vertex_terms) == 0:
            raise SpecError(
                "model has no vertex terms; simulate with fixed_vertex_set instead"
            )
        pv = _vertex_probs(spec, theta_v, history, target, policy)
        if threshold:
            bits = pv > 0.5
        else:
            bits = rng.random(n) < pv
    edges = []
    ii, jj = _pairs_of(np.flatnonzero(bits))
    if len(ii):
        pe = _edge_probs(spec, theta_e, history, target, ii, jj, bits, policy)
        if threshold:
            keep = pe > 0.5
        else:
            keep = rng.random(len(pe)) < pe
        edges = list(zip(ii[keep], jj[keep]))
    attrs = history.time_attrs_at(target) or {}
    return Snapshot(target, bits, edges, attrs)


def one_step_sample(fit: FitResult, spec: ModelSpec, panel: NetworkPanel,
                    t: int, rng_stream) -> Snapshot:
    """Sample one predicted snapshot for time t+1 from observed history."""
    theta_v, theta_e = _split_theta(fit, spec)
    history = SimHistory(panel.risk_set, panel)
    return _sample_step(spec, theta_v, theta_e, history, t + 1, rng_stream)


def classify_threshold(fit: FitResult, spec: ModelSpec, panel: NetworkPanel,
                       t: int) -> Snapshot:
    """Deterministic 50-percent-rule prediction of time t+1 (ties -> absent)."""
    theta_v, theta_e = _split_theta(fit, spec)
    history = SimHistory(panel.risk_set, panel)
    return _sample_step(spec, theta_v, theta_e, history, t + 1, threshold=True)


# ---------------------------------------------------------------------------
# one-step intervals and coverage
# ---------------------------------------------------------------------------

def interval_indices(m: int, alpha: float):
    """0-based order-statistic positions of the central alpha interval.

    The tiny offsets keep floor/ceil stable when (1 +- alpha)/2 * m lands on
    an integer that floating point represents a hair off.
    """
    lo = math.floor((1.0 - alpha) / 2.0 * m + 1e-9) + 1
    hi = math.ceil((1.0 + alpha) / 2.0 * m - 1e-9)
    return max(lo, 1) - 1, min(hi, m) - 1


def prediction_steps(panel: NetworkPanel, spec: ModelSpec,
                     policy: str | None = None):
    """Observed steps that can be predicted and compared: full lag window
    observed, target observed."""
    policy = policy or spec.gap_policy
    return usable_transitions(panel, spec.max_lag, policy)


def _edge_model_reads_sampled_vertices(spec: ModelSpec) -> bool:
    return any(term.kind == "log_size" for term in spec.edge_terms)


def one_step_intervals(fit: FitResult, spec: ModelSpec, panel: NetworkPanel,
                       config: SimConfig):
    """Simulate every one-step prediction and summarize index coverage.

    Within a step all replicates share the same history, so the vertex
    probabilities (and, unless an edge statistic reads the sampled vertex
    set, the per-dyad edge probabilities) are computed once and reused;
    the resulting draws are identical to per-replicate sampling because
    the (seed, replicate, step) stream and draw order are unchanged.
    """
    theta_v, theta_e = _split_theta(fit, spec)
    steps = prediction_steps(panel, spec, spec.gap_policy)
    if not steps:
        raise GapError("no predictable steps: every lag window crosses a gap")
    m = config.replicates
    n = len(panel.risk_set)
    n_g = len(GLI_NAMES)
    base = panel.t_min
    threshold = config.mode == "threshold50"
    edge_needs_sample = _edge_model_reads_sampled_vertices(spec) or config.fixed_vertex_set

    policy = spec.gap_policy
    draws = np.empty((len(steps), m, n_g))
    observed = np.empty((len(steps), n_g))
    small_draws = 0
    for k, s in enumerate(steps):
        history = SimHistory(panel.risk_set, panel)
        pv = None
        if not config.fixed_vertex_set:
            pv = _vertex_probs(spec, theta_v, history, s, policy)
        pe_all = pair_index = None
        if not edge_needs_sample:
            all_i, all_j = _pairs_of(np.arange(n))
            pe_all = _edge_probs(spec, theta_e, history, s, all_i, all_j,
                                 np.ones(n, dtype=bool), policy)
            pair_index = np.zeros((n, n), dtype=np.int64)
            pair_index[all_i, all_j] = np.arange(len(all_i))
        for rep in range(m):
            rng = _stream(config.seed, rep, s, base)
            if config.fixed_vertex_set:
                bits = np.ones(n, dtype=bool)
            elif threshold:
                bits = pv > 0.5
            else:
                bits = rng.random(n) < pv
            ii, jj = _pairs_of(np.flatnonzero(bits))
            edges = []
            if len(ii):
                if pe_all is not None:
                    pe = pe_all[pair_index[ii, jj]]
                else:
                    pe = _edge_probs(spec, theta_e, history, s, ii, jj, bits, policy)
                keep = pe > 0.5 if threshold else rng.random(len(pe)) < pe
                edges = list(zip(ii[keep], jj[keep]))
            snap = Snapshot(s, bits, edges, history.time_attrs_at(s) or {})
            draws[k, rep] = gli_vector(snap).as_array()
            if snap.n_present < 3:
                small_draws += 1
        observed[k] = gli_vector(panel.at(s)).as_array()

    lo_idx, hi_idx = interval_indices(m, config.alpha)
    ordered = np.sort(draws, axis=1)
    lower = ordered[:, lo_idx, :]
    upper = ordered[:, hi_idx, :]
    inside = (lower <= observed) & (observed <= upper)

    notes = ()
    if small_draws:
        notes = (
            f"{small_draws} simulated day(s) had fewer than 3 vertices; "
            "degenerate-size index conventions applied",
        )
    sample_set = GliSampleSet(steps=tuple(steps), draws=draws, observed=observed)
    report = AdequacyReport(
        names=GLI_NAMES, steps=tuple(steps), lower=lower, upper=upper,
        observed=observed, inside=inside, alpha=config.alpha, replicates=m,
        notes=notes,
    )
    return sample_set, report


# ---------------------------------------------------------------------------
# n-step projection
# ---------------------------------------------------------------------------

def project(fit: FitResult, spec: ModelSpec, panel: NetworkPanel,
            config: SimConfig, keep_snapshots: bool = False) -> ProjectionResult:
    """Autoregressive projection past the end of the panel.

    Lags reaching back before the projection start read observed snapshots;
    later lags read the replicate's own sampled snapshots.
    """
    theta_v, theta_e = _split_theta(fit, spec)
    if not panel.snapshots:
        raise ValueError("cannot project from an empty panel")
    start = panel.observed_times[-1] + 1
    steps = tuple(range(start, start + config.horizon))
    base = panel.t_min
    threshold = config.mode == "threshold50"

    paths = np.empty((config.replicates, config.horizon, len(GLI_NAMES)))
    kept = [] if keep_snapshots else None
    for rep in range(config.replicates):
        history = SimHistory(panel.risk_set, panel)
        traj = []
        for h, target in enumerate(steps):
            rng = _stream(config.seed, rep, target, base)
            snap = _sample_step(
                spec, theta_v, theta_e, history, target, rng,
                threshold=threshold, fixed_vertex_set=config.fixed_vertex_set,
            )
            history.add(snap)
            paths[rep, h] = gli_vector(snap).as_array()
            if keep_snapshots:
                traj.append(snap)
        if keep_snapshots:
            kept.append(tuple(traj))

    return ProjectionResult(
        steps=steps, gli_paths=paths,
        snapshots=tuple(kept) if keep_snapshots else None,
    )


# ---------------------------------------------------------------------------
# synthetic panels drawn from a known model
# ---------------------------------------------------------------------------

def generate_panel(spec: ModelSpec, coefficients, risk_set: RiskSet,
                   n_steps: int, seed: int, *, init_presence: float = 0.5,
                   init_density: float = 0.1, burn_in: int = 0,
                   attrs_fn=None) -> NetworkPanel:
    """Simulate a full panel from known coefficients.

    The first ``max_lag`` slots are seeded with homogeneous Bernoulli
    presence/edges, then the model runs forward; ``burn_in`` leading slots
    are dropped afterwards (time indices keep their original values so any
    day-of-week pattern stays aligned).
    """
    coefficients = np.asarray(coefficients, dtype=float)
    kv = len(spec.vertex_terms)
    if len(coefficients) != kv + len(spec.edge_terms):
        raise ValueError("coefficient length does not match spec")
    theta_v, theta_e = coefficients[:kv], coefficients[kv:]

    history = SimHistory(risk_set, None, attrs_fn=attrs_fn)
    n = len(risk_set)
    k = max(spec.max_lag, 1)
    for t in range(1, k + 1):
        rng = _stream(seed, 0, t, 0)
        bits = rng.random(n) < init_presence
        ii, jj = _pairs_of(np.flatnonzero(bits))
        edges = []
        if len(ii):
            keep = rng.random(len(ii)) < init_density
            edges = list(zip(ii[keep], jj[keep]))
        attrs = attrs_fn(t) if attrs_fn else {}
        history.add(Snapshot(t, bits, edges, attrs))

    for t in range(k + 1, n_steps + 1):
        rng = _stream(seed, 0, t, 0)
        snap = _sample_step(spec, theta_v, theta_e, history, t, rng)
        history.add(snap)

    snaps = [history.overlay[t] for t in sorted(history.overlay) if t > burn_in]
    return NetworkPanel(risk_set, snaps)
