"""Scaling sweeps over ``(spec, epsilon)`` cells, ratio fits and report emission.

A cell is run with ``p = p_hat * (1 - epsilon)`` where ``p_hat`` is either
the anchor ``1 / (degree - 1)`` or a :func:`~perclab.estimators.find_pc`
estimate.  Each census seed of a cell is ``trial_seed(cell_seed, i)`` with
``cell_seed = trial_seed(plan.seed, cell_index)``, so a row can be
recomputed from the plan and its index alone.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend, rng
from .census import census, jth_largest
from .errors import DomainError, PercLabError
from .estimators import find_pc, resolve_threads, run_trials
from .graphs import GraphSpec
from .percolation import PercolationSample
from .walks import ClusterGraph, lazy_tmix_bound, lazy_tmix_exact, TMIX_BUDGET

CSV_VERSION = 1
P_SOURCES = ("anchor", "find_pc", "explicit")
LAWS = ("C1_volume", "delta_max", "tmix", "onearm_profile")
ONEARM_METHODS = ("census", "splitting")


def regime_scale(spec, eps):
    """``eps**3 * V``."""
    return eps**3 * spec.V


def volume_scale(spec, eps):
    """``eps**-2 log(eps**3 V)``."""
    return math.log(regime_scale(spec, eps)) / eps**2


def diameter_scale(spec, eps):
    """``eps**-1 log(eps**3 V)``."""
    return math.log(regime_scale(spec, eps)) / eps


def tmix_scale(spec, eps):
    """``eps**-3 log(eps**3 V)**2``."""
    return math.log(regime_scale(spec, eps)) ** 2 / eps**3


@dataclass(frozen=True)
class SweepCell:
    """One sweep cell; give ``epsilon`` (relative to ``p_hat``) or an explicit ``p``."""

    spec: GraphSpec
    epsilon: float | None = None
    p: float | None = None

    def __post_init__(self):
        if isinstance(self.spec, str):
            object.__setattr__(self, "spec", GraphSpec.parse(self.spec))
        if (self.epsilon is None) == (self.p is None):
            raise DomainError("a cell needs exactly one of epsilon and p")
        if self.epsilon is not None and not 0.0 <= self.epsilon <= 1.0:
            raise DomainError("epsilon must lie in [0, 1]")
        if self.p is not None and not 0.0 <= self.p <= 1.0:
            raise DomainError("p must lie in [0, 1]")

    def to_dict(self):
        return {"spec": str(self.spec), "epsilon": self.epsilon, "p": self.p}


@dataclass
class SweepPlan:
    """Cells, p-source, per-cell effort, observable toggles and test bands."""

    cells: list
    seed: int = 0
    trials: int = 10
    p_source: str = "anchor"
    js: tuple = ()
    diameters: bool = True
    tmix: bool = False
    tmix_top: int = 10
    tmix_budget: int = TMIX_BUDGET
    radii: tuple = ()
    onearm_method: str = "census"
    split_particles: int = 1000
    split_replicates: int = 8
    sampled_trials: int = 100_000
    census_budget: int = 2**24
    eps_max: float = 0.5
    regime_floor: float = 20.0
    c1_band: tuple = (0.5, 4.0)
    delta_band: tuple = (0.6, 1.4)
    pc_options: dict = field(default_factory=dict)
    threads: int | None = None

    def __post_init__(self):
        self.cells = [c if isinstance(c, SweepCell) else SweepCell(*c) for c in self.cells]
        self.js = tuple(int(j) for j in self.js)
        self.radii = tuple(int(r) for r in self.radii)

    def validate(self):
        if self.p_source not in P_SOURCES:
            raise DomainError(f"p_source must be one of {P_SOURCES}")
        if self.onearm_method not in ONEARM_METHODS:
            raise DomainError(f"onearm_method must be one of {ONEARM_METHODS}")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if any(j < 1 for j in self.js) or any(r < 0 for r in self.radii):
            raise DomainError("ranks must be >= 1 and radii >= 0")
        for c in self.cells:
            if c.p is None and self.p_source == "explicit":
                raise DomainError("explicit p-source needs p in every cell")
            if c.p is None and c.spec.degree < 2:
                raise DomainError(f"{c.spec} has no anchor 1/(degree-1)")
        return self

    def in_regime(self, cell):
        if cell.epsilon is None or cell.epsilon <= 0:
            return False
        return cell.epsilon <= self.eps_max and regime_scale(cell.spec, cell.epsilon) >= self.regime_floor

    def to_dict(self):
        """Plan fields that determine results; ``threads`` is left out."""
        out = asdict(self)
        del out["threads"]
        out["cells"] = [c.to_dict() for c in self.cells]
        out["js"] = list(self.js)
        out["radii"] = list(self.radii)
        out["c1_band"] = list(self.c1_band)
        out["delta_band"] = list(self.delta_band)
        return out


@dataclass
class SweepRow:
    """Per-seed raw values and curve summaries for one cell.

    Per-seed lists are aligned with ``seeds``; entries are ``None`` where an
    observable was not computed.  ``tmix_max`` is exact when the cluster
    fits the dense budget and the commute-time bound otherwise
    (``tmix_exact`` tells which).
    """

    index: int
    spec: str
    V: int
    epsilon: float | None
    p: float
    p_source: str
    in_regime: bool
    method: str = "census"
    seeds: list = field(default_factory=list)
    c1: list = field(default_factory=list)
    cj: dict = field(default_factory=dict)
    delta_max: list = field(default_factory=list)
    tmix_max: list = field(default_factory=list)
    tmix_rank: list = field(default_factory=list)
    tmix_exact: list = field(default_factory=list)
    tmix_checked: int = 0
    bound_violations: int = 0
    onearm: dict = field(default_factory=dict)
    boundary: dict = field(default_factory=dict)
    error: str | None = None

    def summary(self, name):
        """Mean, standard error and 10/50/90% quantiles of a per-seed list."""
        values = getattr(self, name) if isinstance(name, str) else name
        vals = np.array([v for v in values if v is not None], dtype=np.float64)
        if len(vals) == 0:
            return None
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        q = np.quantile(vals, [0.1, 0.5, 0.9])
        return {"mean": float(vals.mean()), "stderr": se, "q10": float(q[0]),
                "q50": float(q[1]), "q90": float(q[2])}

    def to_dict(self):
        out = asdict(self)
        out["summary"] = {k: self.summary(k) for k in ("c1", "delta_max", "tmix_max")}
        out["summary"].update({f"c{j}": self.summary(v) for j, v in self.cj.items()})
        out["cj"] = {str(j): v for j, v in self.cj.items()}
        return out


def resolve_p(plan, cell):
    """``(p, source)`` for a cell."""
    if cell.p is not None:
        return cell.p, "explicit"
    if plan.p_source == "find_pc":
        opts = {"seed": plan.seed, "threads": plan.threads, **plan.pc_options}
        p_hat = find_pc(cell.spec, **opts).p_hat
        return p_hat * (1 - cell.epsilon), "find_pc"
    return (1 - cell.epsilon) / (cell.spec.degree - 1), "anchor"


def _census_seed(plan, cell, sample, want_tmix):
    """Raw per-configuration values for one census seed."""
    summary = census(sample, diameters=plan.diameters or want_tmix or bool(plan.radii),
                     budget=plan.census_budget)
    out = {"c1": int(summary.sizes[0]),
           "cj": {j: jth_largest(summary, j) for j in plan.js},
           "delta_max": summary.delta_max}
    if plan.radii and plan.onearm_method == "census":
        ecc, hist, V = summary.eccentricity, summary.distance_histogram, sample.spec.V
        out["onearm"] = [np.count_nonzero(ecc >= r) / V for r in plan.radii]
        out["boundary"] = [(hist[r] if r < len(hist) else 0) / V for r in plan.radii]
    if want_tmix:
        best, rank, exact, checked, bad = 0, 1, True, 0, 0
        for k in range(1, min(plan.tmix_top, summary.n_clusters) + 1):
            g = ClusterGraph.from_census(summary, k)
            bound = lazy_tmix_bound(g)
            if g.size <= plan.tmix_budget:
                t, is_exact = lazy_tmix_exact(g, budget=plan.tmix_budget), True
                checked += 1
                bad += bound < t
            else:
                t, is_exact = bound, False
            if t > best:
                best, rank, exact = t, k, is_exact
        out.update(tmix_max=best, tmix_rank=rank, tmix_exact=exact,
                   tmix_checked=checked, bound_violations=bad)
    return out


def _fill_census_row(row, plan, cell, p, seeds, threads):
    want_tmix = plan.tmix

    def work(s):
        return _census_seed(plan, cell, PercolationSample(cell.spec, p, s), want_tmix)

    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(min(threads, len(seeds))) as pool:
            results = list(pool.map(work, seeds))
    else:
        results = [work(s) for s in seeds]
    row.c1 = [r["c1"] for r in results]
    row.cj = {j: [r["cj"][j] for r in results] for j in plan.js}
    row.delta_max = [r["delta_max"] for r in results]
    if want_tmix:
        row.tmix_max = [r["tmix_max"] for r in results]
        row.tmix_rank = [r["tmix_rank"] for r in results]
        row.tmix_exact = [r["tmix_exact"] for r in results]
        row.tmix_checked = sum(r["tmix_checked"] for r in results)
        row.bound_violations = sum(r["bound_violations"] for r in results)
    if plan.radii and plan.onearm_method == "census":
        for name, target in (("onearm", row.onearm), ("boundary", row.boundary)):
            vals = np.array([r[name] for r in results])
            se = vals.std(axis=0, ddof=1) / math.sqrt(len(vals)) if len(vals) > 1 \
                else np.zeros(len(plan.radii))
            target.update(radii=list(plan.radii), mean=vals.mean(axis=0).tolist(),
                          stderr=se.tolist(), method="census")


def _fill_sampled_row(row, plan, cell, p, cell_seed, threads):
    if not plan.radii:
        return
    r_top = max(plan.radii)
    _, layers, _ = run_trials(cell.spec, p, plan.sampled_trials, cell_seed, r_max=r_top,
                              threads=threads)
    n = len(layers)
    for name, target, vals in (("onearm", row.onearm, layers > 0),
                               ("boundary", row.boundary, layers)):
        v = vals[:, list(plan.radii)].astype(np.float64)
        target.update(radii=list(plan.radii), mean=v.mean(axis=0).tolist(),
                      stderr=(v.std(axis=0, ddof=1) / math.sqrt(n)).tolist(),
                      method="sampled")


def run_cell(plan, index):
    """Compute the row of cell ``index`` (per-cell failures land in ``row.error``)."""
    cell = plan.cells[index]
    threads = resolve_threads(plan.threads)
    cell_seed = rng.trial_seed(plan.seed, index)
    row = SweepRow(index=index, spec=str(cell.spec), V=cell.spec.V, epsilon=cell.epsilon,
                   p=float("nan"), p_source="", in_regime=plan.in_regime(cell))
    try:
        row.p, row.p_source = resolve_p(plan, cell)
        if cell.spec.V <= plan.census_budget:
            row.seeds = [rng.trial_seed(cell_seed, i) for i in range(plan.trials)]
            _fill_census_row(row, plan, cell, row.p, row.seeds, threads)
        else:
            row.method = "sampled"
            row.seeds = [cell_seed]
            _fill_sampled_row(row, plan, cell, row.p, cell_seed, threads)
        if plan.radii and plan.onearm_method == "splitting":
            prof = onearm_splitting(cell.spec, row.p, max(plan.radii), plan.split_particles,
                                    plan.split_replicates, cell_seed, threads=threads)
            idx = list(plan.radii)
            row.onearm = {"radii": idx, "mean": prof.mean[idx].tolist(),
                          "stderr": prof.stderr[idx].tolist(), "method": "splitting"}
    except PercLabError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(plan):
    """Run every cell of ``plan`` in order."""
    plan.validate()
    return [run_cell(plan, i) for i in range(len(plan.cells))]


# rare-event one-arm profile


@dataclass
class OnearmProfile:
    """Splitting estimates of ``P(∂B(r) ≠ ∅)`` for ``r = 0 .. r_max``.

    ``replicates[i, r]`` is the estimate of independent run ``i``; ``mean``
    and ``stderr`` are taken across runs.
    """

    spec: str
    p: float
    particles: int
    replicates: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray

    def to_dict(self):
        return {"spec": self.spec, "p": self.p, "particles": self.particles,
                "radii": list(range(len(self.mean))), "mean": self.mean.tolist(),
                "stderr": self.stderr.tolist()}


def _split_run(spec, thresh, r_max, particles, seed):
    """One fixed-effort splitting run.

    The exploration state at radius ``r`` is (ball of radius ``r - 1``,
    sphere at ``r``); no edge from the sphere to the outside has been
    looked at, so the next sphere may be drawn with fresh coins.  At each
    radius every particle is advanced once, the surviving fraction is
    recorded and ``particles`` survivors are resampled uniformly.
    """
    kern = _backend.kernels
    params = spec.kernel_params
    est = np.zeros(r_max + 1)
    est[0] = 1.0
    empty = np.empty(0, dtype=np.int64)
    states = [(empty, np.zeros(1, dtype=np.int64))] * particles
    prob = 1.0
    for r in range(1, r_max + 1):
        stage = rng.trial_seed(seed, r)
        alive = []
        for k, (ball, cur) in enumerate(states):
            key = rng.sample_key(rng.trial_seed(stage, k))
            nxt = kern.advance_layer(params, key, thresh, ball, cur)
            if len(nxt):
                alive.append((ball, cur, nxt))
        prob *= len(alive) / particles
        est[r] = prob
        if not alive:
            break
        pick = np.random.default_rng([seed, r]).integers(0, len(alive), particles)
        merged = {}
        states = []
        for i in pick.tolist():
            if i not in merged:
                ball, cur, nxt = alive[i]
                merged[i] = (np.union1d(ball, cur), nxt)
            states.append(merged[i])
    return est


def onearm_splitting(spec, p, r_max, particles=1000, replicates=8, seed=0, threads=None):
    """Multilevel-splitting estimate of the one-arm curve from vertex 0.

    Reaches probabilities far below ``1 / particles`` where direct sampling
    sees no events.  The product of per-level survival fractions is an
    unbiased estimate; ``replicates`` independent runs give the error bar.
    """
    if r_max < 0 or particles < 1 or replicates < 1:
        raise DomainError("need r_max >= 0, particles >= 1 and replicates >= 1")
    thresh = rng.threshold(p)
    seeds = [rng.trial_seed(seed ^ 0x5EED, i) for i in range(replicates)]
    threads = min(resolve_threads(threads), replicates)

    def work(s):
        return _split_run(spec, thresh, r_max, particles, s)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            runs = np.array(list(pool.map(work, seeds)))
    else:
        runs = np.array([work(s) for s in seeds])
    se = runs.std(axis=0, ddof=1) / math.sqrt(replicates) if replicates > 1 \
        else np.zeros(r_max + 1)
    return OnearmProfile(str(spec), float(p), particles, runs, runs.mean(axis=0), se)


# fits


@dataclass
class ProfileFit:
    """Least-squares fit of a one-arm curve to the two-piece model.

    ``log P(r) = a - log r`` for ``r <= 1/eps`` and
    ``log P(r) = b + log eps + r log(1 - eps)`` beyond, with ``a`` and ``b``
    the free constants.  ``slope`` is an unconstrained regression slope of
    ``log P`` on ``r`` over the second piece.
    """

    epsilon: float
    radii: list
    residuals: list
    residual_norm: float
    max_residual: float
    a: float | None
    b: float | None
    slope: float | None
    slope_rel_error: float | None
    dropped: int

    def to_dict(self):
        return asdict(self)


def fit_onearm_profile(radii, probs, eps):
    """Fit ``log probs`` against the two-piece one-arm model (zeros are dropped)."""
    if not 0 < eps < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    r = np.asarray(radii, dtype=np.float64)
    prob = np.asarray(probs, dtype=np.float64)
    keep = (prob > 0) & (r >= 1)
    dropped = int(np.count_nonzero(~keep))
    r, y = r[keep], np.log(prob[keep])
    if len(r) == 0:
        raise DomainError("no positive probabilities at r >= 1 to fit")
    lo = r <= 1 / eps
    hi = ~lo
    model = np.empty_like(y)
    a = b = slope = rel = None
    if lo.any():
        a = float(np.mean(y[lo] + np.log(r[lo])))
        model[lo] = a - np.log(r[lo])
    if hi.any():
        base = math.log(eps) + r[hi] * math.log(1 - eps)
        b = float(np.mean(y[hi] - base))
        model[hi] = b + base
        if np.count_nonzero(hi) >= 2:
            slope = float(np.polyfit(r[hi], y[hi], 1)[0])
            rel = abs(slope / math.log(1 - eps) - 1)
    res = y - model
    return ProfileFit(epsilon=eps, radii=r.astype(int).tolist(), residuals=res.tolist(),
                      residual_norm=float(np.linalg.norm(res)),
                      max_residual=float(np.abs(res).max()), a=a, b=b, slope=slope,
                      slope_rel_error=rel, dropped=dropped)


@dataclass
class RatioFit:
    """Per-row ratios of an observable to its predicted scale.

    ``ratios[i]`` lists the per-seed ratios of row ``i``; ``medians`` their
    medians; ``slope`` the regression slope of the medians on
    ``log(eps^3 V)``; ``dispersion`` the max/min ratio of the medians;
    ``band_fraction`` the share of all per-seed ratios inside ``band``.
    """

    law: str
    rows: list
    scales: list
    ratios: list
    medians: list
    slope: float
    dispersion: float
    band: tuple | None = None
    band_fraction: float | None = None

    def to_dict(self):
        return asdict(self)


_LAW_FIELDS = {"C1_volume": ("c1", volume_scale), "delta_max": ("delta_max", diameter_scale),
               "tmix": ("tmix_max", tmix_scale)}


def _row_spec(row):
    return GraphSpec.parse(row.spec)


def fit_ratios(rows, law, band=None):
    """Ratios of sweep observables to their predicted scales.

    ``onearm_profile`` returns one :class:`ProfileFit` per row; the other
    laws return a :class:`RatioFit` and need at least three in-regime rows.
    Out-of-regime rows and rows with errors are never used.
    """
    if law not in LAWS:
        raise DomainError(f"law must be one of {LAWS}")
    usable = [r for r in rows if r.in_regime and r.error is None]
    if law == "onearm_profile":
        usable = [r for r in usable if r.onearm]
        if not usable:
            raise DomainError("no in-regime rows with a one-arm curve")
        return [fit_onearm_profile(r.onearm["radii"], r.onearm["mean"], r.epsilon)
                for r in usable]
    if len(usable) < 3:
        raise DomainError(f"trend fitting needs >= 3 in-regime rows, got {len(usable)}")
    name, scale_fn = _LAW_FIELDS[law]
    ratios, medians, scales = [], [], []
    for r in usable:
        spec = _row_spec(r)
        s = scale_fn(spec, r.epsilon)
        vals = [v / s for v in getattr(r, name) if v is not None]
        if not vals:
            raise DomainError(f"row {r.index} has no {name} values")
        ratios.append(vals)
        medians.append(float(np.median(vals)))
        scales.append(regime_scale(spec, r.epsilon))
    slope = float(np.polyfit(np.log(scales), medians, 1)[0])
    if abs(slope) < 1e-12:
        slope = 0.0
    flat = np.concatenate([np.asarray(v) for v in ratios])
    frac = None
    if band is not None:
        frac = float(np.mean((flat >= band[0]) & (flat <= band[1])))
    return RatioFit(law=law, rows=[r.index for r in usable], scales=scales, ratios=ratios,
                    medians=medians, slope=slope,
                    dispersion=float(max(medians) / min(medians)) if min(medians) > 0
                    else math.inf,
                    band=tuple(band) if band is not None else None, band_fraction=frac)


# emission

CSV_FIELDS = ("index", "spec", "V", "epsilon", "p", "p_source", "in_regime", "method",
              "n_seeds", "c1_mean", "c1_stderr", "c1_q10", "c1_q50", "c1_q90",
              "delta_max_mean", "delta_max_stderr", "delta_max_q50",
              "tmix_max_mean", "tmix_max_stderr", "tmix_max_q50", "bound_violations",
              "onearm", "boundary", "error")


def _curve(d):
    if not d:
        return ""
    return ";".join(f"{r}:{m!r}" for r, m in zip(d["radii"], d["mean"]))


def rows_to_csv(rows):
    """CSV text: a version comment line, then a header and one line per row."""
    buf = io.StringIO()
    buf.write(f"# perc-lab sweep csv v{CSV_VERSION}\n")
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        line = {"index": r.index, "spec": r.spec, "V": r.V, "epsilon": r.epsilon, "p": r.p,
                "p_source": r.p_source, "in_regime": int(r.in_regime), "method": r.method,
                "n_seeds": len(r.seeds), "bound_violations": r.bound_violations,
                "onearm": _curve(r.onearm), "boundary": _curve(r.boundary),
                "error": r.error or ""}
        for name in ("c1", "delta_max", "tmix_max"):
            s = r.summary(name) or {}
            for stat in ("mean", "stderr", "q10", "q50", "q90"):
                key = f"{name}_{stat}"
                if key in CSV_FIELDS:
                    line[key] = s.get(stat, "")
        w.writerow(line)
    return buf.getvalue()


def sweep_document(plan, rows):
    """JSON-ready document embedding the full plan."""
    return {"version": CSV_VERSION, "plan": plan.to_dict(),
            "rows": [r.to_dict() for r in rows]}


def sweep_to_json(plan, rows):
    return json.dumps(sweep_document(plan, rows), indent=2, sort_keys=True)


def rows_from_document(doc):
    """Rebuild :class:`SweepRow` objects from :func:`sweep_document` output."""
    out = []
    for d in doc["rows"]:
        d = {k: v for k, v in d.items() if k != "summary"}
        d["cj"] = {int(j): v for j, v in d.get("cj", {}).items()}
        out.append(SweepRow(**d))
    return out
