"""Root-sampled Monte Carlo estimators and the critical-point solver.

Trial ``i`` of a run with master seed ``s`` draws its configuration and its
uniform root from ``trial_seed(s, i)`` alone, so results do not depend on
how trials are split across threads, and runs at different ``p`` with the
same seed share their random numbers (the per-trial cluster is then
monotone in ``p``).
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .errors import DomainError, PrecisionError
from .percolation import avoid_array

THREADS_ENV = "PERC_LAB_THREADS"
_MIN_CHUNK = 2048


def resolve_threads(threads=None):
    """Thread count: explicit argument, then ``PERC_LAB_THREADS``, then CPUs."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


@dataclass
class EstimatorResult:
    observable: str
    mean: float
    stderr: float
    trials: int
    master_seed: int
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def run_trials(spec, p, trials, seed, r_max=-1, size_cap=-1, avoid=(), threads=None,
               start=0):
    """Per-trial sizes, layer counts and truncation flags for trials
    ``start .. start + trials - 1``."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    from . import rng

    av = avoid_array(spec, avoid)
    thresh = rng.threshold(p)
    kern = _backend.kernels
    threads = resolve_threads(threads)
    n_chunks = min(threads, max(1, trials // _MIN_CHUNK))
    bounds = np.linspace(0, trials, n_chunks + 1).astype(np.int64)

    def work(a, b):
        return kern.batch_trials(spec.kernel_params, seed, start + int(a), int(b - a),
                                 thresh, r_max, size_cap, av)

    if n_chunks == 1:
        return work(0, trials)
    with ThreadPoolExecutor(n_chunks) as pool:
        parts = list(pool.map(work, bounds[:-1], bounds[1:]))
    sizes = np.concatenate([x[0] for x in parts])
    layers = None if r_max < 0 else np.concatenate([x[1] for x in parts])
    trunc = np.concatenate([x[2] for x in parts])
    return sizes, layers, trunc


def summarize(observable, values, seed, **params):
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EstimatorResult(observable, mean, stderr, n, int(seed), params)


def estimate_susceptibility(spec, p, trials, seed, threads=None):
    """Mean cluster size ``E_p|C(v)|`` over independent (configuration, root) pairs."""
    sizes, _, _ = run_trials(spec, p, trials, seed, threads=threads)
    return summarize("chi", sizes, seed, spec=str(spec), p=p)


def estimate_onearm(spec, p, r, trials, seed, avoid=(), threads=None):
    """Frequency of a non-empty sphere ``∂B_v(r)``, off ``avoid``."""
    if r < 0:
        raise DomainError("r must be >= 0")
    _, layers, _ = run_trials(spec, p, trials, seed, r_max=r, avoid=avoid, threads=threads)
    return summarize("onearm", layers[:, r] > 0, seed, spec=str(spec), p=p, r=r)


def estimate_boundary_volume(spec, p, r, trials, seed, avoid=(), threads=None):
    """Mean sphere size ``E_p|∂B_v(r)|``."""
    if r < 0:
        raise DomainError("r must be >= 0")
    _, layers, _ = run_trials(spec, p, trials, seed, r_max=r, avoid=avoid, threads=threads)
    return summarize("boundary", layers[:, r], seed, spec=str(spec), p=p, r=r)


def estimate_cluster_tail(spec, p, k, trials, seed, threads=None):
    """Frequency of ``|C(v)| >= k``; exploration stops once ``k`` vertices are found."""
    if k < 1:
        raise DomainError("k must be >= 1")
    sizes, _, _ = run_trials(spec, p, trials, seed, size_cap=k, threads=threads)
    return summarize("tail", sizes >= k, seed, spec=str(spec), p=p, k=k)


@dataclass
class PcEstimate:
    p_hat: float
    lam: float
    target: float
    bracket: tuple
    chi_at_p_hat: EstimatorResult
    probes: list = field(default_factory=list)

    @property
    def unresolved(self):
        """Probes decided by the point estimate at the trial cap."""
        return sum(1 for pr in self.probes if pr["decision"].startswith("unresolved"))

    def to_dict(self):
        out = asdict(self)
        out["unresolved_probes"] = self.unresolved
        out["lambda"] = out.pop("lam")
        out["bracket"] = list(self.bracket)
        return out


class _ProbeSampler:
    """Grows a common-random-numbers sample of cluster sizes at one ``p``."""

    def __init__(self, spec, p, seed, threads):
        self.spec, self.p, self.seed, self.threads = spec, p, seed, threads
        self.sizes = np.empty(0, dtype=np.int64)

    def extend_to(self, n):
        have = len(self.sizes)
        if n > have:
            more, _, _ = run_trials(self.spec, self.p, n - have, self.seed,
                                    threads=self.threads, start=have)
            self.sizes = np.concatenate([self.sizes, more])
        return summarize("chi", self.sizes[:n], self.seed, spec=str(self.spec), p=self.p)


def find_pc(spec, lam=1.0, trials_per_probe=2**22, tol=1e-4, seed=0, threads=None,
            initial_trials=4096, z=2.0, strict=False):
    """Bisection for the ``p`` solving ``chi(p) = lam * V**(1/3)``.

    Each probe doubles its trial count until the target lies outside
    ``mean +- z * stderr``.  All probes share trial seeds, so the sample mean
    at a fixed trial count is a non-decreasing function of ``p``.  A probe
    still ambiguous at ``trials_per_probe`` trials sits within Monte Carlo
    resolution of the root: with ``strict`` the search stops there,
    otherwise the side is chosen by the sample mean and the probe is
    flagged ``unresolved`` in ``probes``.

    Raises
    ------
    PrecisionError
        The target is not bracketed by ``[0, 1]``, or (``strict``) a probe
        could not be resolved; ``exc.bracket`` holds the current bracket.
    """
    if lam <= 0 or tol <= 0:
        raise DomainError("lambda and tol must be positive")
    target = lam * spec.V ** (1.0 / 3.0)
    if not 1.0 < target < spec.V:
        raise PrecisionError(
            f"target {target:.6g} is not bracketed by chi(0) = 1 and chi(1) = {spec.V}",
            bracket=(0.0, 1.0))
    lo, hi = 0.0, 1.0
    probes = []
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        sampler = _ProbeSampler(spec, mid, seed, threads)
        n = min(initial_trials, trials_per_probe)
        while True:
            est = sampler.extend_to(n)
            if target < est.mean - z * est.stderr:
                decision = "above"
                break
            if target > est.mean + z * est.stderr:
                decision = "below"
                break
            if n >= trials_per_probe:
                if strict:
                    raise PrecisionError(
                        f"probe p = {mid:.8g} unresolved after {n} trials "
                        f"(chi = {est.mean:.4f} +- {est.stderr:.4f}, target {target:.4f}); "
                        f"bracket width {hi - lo:.3g} > tol {tol:.3g}",
                        bracket=(lo, hi))
                decision = "unresolved-above" if est.mean > target else "unresolved-below"
                break
            n = min(2 * n, trials_per_probe)
        if decision.endswith("above"):
            hi = mid
        else:
            lo = mid
        probes.append({"p": mid, "trials": n, "mean": est.mean, "stderr": est.stderr,
                       "decision": decision})
    p_hat = 0.5 * (lo + hi)
    chi = _ProbeSampler(spec, p_hat, seed, threads).extend_to(trials_per_probe)
    return PcEstimate(p_hat, lam, target, (lo, hi), chi, probes)
