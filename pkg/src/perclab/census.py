"""Whole-configuration cluster census."""

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DomainError, ResourceError
from .percolation import avoid_array

DEFAULT_BUDGET = 2**26


@dataclass
class CensusSummary:
    """Statistics of every cluster of one configuration.

    ``sizes`` is non-increasing.  ``z_geq[k]`` counts vertices in clusters of
    at least ``k`` vertices; ``d_r[r]`` counts vertices ``v`` with a
    non-empty sphere ``∂B_v(r)`` whose cluster is no larger than the
    configured size limit.  The arrays in the trailing fields are kept for
    follow-up work on individual clusters and are not serialised.
    """

    sizes: np.ndarray
    max_edge_count: int
    delta_max: int | None = None
    z_geq: dict = field(default_factory=dict)
    d_r: dict = field(default_factory=dict)
    labels: np.ndarray = field(default=None, repr=False)
    cluster_sizes: np.ndarray = field(default=None, repr=False)
    cluster_edges: np.ndarray = field(default=None, repr=False)
    cluster_diameters: np.ndarray = field(default=None, repr=False)
    open_edges: tuple = field(default=None, repr=False)
    eccentricity: np.ndarray = field(default=None, repr=False)
    distance_histogram: np.ndarray = field(default=None, repr=False)

    @property
    def n_clusters(self):
        return len(self.sizes)

    def ranked_labels(self):
        """Cluster labels ordered by decreasing size (ties by label)."""
        return np.lexsort((np.arange(len(self.cluster_sizes)), -self.cluster_sizes))

    def cluster_vertices(self, rank):
        """Vertices of the ``rank``-th largest cluster (rank 1 is the largest)."""
        label = self.ranked_labels()[rank - 1]
        return np.flatnonzero(self.labels == label)

    def cluster_edge_list(self, rank):
        """Open edges ``(u, v)`` of the ``rank``-th largest cluster."""
        label = self.ranked_labels()[rank - 1]
        ou, ov = self.open_edges
        keep = self.labels[ou] == label
        return ou[keep], ov[keep]

    def to_dict(self):
        out = {
            "V": int(self.sizes.sum()),
            "n_clusters": self.n_clusters,
            "sizes": self.sizes.tolist(),
            "max_edge_count": self.max_edge_count,
        }
        if self.delta_max is not None:
            out["delta_max"] = self.delta_max
        if self.z_geq:
            out["z_geq"] = {str(k): v for k, v in self.z_geq.items()}
        if self.d_r:
            out["d_r"] = {str(k): v for k, v in self.d_r.items()}
        return out


def census(sample, diameters=False, z_thresholds=(), d_radii=(), d_size_limit=None,
           avoid=(), budget=DEFAULT_BUDGET):
    """Decompose the configuration ``sample`` into clusters.

    Parameters
    ----------
    sample : PercolationSample
    diameters : bool
        Compute every cluster's diameter (all-sources BFS on clusters of two
        or more vertices).  Implied by ``d_radii``.
    z_thresholds : iterable of int
        Values ``k`` for which to report ``Z_{>=k}``.
    d_radii : iterable of int
        Radii ``r`` for which to report ``D_r``.
    d_size_limit : float or None
        Cluster-size ceiling in the definition of ``D_r`` (callers pass
        ``5 eps^-2 log(eps^3 V)``); ``None`` disables the filter.
    budget : int
        Largest vertex count accepted.

    Raises
    ------
    ResourceError
        If ``V`` exceeds ``budget``; use the sampled estimators instead.
    """
    spec = sample.spec
    if spec.V > budget:
        raise ResourceError(
            f"{spec} has {spec.V} vertices, over the census budget of {budget}; "
            "use the root-sampled estimators instead")
    labels, csizes, ou, ov = _backend.kernels.census(
        spec.kernel_params, sample.key, sample.thresh, avoid_array(spec, avoid))
    cedges = np.bincount(labels[ou], minlength=len(csizes)) if len(ou) else \
        np.zeros(len(csizes), dtype=np.int64)
    summary = CensusSummary(
        sizes=np.sort(csizes)[::-1],
        max_edge_count=int(cedges.max()),
        labels=labels,
        cluster_sizes=csizes,
        cluster_edges=cedges,
        open_edges=(ou, ov),
    )
    for k in z_thresholds:
        k = int(k)
        summary.z_geq[k] = int(csizes[csizes >= k].sum())
    d_radii = [int(r) for r in d_radii]
    if diameters or d_radii:
        ecc, hist = _backend.kernels.eccentricities(spec.V, ou, ov, labels, csizes, 2)
        diam = np.zeros(len(csizes), dtype=np.int64)
        np.maximum.at(diam, labels, ecc)
        summary.eccentricity = ecc
        summary.distance_histogram = hist
        summary.cluster_diameters = diam
        summary.delta_max = int(diam.max())
        if d_radii:
            vsize = csizes[labels]
            small = np.ones(spec.V, dtype=bool) if d_size_limit is None else vsize <= d_size_limit
            for r in d_radii:
                summary.d_r[r] = int(np.count_nonzero(small & (ecc >= r)))
    return summary


def jth_largest(summary, j):
    """Size of the ``j``-th largest cluster, or 0 when there are fewer."""
    if j < 1:
        raise DomainError("rank j must be >= 1")
    return int(summary.sizes[j - 1]) if j <= len(summary.sizes) else 0
