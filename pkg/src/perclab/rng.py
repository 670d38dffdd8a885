"""Counter-based randomness.

Every random quantity in the package is a pure function of a 64-bit key and
a counter, obtained from the splitmix64 output function.  Edge openness is
``u(key, edge) < p`` with one uniform per edge, which couples all values of
``p`` monotonically for a fixed seed.

The compiled kernels implement the same arithmetic; the functions here are
the scalar and vectorised reference used by the fallback backend.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
KEY_SALT = 0x5851F42D4C957F2D
TRIAL_SALT = 0xD1B54A32D192ED03
ROOT_SALT = 0xA0761D6478BD642F

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def sample_key(seed):
    """Hash key of the configuration with master seed ``seed``."""
    return mix64(seed ^ KEY_SALT)


def trial_seed(master_seed, index):
    """Seed of trial ``index`` under ``master_seed``; independent of trial order."""
    base = mix64(master_seed ^ TRIAL_SALT)
    return mix64(base + (index + 1) * GOLDEN)


def trial_root(seed, n_vertices):
    return mix64(seed ^ ROOT_SALT) % n_vertices


def threshold(p):
    """Integer threshold ``t`` such that an edge is open iff ``u53 < t``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    return math.ceil(float(p) * 2.0**53)


def edge_hash(key, edge):
    return mix64(key + (edge + 1) * GOLDEN)


def edge_uniform(key, edge):
    return (edge_hash(key, edge) >> 11) * 2.0**-53


def edge_is_open(key, edge, thresh):
    return (edge_hash(key, edge) >> 11) < thresh


# vectorised variants; uint64 arithmetic wraps modulo 2**64 as required


def mix64_array(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def edges_open_array(key, edges, thresh):
    edges = np.asarray(edges, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key) + (edges + np.uint64(1)) * np.uint64(GOLDEN)
    return (mix64_array(z) >> np.uint64(11)) < np.uint64(thresh)
