"""Reference implementations of the compiled kernels.

Used when the extension module is unavailable or when
``PERC_LAB_BACKEND=python``.  Outputs are identical to ``_kernels``; only
speed differs.  Whole-graph passes hash edges with numpy, per-cluster work is
plain Python.
"""

from collections import deque

import numpy as np

from . import rng

_KINDS = {0: "hypercube", 1: "torus", 2: "product"}


class _Graph:
    __slots__ = ("kind", "n", "d", "V", "deg", "pw")

    def __init__(self, params):
        code, self.n, self.d = params
        self.kind = _KINDS[code]
        self.pw = [self.n**c for c in range(self.d + 1)]
        self.V = self.pw[self.d]
        if self.kind == "hypercube":
            self.deg = self.d
        elif self.kind == "torus":
            self.deg = 2 * self.d
        else:
            self.deg = self.d * (self.n - 1)

    def nb(self, v, i):
        if self.kind == "hypercube":
            return v ^ (1 << i)
        n = self.n
        if self.kind == "torus":
            c = i >> 1
            pw = self.pw[c]
            x = (v // pw) % n
            if i & 1:
                a = x - 1 if x > 0 else n - 1
            else:
                a = x + 1 if x < n - 1 else 0
            return v + (a - x) * pw
        c, k = divmod(i, n - 1)
        pw = self.pw[c]
        x = (v // pw) % n
        a = k if k < x else k + 1
        return v + (a - x) * pw

    def edge_id(self, u, v, i):
        if u < v:
            return u * self.deg + i
        if self.kind == "hypercube":
            return v * self.deg + i
        if self.kind == "torus":
            return v * self.deg + (i ^ 1)
        n = self.n
        c = i // (n - 1)
        pw = self.pw[c]
        x = (u // pw) % n
        a = (v // pw) % n
        return v * self.deg + c * (n - 1) + (x if x < a else x - 1)


def _edge_test(key, thresh, avoid, mask=None, ebit=None):
    avoid = frozenset(int(e) for e in avoid) if avoid is not None else frozenset()
    if mask is not None:
        def ok(e):
            return e not in avoid and (mask >> int(ebit[e])) & 1 == 1
    else:
        def ok(e):
            return e not in avoid and rng.edge_is_open(key, e, thresh)
    return ok


def _bfs(g, ok, root, r_max, size_cap, visited):
    order = [root]
    visited.add(root)
    layers = [1]
    start, end, r = 0, 1, 0
    while start < end:
        if r == r_max:
            for u in order[start:end]:
                for i in range(g.deg):
                    w = g.nb(u, i)
                    if w not in visited and ok(g.edge_id(u, w, i)):
                        return order, layers, True
            return order, layers, False
        truncated = False
        for u in order[start:end]:
            for i in range(g.deg):
                w = g.nb(u, i)
                if w in visited or not ok(g.edge_id(u, w, i)):
                    continue
                if size_cap >= 0 and len(order) >= size_cap:
                    truncated = True
                    break
                visited.add(w)
                order.append(w)
            if truncated:
                break
        if len(order) > end:
            layers.append(len(order) - end)
        if truncated:
            return order, layers, True
        start, end = end, len(order)
        r += 1
    return order, layers, False


def explore(params, key, thresh, root, r_max, size_cap, avoid, want_edges,
            mask=None, ebit=None):
    g = _Graph(params)
    ok = _edge_test(key, thresh, avoid, mask, ebit)
    visited = set()
    order, layers, truncated = _bfs(g, ok, int(root), r_max, size_cap, visited)
    edges = -1
    if want_edges:
        edges = 0
        for u in order:
            for i in range(g.deg):
                w = g.nb(u, i)
                if u < w and w in visited and ok(g.edge_id(u, w, i)):
                    edges += 1
    return (np.asarray(order, dtype=np.int64), np.asarray(layers, dtype=np.int64),
            edges, truncated)


def trial_seed(master, index):
    return rng.trial_seed(master, index)


def batch_trials(params, master, start, count, thresh, r_max, size_cap, avoid):
    g = _Graph(params)
    sizes = np.zeros(count, dtype=np.int64)
    trunc = np.zeros(count, dtype=np.uint8)
    layers = np.zeros((count, r_max + 1 if r_max >= 0 else 1), dtype=np.int64)
    for t in range(count):
        seed = rng.trial_seed(master, start + t)
        ok = _edge_test(rng.mix64(seed ^ rng.KEY_SALT), thresh, avoid)
        root = rng.trial_root(seed, g.V)
        order, lay, tr = _bfs(g, ok, root, r_max, size_cap, set())
        sizes[t] = len(order)
        trunc[t] = tr
        if r_max >= 0:
            layers[t, :len(lay)] = lay
    return sizes, (layers if r_max >= 0 else None), trunc


def _open_edges(g, key, thresh, avoid):
    from .graphs import GraphSpec, edge_arrays

    if g.kind == "hypercube":
        spec = GraphSpec.hypercube(g.d)
    elif g.kind == "torus":
        spec = GraphSpec.torus(g.n, g.d)
    else:
        spec = GraphSpec.product(g.n, g.d)
    u, v, codes = edge_arrays(spec)
    keep = rng.edges_open_array(key, codes, thresh)
    if avoid is not None and len(avoid):
        keep &= ~np.isin(codes, np.asarray(avoid, dtype=np.int64))
    return u[keep], v[keep]


def census(params, key, thresh, avoid):
    g = _Graph(params)
    ou, ov = _open_edges(g, key, thresh, avoid)
    parent = list(range(g.V))
    size = [1] * g.V

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in zip(ou.tolist(), ov.tolist()):
        a, b = find(a), find(b)
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    labels = np.empty(g.V, dtype=np.int32)
    rootlab = {}
    sizes = []
    for v in range(g.V):
        r = find(v)
        if r not in rootlab:
            rootlab[r] = len(sizes)
            sizes.append(size[r])
        labels[v] = rootlab[r]
    return labels, np.asarray(sizes, dtype=np.int64), ou.astype(np.int64), ov.astype(np.int64)


def eccentricities(V, open_u, open_v, labels, sizes, min_size):
    adj = [[] for _ in range(V)]
    for a, b in zip(np.asarray(open_u).tolist(), np.asarray(open_v).tolist()):
        adj[a].append(b)
        adj[b].append(a)
    labels = np.asarray(labels)
    sizes = np.asarray(sizes)
    ecc = np.full(V, -1, dtype=np.int32)
    hist = [0]
    for v in range(V):
        s = sizes[labels[v]]
        if s == 1:
            ecc[v] = 0
            if min_size <= 1:
                hist[0] += 1
            continue
        if s < min_size:
            continue
        dist = {v: 0}
        queue = deque([v])
        while queue:
            u = queue.popleft()
            du = dist[u]
            while len(hist) <= du:
                hist.append(0)
            hist[du] += 1
            for w in adj[u]:
                if w not in dist:
                    dist[w] = du + 1
                    queue.append(w)
        ecc[v] = max(dist.values())
    return ecc, np.asarray(hist, dtype=np.int64)


def advance_layer(params, key, thresh, ball, cur):
    g = _Graph(params)
    seen = set(int(x) for x in ball) | set(int(x) for x in cur)
    nxt = []
    for u in cur:
        u = int(u)
        for i in range(g.deg):
            w = g.nb(u, i)
            if w in seen:
                continue
            if rng.edge_is_open(key, g.edge_id(u, w, i), thresh):
                seen.add(w)
                nxt.append(w)
    return np.sort(np.asarray(nxt, dtype=np.int64))


def enumerate_masks(params, ebit, n_edges, root, r_max):
    g = _Graph(params)
    N = 1 << n_edges
    layers = np.zeros((N, r_max + 1), dtype=np.int32)
    labels = np.zeros((N, g.V), dtype=np.int16)
    c1 = np.zeros(N, dtype=np.int32)
    for m in range(N):
        ok = _edge_test(0, 0, None, m, ebit)
        _, lay, _ = _bfs(g, ok, root, r_max, -1, set())
        layers[m, :len(lay)] = lay
        lab = np.full(g.V, -1, dtype=np.int16)
        visited = set()
        k = 0
        big = 0
        for v in range(g.V):
            if lab[v] >= 0:
                continue
            comp, _, _ = _bfs(g, ok, v, -1, -1, visited)
            lab[comp] = k
            big = max(big, len(comp))
            k += 1
        labels[m] = lab
        c1[m] = big
    return layers, labels, c1
