# distutils: language = c++
"""Compiled inner loops: edge hashing, BFS, union-find, all-sources BFS.

Every function mirrors one in ``_purepy`` and must return identical values.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int16_t, int32_t, int64_t, uint8_t, uint64_t
from libc.stdlib cimport calloc, free
from libcpp.unordered_set cimport unordered_set
from libcpp.vector cimport vector

cnp.import_array()

cdef int64_t DENSE_LIMIT = 134217728  # 2**27 vertices

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t KEY_SALT = 0x5851F42D4C957F2DULL
cdef uint64_t TRIAL_SALT = 0xD1B54A32D192ED03ULL
cdef uint64_t ROOT_SALT = 0xA0761D6478BD642FULL

cdef enum:
    CUBE = 0
    TORUS = 1
    PRODUCT = 2


cdef struct Graph:
    int kind
    int64_t n
    int64_t d
    int64_t V
    int64_t deg
    int64_t pw[64]


cdef struct EdgeSrc:
    int masked
    uint64_t key
    uint64_t thresh
    uint64_t mask
    const int64_t* ebit
    const int64_t* avoid
    int64_t navoid


cdef struct VSet:
    int dense
    uint64_t* bits
    unordered_set[int64_t]* hs


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef int init_graph(Graph* g, tuple params) except -1:
    cdef int64_t c
    g.kind = params[0]
    g.n = params[1]
    g.d = params[2]
    if g.d > 63:
        raise ValueError("too many coordinates")
    g.pw[0] = 1
    for c in range(1, g.d + 1):
        g.pw[c] = g.pw[c - 1] * g.n
    g.V = g.pw[g.d]
    if g.kind == CUBE:
        g.deg = g.d
    elif g.kind == TORUS:
        g.deg = 2 * g.d
    else:
        g.deg = g.d * (g.n - 1)
    return 0


cdef inline int64_t nb(const Graph* g, int64_t v, int64_t i) noexcept nogil:
    cdef int64_t c, k, x, a
    if g.kind == CUBE:
        return v ^ ((<int64_t>1) << i)
    if g.kind == TORUS:
        c = i >> 1
        x = (v // g.pw[c]) % g.n
        if i & 1:
            a = x - 1 if x > 0 else g.n - 1
        else:
            a = x + 1 if x < g.n - 1 else 0
        return v + (a - x) * g.pw[c]
    c = i // (g.n - 1)
    k = i % (g.n - 1)
    x = (v // g.pw[c]) % g.n
    a = k if k < x else k + 1
    return v + (a - x) * g.pw[c]


cdef inline int64_t edge_id(const Graph* g, int64_t u, int64_t v, int64_t i) noexcept nogil:
    cdef int64_t c, x, a
    if u < v:
        return u * g.deg + i
    if g.kind == CUBE:
        return v * g.deg + i
    if g.kind == TORUS:
        return v * g.deg + (i ^ 1)
    c = i // (g.n - 1)
    x = (u // g.pw[c]) % g.n
    a = (v // g.pw[c]) % g.n
    return v * g.deg + c * (g.n - 1) + (x if x < a else x - 1)


cdef inline bint in_sorted(const int64_t* arr, int64_t n, int64_t x) noexcept nogil:
    cdef int64_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo < n and arr[lo] == x


cdef inline bint edge_ok(const EdgeSrc* s, int64_t e) noexcept nogil:
    if s.navoid and in_sorted(s.avoid, s.navoid, e):
        return False
    if s.masked:
        return (s.mask >> s.ebit[e]) & 1
    return (mix64(s.key + (<uint64_t>e + 1) * GOLDEN) >> 11) < s.thresh


cdef int vset_init(VSet* s, int64_t V) noexcept nogil:
    s.hs = NULL
    s.bits = NULL
    if V <= DENSE_LIMIT:
        s.dense = 1
        s.bits = <uint64_t*> calloc((V >> 6) + 1, sizeof(uint64_t))
        return 0 if s.bits != NULL else -1
    s.dense = 0
    s.hs = new unordered_set[int64_t]()
    return 0


cdef void vset_free(VSet* s) noexcept nogil:
    if s.bits != NULL:
        free(s.bits)
        s.bits = NULL
    if s.hs != NULL:
        del s.hs
        s.hs = NULL


cdef inline bint vset_has(const VSet* s, int64_t v) noexcept nogil:
    if s.dense:
        return (s.bits[v >> 6] >> (v & 63)) & 1
    return s.hs.count(v) > 0


cdef inline void vset_add(VSet* s, int64_t v) noexcept nogil:
    if s.dense:
        s.bits[v >> 6] |= (<uint64_t>1) << (v & 63)
    else:
        s.hs.insert(v)


cdef inline void vset_clear(VSet* s, const vector[int64_t]& order) noexcept nogil:
    cdef size_t j
    if s.dense:
        for j in range(order.size()):
            s.bits[order[j] >> 6] = 0
    else:
        s.hs.clear()


cdef bint bfs(const Graph* g, const EdgeSrc* s, VSet* vs, int64_t root,
              int64_t r_max, int64_t size_cap,
              vector[int64_t]& order, vector[int64_t]& layers) noexcept nogil:
    """Layered BFS from ``root``; returns the truncation flag."""
    cdef int64_t start = 0, end = 1, r = 0, idx, u, w, i
    cdef bint truncated = False
    order.clear()
    layers.clear()
    order.push_back(root)
    vset_add(vs, root)
    layers.push_back(1)
    while start < end:
        if r == r_max:
            # stopped by the radius cap: truncated iff the frontier extends
            for idx in range(start, end):
                u = order[idx]
                for i in range(g.deg):
                    w = nb(g, u, i)
                    if not vset_has(vs, w) and edge_ok(s, edge_id(g, u, w, i)):
                        return True
            return False
        for idx in range(start, end):
            u = order[idx]
            for i in range(g.deg):
                w = nb(g, u, i)
                if vset_has(vs, w):
                    continue
                if not edge_ok(s, edge_id(g, u, w, i)):
                    continue
                if size_cap >= 0 and <int64_t>order.size() >= size_cap:
                    truncated = True
                    break
                vset_add(vs, w)
                order.push_back(w)
            if truncated:
                break
        if <int64_t>order.size() > end:
            layers.push_back(<int64_t>order.size() - end)
        if truncated:
            return True
        start = end
        end = order.size()
        r += 1
    return False


cdef int64_t count_edges(const Graph* g, const EdgeSrc* s, const VSet* vs,
                         const vector[int64_t]& order) noexcept nogil:
    cdef int64_t total = 0, u, w, i
    cdef size_t j
    for j in range(order.size()):
        u = order[j]
        for i in range(g.deg):
            w = nb(g, u, i)
            if u < w and vset_has(vs, w) and edge_ok(s, edge_id(g, u, w, i)):
                total += 1
    return total


cdef void init_src(EdgeSrc* s, uint64_t key, uint64_t thresh, object avoid,
                   object mask, object ebit):
    cdef const int64_t[::1] av
    cdef const int64_t[::1] eb
    s.masked = 0
    s.key = key
    s.thresh = thresh
    s.mask = 0
    s.ebit = NULL
    s.avoid = NULL
    s.navoid = 0
    if avoid is not None and len(avoid):
        av = avoid
        s.avoid = &av[0]
        s.navoid = av.shape[0]
    if mask is not None:
        eb = ebit
        s.masked = 1
        s.mask = mask
        s.ebit = &eb[0]


def explore(tuple params, uint64_t key, uint64_t thresh, int64_t root,
            int64_t r_max, int64_t size_cap, avoid, bint want_edges,
            mask=None, ebit=None):
    """Explore the cluster of ``root``.

    Returns ``(vertices_in_bfs_order, layers, edge_count, truncated)``;
    ``edge_count`` is -1 unless requested.
    """
    cdef Graph g
    cdef EdgeSrc s
    cdef VSet vs
    cdef vector[int64_t] order, layers
    cdef bint truncated
    cdef int64_t edges = -1
    init_graph(&g, params)
    # keep the avoid/ebit buffers alive for the duration of the call
    avoid_arr = None if avoid is None else np.ascontiguousarray(avoid, dtype=np.int64)
    ebit_arr = None if ebit is None else np.ascontiguousarray(ebit, dtype=np.int64)
    init_src(&s, key, thresh, avoid_arr, mask, ebit_arr)
    if vset_init(&vs, g.V) != 0:
        raise MemoryError()
    try:
        with nogil:
            truncated = bfs(&g, &s, &vs, root, r_max, size_cap, order, layers)
            if want_edges:
                edges = count_edges(&g, &s, &vs, order)
    finally:
        vset_free(&vs)
    out_order = np.empty(order.size(), dtype=np.int64)
    out_layers = np.empty(layers.size(), dtype=np.int64)
    cdef int64_t[::1] oo = out_order
    cdef int64_t[::1] ol = out_layers
    cdef size_t j
    for j in range(order.size()):
        oo[j] = order[j]
    for j in range(layers.size()):
        ol[j] = layers[j]
    return out_order, out_layers, int(edges), bool(truncated)


cdef inline uint64_t _trial_seed(uint64_t master, uint64_t index) noexcept nogil:
    return mix64(mix64(master ^ TRIAL_SALT) + (index + 1) * GOLDEN)


def trial_seed(uint64_t master, uint64_t index):
    return _trial_seed(master, index)


def batch_trials(tuple params, uint64_t master, int64_t start, int64_t count,
                 uint64_t thresh, int64_t r_max, int64_t size_cap, avoid):
    """Run trials ``start .. start+count-1``: fresh configuration, uniform root.

    Returns ``(sizes, layers, truncated)``; ``layers`` has shape
    ``(count, r_max + 1)`` and is ``None`` when ``r_max < 0``.
    """
    cdef Graph g
    cdef EdgeSrc s
    cdef VSet vs
    cdef vector[int64_t] order, lay
    cdef int64_t t, j, L
    cdef uint64_t seed
    init_graph(&g, params)
    avoid_arr = None if avoid is None else np.ascontiguousarray(avoid, dtype=np.int64)
    init_src(&s, 0, thresh, avoid_arr, None, None)
    sizes = np.zeros(count, dtype=np.int64)
    trunc = np.zeros(count, dtype=np.uint8)
    L = r_max + 1 if r_max >= 0 else 1
    layers = np.zeros((count, L), dtype=np.int64)
    cdef int64_t[::1] sz = sizes
    cdef uint8_t[::1] tr = trunc
    cdef int64_t[:, ::1] ly = layers
    if vset_init(&vs, g.V) != 0:
        raise MemoryError()
    try:
        with nogil:
            for t in range(count):
                seed = _trial_seed(master, start + t)
                s.key = mix64(seed ^ KEY_SALT)
                tr[t] = bfs(&g, &s, &vs, mix64(seed ^ ROOT_SALT) % <uint64_t>g.V,
                            r_max, size_cap, order, lay)
                sz[t] = order.size()
                if r_max >= 0:
                    for j in range(<int64_t>lay.size()):
                        ly[t, j] = lay[j]
                vset_clear(&vs, order)
    finally:
        vset_free(&vs)
    return sizes, (layers if r_max >= 0 else None), trunc


cdef inline int32_t uf_find(int32_t* parent, int32_t x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def census(tuple params, uint64_t key, uint64_t thresh, avoid):
    """Union-find over every edge in canonical order.

    Returns ``(labels, sizes, open_u, open_v)``: component labels numbered
    by smallest vertex, component sizes, and the open edge list.
    """
    cdef Graph g
    cdef EdgeSrc s
    init_graph(&g, params)
    if g.V >= 2**31:
        raise ValueError("census limited to V < 2**31")
    avoid_arr = None if avoid is None else np.ascontiguousarray(avoid, dtype=np.int64)
    init_src(&s, key, thresh, avoid_arr, None, None)
    parent_arr = np.arange(g.V, dtype=np.int32)
    size_arr = np.ones(g.V, dtype=np.int32)
    cdef int32_t[::1] parent = parent_arr
    cdef int32_t[::1] usz = size_arr
    cdef vector[int64_t] ou, ov
    cdef int64_t u, w, i
    cdef int32_t a, b
    with nogil:
        for u in range(g.V):
            for i in range(g.deg):
                w = nb(&g, u, i)
                if w < u or not edge_ok(&s, u * g.deg + i):
                    continue
                ou.push_back(u)
                ov.push_back(w)
                a = uf_find(&parent[0], <int32_t>u)
                b = uf_find(&parent[0], <int32_t>w)
                if a == b:
                    continue
                if usz[a] < usz[b]:
                    a, b = b, a
                parent[b] = a
                usz[a] += usz[b]
    labels_arr = np.empty(g.V, dtype=np.int32)
    cdef int32_t[::1] lab = labels_arr
    cdef int32_t[::1] rootlab = np.full(g.V, -1, dtype=np.int32)
    cdef vector[int64_t] sizes
    cdef int32_t r
    with nogil:
        for u in range(g.V):
            r = uf_find(&parent[0], <int32_t>u)
            if rootlab[r] < 0:
                rootlab[r] = <int32_t>sizes.size()
                sizes.push_back(usz[r])
            lab[u] = rootlab[r]
    out_sizes = np.empty(sizes.size(), dtype=np.int64)
    out_u = np.empty(ou.size(), dtype=np.int64)
    out_v = np.empty(ov.size(), dtype=np.int64)
    cdef int64_t[::1] os_ = out_sizes
    cdef int64_t[::1] ou_ = out_u
    cdef int64_t[::1] ov_ = out_v
    cdef size_t j
    for j in range(sizes.size()):
        os_[j] = sizes[j]
    for j in range(ou.size()):
        ou_[j] = ou[j]
        ov_[j] = ov[j]
    return labels_arr, out_sizes, out_u, out_v


def eccentricities(int64_t V, open_u, open_v, labels, sizes, int64_t min_size):
    """Eccentricity of every vertex inside its open cluster.

    BFS runs from every vertex of each cluster with at least ``min_size``
    vertices; other vertices get eccentricity -1 (0 for singletons).  Also
    returns the histogram of ordered-pair distances over the clusters that
    were searched (singletons contribute to distance 0).
    """
    cdef const int64_t[::1] eu = np.ascontiguousarray(open_u, dtype=np.int64)
    cdef const int64_t[::1] ev = np.ascontiguousarray(open_v, dtype=np.int64)
    cdef const int32_t[::1] lab = np.ascontiguousarray(labels, dtype=np.int32)
    cdef const int64_t[::1] csz = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef int64_t E = eu.shape[0], j, k, v, u, w, head, far
    offsets_arr = np.zeros(V + 1, dtype=np.int64)
    cdef int64_t[::1] off = offsets_arr
    for j in range(E):
        off[eu[j] + 1] += 1
        off[ev[j] + 1] += 1
    for j in range(V):
        off[j + 1] += off[j]
    adj_arr = np.empty(2 * E, dtype=np.int64)
    cdef int64_t[::1] adj = adj_arr
    fill_arr = offsets_arr[:-1].copy()
    cdef int64_t[::1] fill = fill_arr
    for j in range(E):
        adj[fill[eu[j]]] = ev[j]
        fill[eu[j]] += 1
        adj[fill[ev[j]]] = eu[j]
        fill[ev[j]] += 1
    ecc_arr = np.full(V, -1, dtype=np.int32)
    cdef int32_t[::1] ecc = ecc_arr
    dist_arr = np.full(V, -1, dtype=np.int32)
    cdef int32_t[::1] dist = dist_arr
    cdef vector[int64_t] queue
    cdef vector[int64_t] hist
    hist.push_back(0)
    with nogil:
        for v in range(V):
            if csz[lab[v]] == 1:
                ecc[v] = 0
                if min_size <= 1:
                    hist[0] += 1
                continue
            if csz[lab[v]] < min_size:
                continue
            queue.clear()
            queue.push_back(v)
            dist[v] = 0
            head = 0
            far = 0
            while head < <int64_t>queue.size():
                u = queue[head]
                head += 1
                if dist[u] > far:
                    far = dist[u]
                while <int64_t>hist.size() <= dist[u]:
                    hist.push_back(0)
                hist[dist[u]] += 1
                for k in range(off[u], off[u + 1]):
                    w = adj[k]
                    if dist[w] < 0:
                        dist[w] = dist[u] + 1
                        queue.push_back(w)
            ecc[v] = <int32_t>far
            for k in range(<int64_t>queue.size()):
                dist[queue[k]] = -1
    out_hist = np.empty(hist.size(), dtype=np.int64)
    cdef int64_t[::1] oh = out_hist
    for j in range(<int64_t>hist.size()):
        oh[j] = hist[j]
    return ecc_arr, out_hist


def advance_layer(tuple params, uint64_t key, uint64_t thresh, ball, cur):
    """Next BFS layer with fresh edge coins.

    ``ball`` holds every vertex at distance below the current radius and
    ``cur`` the current sphere, both sorted.  Each edge from ``cur`` to a
    vertex outside ``ball | cur`` is unrevealed by the exploration so far
    and is examined exactly once.  Returns the sorted new layer.
    """
    cdef Graph g
    init_graph(&g, params)
    cdef const int64_t[::1] bv = np.ascontiguousarray(ball, dtype=np.int64)
    cdef const int64_t[::1] cv = np.ascontiguousarray(cur, dtype=np.int64)
    cdef unordered_set[int64_t] added
    cdef vector[int64_t] nxt
    cdef int64_t j, u, w, i
    cdef int64_t nb_ = bv.shape[0], nc = cv.shape[0]
    cdef const int64_t* bp = &bv[0] if nb_ else NULL
    cdef const int64_t* cp = &cv[0] if nc else NULL
    with nogil:
        for j in range(nc):
            u = cp[j]
            for i in range(g.deg):
                w = nb(&g, u, i)
                if in_sorted(bp, nb_, w) or in_sorted(cp, nc, w) or added.count(w):
                    continue
                if (mix64(key + (<uint64_t>edge_id(&g, u, w, i) + 1) * GOLDEN) >> 11) < thresh:
                    added.insert(w)
                    nxt.push_back(w)
    out = np.empty(nxt.size(), dtype=np.int64)
    cdef int64_t[::1] o = out
    for j in range(<int64_t>nxt.size()):
        o[j] = nxt[j]
    out.sort()
    return out


def enumerate_masks(tuple params, ebit, int64_t n_edges, int64_t root, int64_t r_max):
    """Per-configuration observables for every edge assignment.

    Configuration ``mask`` opens edge ``e`` iff bit ``ebit[e]`` of ``mask`` is
    set.  Returns ``(root_layers, labels, c1)`` with shapes
    ``(2**n_edges, r_max + 1)``, ``(2**n_edges, V)`` and ``(2**n_edges,)``.
    """
    cdef Graph g
    cdef EdgeSrc s
    cdef VSet vs
    init_graph(&g, params)
    if n_edges > 24:
        raise ValueError("too many edges to enumerate")
    ebit_arr = np.ascontiguousarray(ebit, dtype=np.int64)
    init_src(&s, 0, 0, None, 0, ebit_arr)
    cdef int64_t N = (<int64_t>1) << n_edges, m, j, v, lab, big
    layers = np.zeros((N, r_max + 1), dtype=np.int32)
    labels = np.zeros((N, g.V), dtype=np.int16)
    c1 = np.zeros(N, dtype=np.int32)
    cdef int32_t[:, ::1] ly = layers
    cdef int16_t[:, ::1] lb = labels
    cdef int32_t[::1] c1v = c1
    cdef vector[int64_t] order, lay, comp
    if vset_init(&vs, g.V) != 0:
        raise MemoryError()
    try:
        with nogil:
            for m in range(N):
                s.mask = <uint64_t>m
                bfs(&g, &s, &vs, root, r_max, -1, order, lay)
                for j in range(<int64_t>lay.size()):
                    ly[m, j] = <int32_t>lay[j]
                vset_clear(&vs, order)
                # full component labelling with the same BFS
                for v in range(g.V):
                    lb[m, v] = -1
                lab = 0
                big = 0
                for v in range(g.V):
                    if lb[m, v] >= 0:
                        continue
                    bfs(&g, &s, &vs, v, -1, -1, comp, lay)
                    for j in range(<int64_t>comp.size()):
                        lb[m, comp[j]] = <int16_t>lab
                    if <int64_t>comp.size() > big:
                        big = comp.size()
                    lab += 1
                # vertices of every component remain marked until the end
                for v in range(g.V):
                    vs.bits[v >> 6] = 0
                c1v[m] = <int32_t>big
    finally:
        vset_free(&vs)
    return layers, labels, c1
