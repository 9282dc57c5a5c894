# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled engines: lock-free graph, sequential and coarse-locked baselines."""

import threading
from contextlib import contextmanager

from libc.stdint cimport int64_t, uint64_t, uintptr_t
from libc.string cimport memset

from .outcomes import (
    INCONCLUSIVE,
    KEY_MAX,
    KEY_MIN,
    OUTCOME_CODES,
    KeyDomainError,
    ReclamationError,
    RegistryFullError,
    SelfLoopError,
)
from .reclaim import OP_KINDS

cdef extern from "csrc/nbgraph.h" nogil:
    int NBG_N_OPS
    int NBG_HIST_BUCKETS
    int NBG_PATH_NONE
    int NBG_PATH_FOUND
    int NBG_PATH_INCONCLUSIVE
    int NBG_ENGINE_LOCKFREE
    int NBG_ENGINE_COARSE
    int NBG_ENGINE_SEQ
    uintptr_t NBG_MARK
    uintptr_t NBG_TAG_MASK

    ctypedef struct nbg_hdr:
        int retired
        int stage

    ctypedef struct nbg_enode:
        nbg_hdr hdr
        int64_t key
        nbg_vnode *ptv
        uintptr_t enxt

    ctypedef struct nbg_vnode:
        nbg_hdr hdr
        int64_t key
        uintptr_t vnxt
        nbg_enode *eh
        uint64_t ecnt
        uint64_t refs
        uint64_t n_add
        uint64_t n_rem
        uint64_t n_purge

    ctypedef struct nbg_rec:
        nbg_vnode *n
        int64_t key
        uint64_t lecnt
        int64_t p

    ctypedef struct nbg_tree:
        nbg_rec *recs
        size_t len
        size_t cap
        int found

    ctypedef struct nbg_path:
        int64_t *keys
        size_t len
        size_t cap

    ctypedef struct nbg_tctx:
        uint64_t steps
        uint64_t collections
        uint64_t visit
        int depth

    ctypedef void (*nbg_hook)(void *arg, int what) noexcept

    ctypedef struct nbg_graph:
        nbg_vnode *vh
        nbg_vnode *vt
        nbg_enode *et
        int max_threads
        int reclaim
        uint64_t epoch
        uint64_t retired_total
        uint64_t freed_total
        uint64_t freed_vertices
        uint64_t freed_edges
        uint64_t errors
        nbg_hook pause_cb
        void *pause_arg
        nbg_hook collect_cb
        void *collect_arg
        nbg_tctx *threads

    uintptr_t nbg_mark_ref(uintptr_t w)
    uintptr_t nbg_unmark_ref(uintptr_t w)
    int nbg_is_marked(uintptr_t w)

    nbg_graph *nbg_create(int max_threads, int reclaim, int eager_unlink, int instrument)
    void nbg_destroy(nbg_graph *g)
    int nbg_register(nbg_graph *g)
    int nbg_unregister(nbg_graph *g, int tid)
    void nbg_pin(nbg_graph *g, int tid)
    void nbg_unpin(nbg_graph *g, int tid)
    long nbg_quiesce(nbg_graph *g, int tid)
    long nbg_linked_retired(nbg_graph *g)

    int nbg_add_vertex(nbg_graph *g, int tid, int64_t k)
    int nbg_remove_vertex(nbg_graph *g, int tid, int64_t k)
    int nbg_contains_vertex(nbg_graph *g, int tid, int64_t k)
    int nbg_add_edge(nbg_graph *g, int tid, int64_t k, int64_t l)
    int nbg_remove_edge(nbg_graph *g, int tid, int64_t k, int64_t l)
    int nbg_contains_edge(nbg_graph *g, int tid, int64_t k, int64_t l)
    int nbg_get_path(nbg_graph *g, int tid, int64_t k, int64_t l, int max_rounds, nbg_path *out)

    int nbg_tree_collect(nbg_graph *g, int tid, int64_t k, int64_t l, nbg_tree *out)
    int nbg_compare_tree(const nbg_tree *ot, const nbg_tree *nt)
    int nbg_compare_path(const nbg_tree *ot, const nbg_tree *nt)
    void nbg_tree_free(nbg_tree *t)
    void nbg_path_free(nbg_path *p)

    void nbg_loc_v(nbg_graph *g, int tid, int64_t start, int use_start, int64_t k, int64_t *pk, int64_t *ck)
    void nbg_loc_c(nbg_graph *g, int tid, int64_t start, int use_start, int64_t k, int64_t *pk, int64_t *ck)
    int nbg_loc_e(nbg_graph *g, int tid, int64_t k, int64_t l, int64_t *pk, int64_t *ck)
    int nbg_pair(nbg_graph *g, int tid, int64_t k, int64_t l, int helping)

    nbg_vnode *nbg_find_physical(nbg_graph *g, int64_t k)
    int nbg_inject_vertex_mark(nbg_graph *g, int64_t k)
    int nbg_inject_edge_mark(nbg_graph *g, int64_t k, int64_t l)
    void nbg_op_stats(nbg_graph *g, uint64_t *cas, uint64_t *faa)
    void nbg_reset_op_stats(nbg_graph *g)
    int nbg_check_structure(nbg_graph *g)

    ctypedef struct nbg_seq:
        pass
    nbg_seq *nbg_seq_create(int locked)
    void nbg_seq_destroy(nbg_seq *s)
    int nbg_seq_add_vertex(nbg_seq *s, int64_t k)
    int nbg_seq_remove_vertex(nbg_seq *s, int64_t k)
    int nbg_seq_contains_vertex(nbg_seq *s, int64_t k)
    int nbg_seq_add_edge(nbg_seq *s, int64_t k, int64_t l)
    int nbg_seq_remove_edge(nbg_seq *s, int64_t k, int64_t l)
    int nbg_seq_contains_edge(nbg_seq *s, int64_t k, int64_t l)
    int nbg_seq_get_path(nbg_seq *s, int64_t k, int64_t l, nbg_path *out)
    void nbg_seq_walk(nbg_seq *s, void (*vertex)(void *, int64_t) noexcept,
                      void (*edge)(void *, int64_t, int64_t) noexcept, void *arg)

    ctypedef struct nbg_bench_cfg:
        int engine
        void *graph
        int threads
        double duration_s
        int mix[7]
        int64_t key_lo
        int64_t key_hi
        uint64_t seed
        int scan_cap

    ctypedef struct nbg_bench_out:
        uint64_t ops[7]
        uint64_t total
        uint64_t inconclusive
        double elapsed_s
        uint64_t hist[1]

    uint64_t nbg_splitmix64(uint64_t *state)
    uint64_t nbg_stream_seed(uint64_t seed, int tid)
    int nbg_hist_bucket(uint64_t ns)
    void nbg_draw_op(uint64_t *state, const int *mix, int64_t lo, int64_t hi, int *op, int64_t *k, int64_t *l)
    int nbg_bench_run(const nbg_bench_cfg *cfg, nbg_bench_out *out)
    long nbg_cas_race(int threads, int rounds)
    uint64_t nbg_faa_stress(int threads, uint64_t per_thread)

cdef extern from "stdlib.h" nogil:
    void *calloc(size_t n, size_t size)
    void free(void *p)

_WHERE = ("add_vertex", "remove_vertex", "contains_vertex", "add_edge", "remove_edge", "contains_edge", "get_path")
_OUT = OUTCOME_CODES
HIST_BUCKETS = NBG_HIST_BUCKETS


cdef inline int64_t _key(object k) except? -1:
    if not isinstance(k, int):
        raise TypeError(f"keys are integers, got {type(k).__name__}")
    if not KEY_MIN < k < KEY_MAX:
        raise KeyDomainError(f"key {k} outside ({KEY_MIN}, {KEY_MAX})")
    return <int64_t>k


cdef inline void _pair(object k, object l, int64_t *a, int64_t *b) except *:
    a[0] = _key(k)
    b[0] = _key(l)
    if a[0] == b[0]:
        raise SelfLoopError(f"self-loop ({k}, {l}) is not supported")


cdef inline uintptr_t _ptr(uintptr_t w) noexcept nogil:
    return w & ~NBG_TAG_MASK


cdef inline bint _mrk(uintptr_t w) noexcept nogil:
    return (w & NBG_MARK) != 0


def mark_ref(uintptr_t w):
    return nbg_mark_ref(w)


def unmark_ref(uintptr_t w):
    return nbg_unmark_ref(w)


def is_marked(uintptr_t w):
    return bool(nbg_is_marked(w))


def cas_race(int threads, int rounds):
    """Winners when ``threads`` threads CAS each of ``rounds`` cells from the same word."""
    cdef long r
    with nogil:
        r = nbg_cas_race(threads, rounds)
    return r


def faa_stress(int threads, uint64_t per_thread):
    cdef uint64_t r
    with nogil:
        r = nbg_faa_stress(threads, per_thread)
    return r


cdef class _Handle:
    """Owns the C graph; outlives every registration that refers to it."""

    cdef nbg_graph *g
    cdef public object pause_hook
    cdef public object collection_hook

    def __dealloc__(self):
        if self.g is not NULL:
            nbg_destroy(self.g)
            self.g = NULL


cdef class _Registration:
    cdef _Handle h
    cdef public int tid
    cdef bint live

    def release(self):
        if self.live:
            if nbg_unregister(self.h.g, self.tid) != 0:
                raise ReclamationError("cannot unregister while pinned")
            self.live = False

    def __dealloc__(self):
        if self.live:
            nbg_unregister(self.h.g, self.tid)


cdef void _pause_tramp(void *arg, int what) noexcept with gil:
    h = <_Handle>arg
    fn = h.pause_hook
    if fn is not None:
        fn(_WHERE[what])


cdef void _collect_tramp(void *arg, int what) noexcept with gil:
    h = <_Handle>arg
    fn = h.collection_hook
    if fn is not None:
        fn(what)


cdef class BFSTree:
    """One BFS collection: records in visit order, root first."""

    cdef nbg_tree t

    def __dealloc__(self):
        nbg_tree_free(&self.t)

    def __len__(self):
        return self.t.len

    @property
    def found(self):
        return bool(self.t.found)

    def keys(self):
        return [self.t.recs[i].key for i in range(self.t.len)]

    def lecnts(self):
        return [self.t.recs[i].lecnt for i in range(self.t.len)]

    def parents(self):
        return [None if self.t.recs[i].p < 0 else self.t.recs[self.t.recs[i].p].key for i in range(self.t.len)]

    def triples(self):
        """(node identity, counter snapshot, parent identity) per record."""
        out = []
        for i in range(self.t.len):
            p = self.t.recs[i].p
            out.append((<uintptr_t>self.t.recs[i].n, self.t.recs[i].lecnt,
                        None if p < 0 else <uintptr_t>self.t.recs[p].n))
        return out

    def path(self):
        out = []
        cdef int64_t i = <int64_t>self.t.len - 1
        while i >= 0:
            out.append(self.t.recs[i].key)
            i = self.t.recs[i].p
        out.reverse()
        return out

    def __repr__(self):
        return f"BFSTree(found={self.found}, keys={self.keys()})"


def _compare_tree(ot, nt):
    if ot is None or nt is None:
        return False
    return bool(nbg_compare_tree(&(<BFSTree>ot).t, &(<BFSTree>nt).t))


def _compare_path(ot, nt):
    if ot is None or nt is None:
        return False
    return bool(nbg_compare_path(&(<BFSTree>ot).t, &(<BFSTree>nt).t))


cdef class LockFreeGraph:
    """Concurrent unbounded directed graph (compiled core).

    Same interface as the pure-Python engine. Every call releases the GIL.
    """

    cdef _Handle h
    cdef object _local
    cdef readonly int max_threads
    cdef readonly bint eager_unlink

    backend = "native"
    compare_tree = staticmethod(_compare_tree)
    compare_path = staticmethod(_compare_path)

    def __cinit__(self, int max_threads=64, *, bint reclaim=True, bint eager_unlink=False, bint instrument=True):
        if max_threads < 1:
            raise ValueError("max_threads must be at least 1")
        self.h = _Handle()
        self.h.g = nbg_create(max_threads, reclaim, eager_unlink, instrument)
        if self.h.g is NULL:
            raise MemoryError()
        self.h.g.pause_arg = <void *>self.h
        self.h.g.collect_arg = <void *>self.h
        self._local = threading.local()
        self.max_threads = max_threads
        self.eager_unlink = eager_unlink

    # -- thread plumbing

    cdef inline int _tid(self) except -1:
        try:
            return self._local.tid
        except AttributeError:
            return self.register()

    def register(self):
        """Slot id of the calling thread, registering it on first use."""
        reg = getattr(self._local, "reg", None)
        if reg is not None:
            return reg.tid
        cdef int tid = nbg_register(self.h.g)
        if tid < 0:
            raise RegistryFullError(f"all {self.max_threads} thread slots are registered")
        r = _Registration()
        r.h = self.h
        r.tid = tid
        r.live = True
        self._local.reg = r
        self._local.tid = tid
        return tid

    def unregister(self):
        reg = getattr(self._local, "reg", None)
        if reg is None:
            return
        reg.release()
        del self._local.reg
        del self._local.tid

    @contextmanager
    def pinned(self):
        """Hold a reclamation guard across several calls."""
        cdef int tid = self._tid()
        nbg_pin(self.h.g, tid)
        try:
            yield tid
        finally:
            nbg_unpin(self.h.g, tid)

    property pause_hook:
        def __get__(self):
            return self.h.pause_hook

        def __set__(self, fn):
            self.h.pause_hook = fn
            self.h.g.pause_cb = _pause_tramp if fn is not None else <nbg_hook>NULL

    property collection_hook:
        def __get__(self):
            return self.h.collection_hook

        def __set__(self, fn):
            self.h.collection_hook = fn
            self.h.g.collect_cb = _collect_tramp if fn is not None else <nbg_hook>NULL

    # -- ADT

    def add_vertex(self, k):
        cdef int64_t a = _key(k)
        cdef int tid = self._tid()
        cdef int r
        with nogil:
            r = nbg_add_vertex(self.h.g, tid, a)
        return r != 0

    def remove_vertex(self, k):
        cdef int64_t a = _key(k)
        cdef int tid = self._tid()
        cdef int r
        with nogil:
            r = nbg_remove_vertex(self.h.g, tid, a)
        return r != 0

    def contains_vertex(self, k):
        cdef int64_t a = _key(k)
        cdef int tid = self._tid()
        cdef int r
        with nogil:
            r = nbg_contains_vertex(self.h.g, tid, a)
        return r != 0

    def add_edge(self, k, l):
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        cdef int tid = self._tid()
        cdef int r
        with nogil:
            r = nbg_add_edge(self.h.g, tid, a, b)
        return _OUT[r]

    def remove_edge(self, k, l):
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        cdef int tid = self._tid()
        cdef int r
        with nogil:
            r = nbg_remove_edge(self.h.g, tid, a, b)
        return _OUT[r]

    def contains_edge(self, k, l):
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        cdef int tid = self._tid()
        cdef int r
        with nogil:
            r = nbg_contains_edge(self.h.g, tid, a, b)
        return _OUT[r]

    def get_path(self, k, l):
        """Keys of a path from ``k`` to ``l`` (both included), or None."""
        return self._get_path(k, l, 0)

    def get_path_bounded(self, k, l, int max_scans):
        """Like :meth:`get_path` but returns INCONCLUSIVE after ``max_scans`` failed comparisons."""
        if max_scans < 1:
            raise ValueError("max_scans must be at least 1")
        return self._get_path(k, l, max_scans)

    cdef object _get_path(self, k, l, int rounds):
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        cdef int tid = self._tid()
        cdef nbg_path p
        cdef int r
        memset(&p, 0, sizeof(p))
        with nogil:
            r = nbg_get_path(self.h.g, tid, a, b, rounds, &p)
        try:
            if r == NBG_PATH_FOUND:
                return [p.keys[i] for i in range(p.len)]
            if r == NBG_PATH_INCONCLUSIVE:
                return INCONCLUSIVE
            return None
        finally:
            nbg_path_free(&p)

    def tree_collect(self, k, l):
        """One BFS collection from v(k) towards v(l); None if either is absent.

        Identities in the returned tree are only meaningful while the caller
        holds :meth:`pinned`.
        """
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        cdef int tid = self._tid()
        tree = BFSTree()
        cdef int r
        with nogil:
            r = nbg_tree_collect(self.h.g, tid, a, b, &(<BFSTree>tree).t)
        return None if r < 0 else tree

    # -- locate helpers by key

    def loc_v(self, k, start=None):
        cdef int64_t pk, ck
        cdef int64_t s = 0 if start is None else _key(start)
        nbg_loc_v(self.h.g, self._tid(), s, start is not None, _key(k) if k != KEY_MAX else KEY_MAX, &pk, &ck)
        return pk, ck

    def loc_c(self, k, start=None):
        cdef int64_t pk, ck
        cdef int64_t s = 0 if start is None else _key(start)
        nbg_loc_c(self.h.g, self._tid(), s, start is not None, _key(k) if k != KEY_MAX else KEY_MAX, &pk, &ck)
        return pk, ck

    def loc_e(self, k, l):
        cdef int64_t pk, ck
        if nbg_loc_e(self.h.g, self._tid(), _key(k), _key(l) if l != KEY_MAX else KEY_MAX, &pk, &ck) < 0:
            raise KeyError(k)
        return pk, ck

    def conv_plus(self, k, l):
        return self._pair_keys(k, l, 1)

    def conc_plus(self, k, l):
        return self._pair_keys(k, l, 0)

    cdef object _pair_keys(self, k, l, int helping):
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        if nbg_pair(self.h.g, self._tid(), a, b, helping):
            return (k, l, True)
        return (None, None, False)

    # -- instrumentation and inspection

    def inject_vertex_mark(self, k):
        """Logically remove v(k) without unlinking it (test staging)."""
        r = nbg_inject_vertex_mark(self.h.g, _key(k))
        if r < 0:
            raise KeyError(k)
        return bool(r)

    def inject_edge_mark(self, k, l):
        """Logically remove e(k, l) without unlinking it or counting it."""
        r = nbg_inject_edge_mark(self.h.g, _key(k), _key(l))
        if r < 0:
            raise KeyError((k, l))
        return bool(r)

    def op_stats(self):
        """Per-op-kind (CAS count, FAA count) summed over thread slots."""
        cdef uint64_t cas[8]
        cdef uint64_t faa[8]
        nbg_op_stats(self.h.g, cas, faa)
        return {name: (cas[i], faa[i]) for i, name in enumerate(OP_KINDS)}

    def reset_op_stats(self):
        nbg_reset_op_stats(self.h.g)

    def last_op_steps(self):
        return self.h.g.threads[self._tid()].steps

    def last_collections(self):
        return self.h.g.threads[self._tid()].collections

    def dump(self):
        """Physical structure: (key, marked, [(dest, edge_marked, dest_marked)])."""
        cdef nbg_graph *g = self.h.g
        cdef nbg_vnode *cv = <nbg_vnode *>_ptr(g.vh.vnxt)
        cdef nbg_enode *ce
        out = []
        while cv != g.vt:
            edges = []
            ce = <nbg_enode *>_ptr(cv.eh.enxt)
            while ce != g.et:
                edges.append((ce.key, _mrk(ce.enxt), _mrk(ce.ptv.vnxt)))
                ce = <nbg_enode *>_ptr(ce.enxt)
            out.append((cv.key, _mrk(cv.vnxt), edges))
            cv = <nbg_vnode *>_ptr(cv.vnxt)
        return out

    def snapshot(self):
        """Abstract graph (vertices, edges) read at quiescence."""
        cdef nbg_graph *g = self.h.g
        cdef nbg_vnode *cv = <nbg_vnode *>_ptr(g.vh.vnxt)
        cdef nbg_enode *ce
        vertices = []
        edges = []
        while cv != g.vt:
            if not _mrk(cv.vnxt):
                vertices.append(cv.key)
                ce = <nbg_enode *>_ptr(cv.eh.enxt)
                while ce != g.et:
                    if not _mrk(ce.enxt) and not _mrk(ce.ptv.vnxt):
                        edges.append((cv.key, ce.key))
                    ce = <nbg_enode *>_ptr(ce.enxt)
            cv = <nbg_vnode *>_ptr(cv.vnxt)
        return vertices, edges

    def counter_audit(self):
        """ecnt of every physically linked vertex next to its per-site counts."""
        cdef nbg_graph *g = self.h.g
        cdef nbg_vnode *cv = <nbg_vnode *>_ptr(g.vh.vnxt)
        out = []
        while cv != g.vt:
            out.append({"key": cv.key, "ecnt": cv.ecnt, "added": cv.n_add,
                        "removed": cv.n_rem, "purged": cv.n_purge})
            cv = <nbg_vnode *>_ptr(cv.vnxt)
        return out

    def ecnt(self, k):
        cdef nbg_vnode *v = nbg_find_physical(self.h.g, _key(k))
        if v is NULL:
            raise KeyError(k)
        return v.ecnt

    def check_structure(self):
        """Assert the quiescent invariants: sorted lists, matching edge keys."""
        rc = nbg_check_structure(self.h.g)
        assert rc != 1, "vertex list unsorted"
        assert rc != 2, "edge list unsorted"
        assert rc != 3, "edge key differs from its target's key"

    def quiesce(self):
        """Free everything retired so far; no other thread may be inside an op."""
        cdef long n = nbg_quiesce(self.h.g, self._tid())
        if n == -1:
            raise ReclamationError("another thread is still pinned")
        if n == -2:
            raise ReclamationError("retired nodes are still linked")
        return n

    def reclaim_stats(self):
        cdef nbg_graph *g = self.h.g
        if g.errors:
            raise ReclamationError(f"{g.errors} reclamation errors (double retire)")
        return {
            "retired": g.retired_total,
            "freed": g.freed_total,
            "freed_vertices": g.freed_vertices,
            "freed_edges": g.freed_edges,
            "leak_mode": not g.reclaim,
        }

    cdef void *_raw(self):
        return <void *>self.h.g


cdef class _SeqBase:
    cdef nbg_seq *s
    cdef bint locked

    def __dealloc__(self):
        if self.s is not NULL:
            nbg_seq_destroy(self.s)

    def add_vertex(self, k):
        cdef int64_t a = _key(k)
        cdef int r
        with nogil:
            r = nbg_seq_add_vertex(self.s, a)
        return r != 0

    def remove_vertex(self, k):
        cdef int64_t a = _key(k)
        cdef int r
        with nogil:
            r = nbg_seq_remove_vertex(self.s, a)
        return r != 0

    def contains_vertex(self, k):
        cdef int64_t a = _key(k)
        cdef int r
        with nogil:
            r = nbg_seq_contains_vertex(self.s, a)
        return r != 0

    def add_edge(self, k, l):
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        cdef int r
        with nogil:
            r = nbg_seq_add_edge(self.s, a, b)
        return _OUT[r]

    def remove_edge(self, k, l):
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        cdef int r
        with nogil:
            r = nbg_seq_remove_edge(self.s, a, b)
        return _OUT[r]

    def contains_edge(self, k, l):
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        cdef int r
        with nogil:
            r = nbg_seq_contains_edge(self.s, a, b)
        return _OUT[r]

    def get_path(self, k, l):
        cdef int64_t a, b
        _pair(k, l, &a, &b)
        cdef nbg_path p
        cdef int r
        memset(&p, 0, sizeof(p))
        with nogil:
            r = nbg_seq_get_path(self.s, a, b, &p)
        try:
            if r == NBG_PATH_FOUND:
                return [p.keys[i] for i in range(p.len)]
            return None
        finally:
            nbg_path_free(&p)

    def get_path_bounded(self, k, l, int max_scans):
        if max_scans < 1:
            raise ValueError("max_scans must be at least 1")
        return self.get_path(k, l)

    def snapshot(self):
        acc = ([], [])
        nbg_seq_walk(self.s, _walk_vertex, _walk_edge, <void *>acc)
        return acc


cdef void _walk_vertex(void *arg, int64_t k) noexcept with gil:
    (<tuple>arg)[0].append(k)


cdef void _walk_edge(void *arg, int64_t k, int64_t l) noexcept with gil:
    (<tuple>arg)[1].append((k, l))


cdef class SequentialGraph(_SeqBase):
    """Single-threaded adjacency list. Not safe for concurrent use."""

    backend = "native"

    def __cinit__(self):
        self.s = nbg_seq_create(0)
        if self.s is NULL:
            raise MemoryError()


cdef class CoarseGraph(_SeqBase):
    """The sequential graph behind one global mutex."""

    backend = "native"

    def __cinit__(self):
        self.s = nbg_seq_create(1)
        if self.s is NULL:
            raise MemoryError()
        self.locked = True


# -- benchmark driver

ENGINE_CODES = {"lockfree": NBG_ENGINE_LOCKFREE, "coarse": NBG_ENGINE_COARSE, "seq": NBG_ENGINE_SEQ}


def hist_bucket(uint64_t ns):
    return nbg_hist_bucket(ns)


def draw_ops(uint64_t seed, int tid, int n, mix, int64_t lo, int64_t hi):
    """The first ``n`` (op index, k, l) draws of worker ``tid``'s stream."""
    cdef int m[7]
    for i in range(7):
        m[i] = mix[i]
    cdef uint64_t st = nbg_stream_seed(seed, tid)
    cdef int op
    cdef int64_t k, l
    out = []
    for _ in range(n):
        nbg_draw_op(&st, m, lo, hi, &op, &k, &l)
        out.append((op, k, l))
    return out


def bench_run(str engine, graph, int threads, double duration_s, mix, int64_t key_lo, int64_t key_hi,
              uint64_t seed, int scan_cap):
    """Run the C worker loop; returns per-op counts, totals and the latency histogram."""
    cdef nbg_bench_cfg cfg
    memset(&cfg, 0, sizeof(cfg))
    cfg.engine = ENGINE_CODES[engine]
    if cfg.engine == NBG_ENGINE_LOCKFREE:
        if not isinstance(graph, LockFreeGraph):
            raise TypeError("lockfree engine needs a native LockFreeGraph")
        cfg.graph = (<LockFreeGraph>graph)._raw()
    else:
        if not isinstance(graph, _SeqBase):
            raise TypeError(f"{engine} engine needs a native sequential or coarse graph")
        cfg.graph = <void *>(<_SeqBase>graph).s
    cfg.threads = threads
    cfg.duration_s = duration_s
    for i in range(7):
        cfg.mix[i] = mix[i]
    cfg.key_lo = key_lo
    cfg.key_hi = key_hi
    cfg.seed = seed
    cfg.scan_cap = scan_cap
    cdef nbg_bench_out *out = <nbg_bench_out *>calloc(1, sizeof(nbg_bench_out))
    if out is NULL:
        raise MemoryError()
    cdef int rc
    try:
        with nogil:
            rc = nbg_bench_run(&cfg, out)
        if rc == -1:
            raise ValueError("invalid benchmark configuration")
        if rc == -2:
            raise RegistryFullError("more bench threads than graph thread slots")
        return {
            "ops": [out.ops[i] for i in range(7)],
            "total": out.total,
            "inconclusive": out.inconclusive,
            "elapsed_s": out.elapsed_s,
            "hist": [out.hist[i] for i in range(NBG_HIST_BUCKETS)],
        }
    finally:
        free(out)
