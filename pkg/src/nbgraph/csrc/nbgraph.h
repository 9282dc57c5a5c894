#ifndef NBGRAPH_H
#define NBGRAPH_H

#include <pthread.h>
#include <stdatomic.h>
#include <stddef.h>
#include <stdint.h>

#define NBG_KEY_MIN INT64_MIN
#define NBG_KEY_MAX INT64_MAX

/* low bit of a link word is the mark; the next two are reserved and always zero */
#define NBG_MARK ((uintptr_t)1)
#define NBG_TAG_MASK ((uintptr_t)7)

/* incoming-edge reference word: (count << 1) | dead */
#define NBG_REF_DEAD ((uint64_t)1)
#define NBG_REF_ONE ((uint64_t)2)

enum nbg_outcome {
    NBG_VERTEX_NOT_PRESENT = 0,
    NBG_EDGE_PRESENT,
    NBG_EDGE_ADDED,
    NBG_EDGE_NOT_PRESENT,
    NBG_EDGE_REMOVED,
    NBG_EDGE_FOUND,
    NBG_VERTEX_OR_EDGE_NOT_PRESENT
};

enum nbg_op {
    NBG_OP_ADD_V = 0,
    NBG_OP_REM_V,
    NBG_OP_CON_V,
    NBG_OP_ADD_E,
    NBG_OP_REM_E,
    NBG_OP_CON_E,
    NBG_OP_PATH,
    NBG_OP_OTHER,
    NBG_N_OPS
};

enum { NBG_PATH_NONE = 0, NBG_PATH_FOUND = 1, NBG_PATH_INCONCLUSIVE = 2 };

enum { NBG_KIND_VERTEX = 0, NBG_KIND_EDGE = 1 };

typedef struct nbg_hdr {
    struct nbg_hdr *limbo_next;
    uint64_t epoch;
    _Atomic int retired;
    int kind;
    /* vertices: 0 live or unlinked, 1 edge list freed, 2 node retired */
    int stage;
} nbg_hdr;

typedef struct nbg_enode nbg_enode;

typedef struct nbg_vnode {
    nbg_hdr hdr;
    int64_t key;
    _Atomic uintptr_t vnxt;
    nbg_enode *eh;
    _Atomic uint64_t ecnt;
    _Atomic uint64_t refs;
    /* instrumentation: ecnt increments split by call site */
    _Atomic uint64_t n_add;
    _Atomic uint64_t n_rem;
    _Atomic uint64_t n_purge;
    uint64_t visited[];
} nbg_vnode;

struct nbg_enode {
    nbg_hdr hdr;
    int64_t key;
    nbg_vnode *ptv;
    _Atomic uintptr_t enxt;
};

typedef struct nbg_rec {
    nbg_vnode *n;
    int64_t key;
    uint64_t lecnt;
    int64_t p; /* parent index, -1 for the root */
} nbg_rec;

typedef struct nbg_tree {
    nbg_rec *recs;
    size_t len;
    size_t cap;
    int found;
} nbg_tree;

typedef struct nbg_path {
    int64_t *keys;
    size_t len;
    size_t cap;
} nbg_path;

typedef struct nbg_tctx {
    _Alignas(128) _Atomic uint64_t announce; /* (epoch << 1) | active */
    _Atomic int in_use;
    int depth;
    int collecting;
    int op;
    uint64_t visit;
    nbg_hdr *limbo_head;
    nbg_hdr *limbo_tail;
    uint64_t n_retired;
    _Atomic uint64_t cas[NBG_N_OPS];
    _Atomic uint64_t faa[NBG_N_OPS];
    uint64_t steps;
    uint64_t collections;
    nbg_tree trees[2];
} nbg_tctx;

typedef void (*nbg_hook)(void *arg, int what);

typedef struct nbg_graph {
    nbg_vnode *vh;
    nbg_vnode *vt;
    nbg_enode *et;
    int max_threads;
    int reclaim;
    int eager_unlink;
    int instrument;
    _Atomic uint64_t epoch;
    _Atomic uint64_t retired_total;
    _Atomic uint64_t freed_total;
    _Atomic uint64_t freed_vertices;
    _Atomic uint64_t freed_edges;
    _Atomic uint64_t errors;
    /* test hooks: between validation and publishing CAS; between collections */
    nbg_hook pause_cb;
    void *pause_arg;
    nbg_hook collect_cb;
    void *collect_arg;
    nbg_tctx *threads;
} nbg_graph;

/* link words */
uintptr_t nbg_mark_ref(uintptr_t w);
uintptr_t nbg_unmark_ref(uintptr_t w);
int nbg_is_marked(uintptr_t w);
int nbg_cas_link(_Atomic uintptr_t *cell, uintptr_t expected, uintptr_t desired);
uint64_t nbg_faa(_Atomic uint64_t *counter, uint64_t delta);

/* lifecycle and threads */
nbg_graph *nbg_create(int max_threads, int reclaim, int eager_unlink, int instrument);
void nbg_destroy(nbg_graph *g);
int nbg_register(nbg_graph *g);
int nbg_unregister(nbg_graph *g, int tid);
void nbg_pin(nbg_graph *g, int tid);
void nbg_unpin(nbg_graph *g, int tid);
long nbg_quiesce(nbg_graph *g, int tid);
long nbg_linked_retired(nbg_graph *g);

/* ADT */
int nbg_add_vertex(nbg_graph *g, int tid, int64_t k);
int nbg_remove_vertex(nbg_graph *g, int tid, int64_t k);
int nbg_contains_vertex(nbg_graph *g, int tid, int64_t k);
int nbg_add_edge(nbg_graph *g, int tid, int64_t k, int64_t l);
int nbg_remove_edge(nbg_graph *g, int tid, int64_t k, int64_t l);
int nbg_contains_edge(nbg_graph *g, int tid, int64_t k, int64_t l);
/* max_rounds <= 0 means unbounded */
int nbg_get_path(nbg_graph *g, int tid, int64_t k, int64_t l, int max_rounds, nbg_path *out);

/* reachability internals */
int nbg_tree_collect(nbg_graph *g, int tid, int64_t k, int64_t l, nbg_tree *out);
int nbg_compare_tree(const nbg_tree *ot, const nbg_tree *nt);
int nbg_compare_path(const nbg_tree *ot, const nbg_tree *nt);
void nbg_tree_free(nbg_tree *t);
void nbg_path_free(nbg_path *p);

/* locate helpers by key; results are keys */
void nbg_loc_v(nbg_graph *g, int tid, int64_t start, int use_start, int64_t k, int64_t *pk, int64_t *ck);
void nbg_loc_c(nbg_graph *g, int tid, int64_t start, int use_start, int64_t k, int64_t *pk, int64_t *ck);
int nbg_loc_e(nbg_graph *g, int tid, int64_t k, int64_t l, int64_t *pk, int64_t *ck);
int nbg_pair(nbg_graph *g, int tid, int64_t k, int64_t l, int helping);

/* staging and inspection */
nbg_vnode *nbg_find_physical(nbg_graph *g, int64_t k);
int nbg_inject_vertex_mark(nbg_graph *g, int64_t k);
int nbg_inject_edge_mark(nbg_graph *g, int64_t k, int64_t l);
void nbg_op_stats(nbg_graph *g, uint64_t *cas, uint64_t *faa);
void nbg_reset_op_stats(nbg_graph *g);
int nbg_check_structure(nbg_graph *g);

/* blocking baselines: sorted linked lists, optionally behind one mutex */
typedef struct nbg_seq nbg_seq;
nbg_seq *nbg_seq_create(int locked);
void nbg_seq_destroy(nbg_seq *s);
int nbg_seq_add_vertex(nbg_seq *s, int64_t k);
int nbg_seq_remove_vertex(nbg_seq *s, int64_t k);
int nbg_seq_contains_vertex(nbg_seq *s, int64_t k);
int nbg_seq_add_edge(nbg_seq *s, int64_t k, int64_t l);
int nbg_seq_remove_edge(nbg_seq *s, int64_t k, int64_t l);
int nbg_seq_contains_edge(nbg_seq *s, int64_t k, int64_t l);
int nbg_seq_get_path(nbg_seq *s, int64_t k, int64_t l, nbg_path *out);
/* visit the abstract graph: vertex callback then one edge callback per live edge */
void nbg_seq_walk(nbg_seq *s, void (*vertex)(void *, int64_t), void (*edge)(void *, int64_t, int64_t), void *arg);

/* benchmark driver */
#define NBG_HIST_BUCKETS (256 + 40 * 64)

enum { NBG_ENGINE_LOCKFREE = 0, NBG_ENGINE_COARSE = 1, NBG_ENGINE_SEQ = 2 };

typedef struct nbg_bench_cfg {
    int engine;
    void *graph;
    int threads;
    double duration_s;
    int mix[7]; /* basis points per op, summing to 10000 */
    int64_t key_lo;
    int64_t key_hi;
    uint64_t seed;
    int scan_cap;
} nbg_bench_cfg;

typedef struct nbg_bench_out {
    uint64_t ops[7];
    uint64_t total;
    uint64_t inconclusive;
    double elapsed_s;
    uint64_t hist[NBG_HIST_BUCKETS];
} nbg_bench_out;

uint64_t nbg_splitmix64(uint64_t *state);
uint64_t nbg_stream_seed(uint64_t seed, int tid);
int nbg_hist_bucket(uint64_t ns);
void nbg_draw_op(uint64_t *state, const int *mix, int64_t lo, int64_t hi, int *op, int64_t *k, int64_t *l);
int nbg_bench_run(const nbg_bench_cfg *cfg, nbg_bench_out *out);

/* stress helpers for the atomic primitives */
long nbg_cas_race(int threads, int rounds);
uint64_t nbg_faa_stress(int threads, uint64_t per_thread);

#endif
