/* Throughput driver: T worker threads drawing ops from a mix until a deadline. */

#include "nbgraph.h"

#include <stdlib.h>
#include <string.h>
#include <sched.h>
#include <time.h>

uint64_t nbg_splitmix64(uint64_t *state)
{
    uint64_t z = (*state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

uint64_t nbg_stream_seed(uint64_t seed, int tid)
{
    return seed + 0xD1B54A32D192ED03ULL * (uint64_t)(tid + 1);
}

int nbg_hist_bucket(uint64_t ns)
{
    if (ns < 1024)
        return (int)(ns >> 2);
    int e = 63 - __builtin_clzll(ns);
    if (e > 49)
        e = 49;
    return 256 + (e - 10) * 64 + (int)((ns >> (e - 6)) & 63);
}

void nbg_draw_op(uint64_t *state, const int *mix, int64_t lo, int64_t hi, int *op, int64_t *k, int64_t *l)
{
    uint64_t r = nbg_splitmix64(state) % 10000;
    int o = 0;
    uint64_t acc = (uint64_t)mix[0];
    while (r >= acc && o < 6) {
        o++;
        acc += (uint64_t)mix[o];
    }
    uint64_t span = (uint64_t)(hi - lo) + 1;
    *k = lo + (int64_t)(nbg_splitmix64(state) % span);
    *l = *k;
    if (o >= NBG_OP_ADD_E) {
        do
            *l = lo + (int64_t)(nbg_splitmix64(state) % span);
        while (*l == *k);
    }
    *op = o;
}

static inline uint64_t now_ns(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000ULL + (uint64_t)ts.tv_nsec;
}

typedef struct worker {
    const nbg_bench_cfg *cfg;
    int idx;
    _Atomic int *ready;
    _Atomic uint64_t *start;
    uint64_t end;
    int failed;
    nbg_bench_out out;
} worker;

static int run_op(const nbg_bench_cfg *cfg, int tid, int op, int64_t k, int64_t l)
{
    if (cfg->engine == NBG_ENGINE_LOCKFREE) {
        nbg_graph *g = cfg->graph;
        switch (op) {
        case NBG_OP_ADD_V: return nbg_add_vertex(g, tid, k);
        case NBG_OP_REM_V: return nbg_remove_vertex(g, tid, k);
        case NBG_OP_CON_V: return nbg_contains_vertex(g, tid, k);
        case NBG_OP_ADD_E: return nbg_add_edge(g, tid, k, l);
        case NBG_OP_REM_E: return nbg_remove_edge(g, tid, k, l);
        case NBG_OP_CON_E: return nbg_contains_edge(g, tid, k, l);
        default: return nbg_get_path(g, tid, k, l, cfg->scan_cap, NULL);
        }
    }
    nbg_seq *s = cfg->graph;
    switch (op) {
    case NBG_OP_ADD_V: return nbg_seq_add_vertex(s, k);
    case NBG_OP_REM_V: return nbg_seq_remove_vertex(s, k);
    case NBG_OP_CON_V: return nbg_seq_contains_vertex(s, k);
    case NBG_OP_ADD_E: return nbg_seq_add_edge(s, k, l);
    case NBG_OP_REM_E: return nbg_seq_remove_edge(s, k, l);
    case NBG_OP_CON_E: return nbg_seq_contains_edge(s, k, l);
    default: return nbg_seq_get_path(s, k, l, NULL);
    }
}

static void *work(void *arg)
{
    worker *w = arg;
    const nbg_bench_cfg *cfg = w->cfg;
    int tid = 0;
    if (cfg->engine == NBG_ENGINE_LOCKFREE) {
        tid = nbg_register(cfg->graph);
        if (tid < 0)
            w->failed = 1;
    }
    atomic_fetch_add(w->ready, 1);
    uint64_t start;
    while ((start = atomic_load(w->start)) == 0)
        sched_yield();
    if (w->failed)
        return NULL;
    uint64_t deadline = start + (uint64_t)(cfg->duration_s * 1e9);
    uint64_t st = nbg_stream_seed(cfg->seed, w->idx);
    uint64_t t1 = start;
    while (t1 < deadline) {
        int op;
        int64_t k, l;
        nbg_draw_op(&st, cfg->mix, cfg->key_lo, cfg->key_hi, &op, &k, &l);
        uint64_t t0 = now_ns();
        int r = run_op(cfg, tid, op, k, l);
        t1 = now_ns();
        w->out.hist[nbg_hist_bucket(t1 - t0)]++;
        w->out.ops[op]++;
        if (op == NBG_OP_PATH && r == NBG_PATH_INCONCLUSIVE)
            w->out.inconclusive++;
    }
    w->end = t1;
    if (cfg->engine == NBG_ENGINE_LOCKFREE)
        nbg_unregister(cfg->graph, tid);
    return NULL;
}

int nbg_bench_run(const nbg_bench_cfg *cfg, nbg_bench_out *out)
{
    if (cfg->threads < 1 || cfg->key_hi <= cfg->key_lo || cfg->duration_s <= 0)
        return -1;
    if (cfg->engine == NBG_ENGINE_SEQ && cfg->threads != 1)
        return -1;
    worker *ws = calloc((size_t)cfg->threads, sizeof *ws);
    pthread_t *th = calloc((size_t)cfg->threads, sizeof *th);
    _Atomic int ready = 0;
    _Atomic uint64_t start = 0;
    int rc = 0;
    for (int i = 0; i < cfg->threads; i++) {
        ws[i].cfg = cfg;
        ws[i].idx = i;
        ws[i].ready = &ready;
        ws[i].start = &start;
        pthread_create(&th[i], NULL, work, &ws[i]);
    }
    while (atomic_load(&ready) < cfg->threads)
        sched_yield();
    uint64_t t0 = now_ns();
    atomic_store(&start, t0);
    uint64_t end = t0;
    memset(out, 0, sizeof *out);
    for (int i = 0; i < cfg->threads; i++) {
        pthread_join(th[i], NULL);
        if (ws[i].failed) {
            rc = -2;
            continue;
        }
        if (ws[i].end > end)
            end = ws[i].end;
        for (int j = 0; j < 7; j++) {
            out->ops[j] += ws[i].out.ops[j];
            out->total += ws[i].out.ops[j];
        }
        out->inconclusive += ws[i].out.inconclusive;
        for (int b = 0; b < NBG_HIST_BUCKETS; b++)
            out->hist[b] += ws[i].out.hist[b];
    }
    out->elapsed_s = (double)(end - t0) / 1e9;
    free(ws);
    free(th);
    return rc;
}

/* ---- primitive stress ---------------------------------------------------- */

typedef struct race {
    _Atomic uintptr_t *cells;
    int rounds;
    int me;
    _Atomic long *wins;
    _Atomic int *go;
    _Atomic uint64_t *counter;
    uint64_t per_thread;
} race;

static void *cas_worker(void *arg)
{
    race *r = arg;
    while (!atomic_load(r->go))
        sched_yield();
    for (int i = 0; i < r->rounds; i++) {
        /* everyone expects the unmarked initial word; only one may win */
        if (nbg_cas_link(&r->cells[i], (uintptr_t)8, (uintptr_t)(16 * (r->me + 1))))
            atomic_fetch_add(r->wins, 1);
    }
    return NULL;
}

long nbg_cas_race(int threads, int rounds)
{
    _Atomic uintptr_t *cells = calloc((size_t)rounds, sizeof *cells);
    for (int i = 0; i < rounds; i++)
        atomic_init(&cells[i], (uintptr_t)8);
    _Atomic long wins = 0;
    _Atomic int go = 0;
    pthread_t *th = calloc((size_t)threads, sizeof *th);
    race *rs = calloc((size_t)threads, sizeof *rs);
    for (int t = 0; t < threads; t++) {
        rs[t] = (race){cells, rounds, t, &wins, &go, NULL, 0};
        pthread_create(&th[t], NULL, cas_worker, &rs[t]);
    }
    atomic_store(&go, 1);
    for (int t = 0; t < threads; t++)
        pthread_join(th[t], NULL);
    free(cells);
    free(th);
    free(rs);
    return atomic_load(&wins);
}

static void *faa_worker(void *arg)
{
    race *r = arg;
    while (!atomic_load(r->go))
        sched_yield();
    for (uint64_t i = 0; i < r->per_thread; i++)
        nbg_faa(r->counter, 1);
    return NULL;
}

uint64_t nbg_faa_stress(int threads, uint64_t per_thread)
{
    _Atomic uint64_t counter = 0;
    _Atomic int go = 0;
    pthread_t *th = calloc((size_t)threads, sizeof *th);
    race *rs = calloc((size_t)threads, sizeof *rs);
    for (int t = 0; t < threads; t++) {
        rs[t] = (race){NULL, 0, t, NULL, &go, &counter, per_thread};
        pthread_create(&th[t], NULL, faa_worker, &rs[t]);
    }
    atomic_store(&go, 1);
    for (int t = 0; t < threads; t++)
        pthread_join(th[t], NULL);
    free(th);
    free(rs);
    return atomic_load(&counter);
}
