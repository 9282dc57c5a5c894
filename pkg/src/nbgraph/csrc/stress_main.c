/* Standalone stress driver, meant to be built with -fsanitize=address or thread.
 *
 *   stress THREADS OPS_PER_THREAD KEYS SEED RECLAIM
 *
 * Runs a random update-heavy mix on the lock-free and coarse engines, then
 * checks the quiescent invariants. Exit status 0 means every check passed.
 */

#include "nbgraph.h"

#include <stdio.h>
#include <stdlib.h>

typedef struct job {
    nbg_graph *g;
    nbg_seq *coarse;
    int idx;
    long ops;
    int64_t keys;
    uint64_t seed;
} job;

/* update-heavy mix with reachability queries, in basis points */
static const int MIX[7] = {1500, 1500, 500, 2500, 2500, 500, 1000};

static void *worker(void *arg)
{
    job *j = arg;
    int tid = nbg_register(j->g);
    if (tid < 0) {
        fprintf(stderr, "registration failed\n");
        exit(2);
    }
    uint64_t st = nbg_stream_seed(j->seed, j->idx);
    nbg_path path = {0};
    for (long i = 0; i < j->ops; i++) {
        int op;
        int64_t k, l;
        nbg_draw_op(&st, MIX, 1, j->keys, &op, &k, &l);
        switch (op) {
        case NBG_OP_ADD_V: nbg_add_vertex(j->g, tid, k); nbg_seq_add_vertex(j->coarse, k); break;
        case NBG_OP_REM_V: nbg_remove_vertex(j->g, tid, k); nbg_seq_remove_vertex(j->coarse, k); break;
        case NBG_OP_CON_V: nbg_contains_vertex(j->g, tid, k); nbg_seq_contains_vertex(j->coarse, k); break;
        case NBG_OP_ADD_E: nbg_add_edge(j->g, tid, k, l); nbg_seq_add_edge(j->coarse, k, l); break;
        case NBG_OP_REM_E: nbg_remove_edge(j->g, tid, k, l); nbg_seq_remove_edge(j->coarse, k, l); break;
        case NBG_OP_CON_E: nbg_contains_edge(j->g, tid, k, l); nbg_seq_contains_edge(j->coarse, k, l); break;
        default:
            nbg_get_path(j->g, tid, k, l, 3, &path);
            nbg_seq_get_path(j->coarse, k, l, &path);
            break;
        }
    }
    nbg_path_free(&path);
    nbg_unregister(j->g, tid);
    return NULL;
}

int main(int argc, char **argv)
{
    int threads = argc > 1 ? atoi(argv[1]) : 4;
    long ops = argc > 2 ? atol(argv[2]) : 20000;
    int64_t keys = argc > 3 ? atoll(argv[3]) : 32;
    uint64_t seed = argc > 4 ? strtoull(argv[4], NULL, 10) : 1;
    int reclaim = argc > 5 ? atoi(argv[5]) : 1;

    nbg_graph *g = nbg_create(threads + 1, reclaim, 0, 1);
    nbg_seq *coarse = nbg_seq_create(1);
    pthread_t *th = calloc((size_t)threads, sizeof *th);
    job *jobs = calloc((size_t)threads, sizeof *jobs);
    for (int i = 0; i < threads; i++) {
        jobs[i] = (job){g, coarse, i, ops, keys, seed};
        pthread_create(&th[i], NULL, worker, &jobs[i]);
    }
    for (int i = 0; i < threads; i++)
        pthread_join(th[i], NULL);

    int fail = 0;
    int rc = nbg_check_structure(g);
    if (rc) {
        fprintf(stderr, "structure check failed: %d\n", rc);
        fail = 1;
    }
    /* every ecnt increment is attributable to an add, a remove or a purge */
    for (nbg_vnode *cv = (nbg_vnode *)(atomic_load(&g->vh->vnxt) & ~NBG_TAG_MASK); cv != g->vt;
         cv = (nbg_vnode *)(atomic_load(&cv->vnxt) & ~NBG_TAG_MASK)) {
        uint64_t want = atomic_load(&cv->n_add) + atomic_load(&cv->n_rem) + atomic_load(&cv->n_purge);
        if (atomic_load(&cv->ecnt) != want) {
            fprintf(stderr, "ecnt mismatch at %lld\n", (long long)cv->key);
            fail = 1;
        }
    }
    uint64_t cas[NBG_N_OPS], faa[NBG_N_OPS];
    nbg_op_stats(g, cas, faa);
    for (int op = NBG_OP_CON_V; op <= NBG_OP_PATH; op++) {
        if (op == NBG_OP_ADD_E || op == NBG_OP_REM_E)
            continue;
        if (cas[op] || faa[op]) {
            fprintf(stderr, "lookup op %d performed CAS/FAA\n", op);
            fail = 1;
        }
    }
    int tid = nbg_register(g);
    long freed = nbg_quiesce(g, tid);
    if (freed < 0) {
        fprintf(stderr, "quiesce failed: %ld\n", freed);
        fail = 1;
    }
    uint64_t retired = atomic_load(&g->retired_total), done = atomic_load(&g->freed_total);
    if (atomic_load(&g->errors)) {
        fprintf(stderr, "reclamation errors: %llu\n", (unsigned long long)atomic_load(&g->errors));
        fail = 1;
    }
    printf("retired=%llu freed=%llu reclaim=%d\n", (unsigned long long)retired, (unsigned long long)done, reclaim);
    if (reclaim && done < retired) {
        fprintf(stderr, "only %llu of %llu retired nodes freed\n", (unsigned long long)done,
                (unsigned long long)retired);
        fail = 1;
    }
    nbg_unregister(g, tid);
    nbg_destroy(g);
    nbg_seq_destroy(coarse);
    free(th);
    free(jobs);
    return fail;
}
