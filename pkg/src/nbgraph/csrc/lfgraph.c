/* Lock-free adjacency-list graph with epoch-based reclamation. */

#include "nbgraph.h"

#include <assert.h>
#include <stdlib.h>
#include <string.h>

#define ADVANCE_EVERY 64

static inline uintptr_t W(const void *p, int m) { return (uintptr_t)p | (m ? NBG_MARK : 0); }
static inline void *PTR(uintptr_t w) { return (void *)(w & ~NBG_TAG_MASK); }
static inline int MRK(uintptr_t w) { return (int)(w & NBG_MARK); }

uintptr_t nbg_mark_ref(uintptr_t w) { return w | NBG_MARK; }
uintptr_t nbg_unmark_ref(uintptr_t w) { return w & ~NBG_MARK; }
int nbg_is_marked(uintptr_t w) { return MRK(w); }

int nbg_cas_link(_Atomic uintptr_t *cell, uintptr_t expected, uintptr_t desired)
{
#ifdef NBG_DEBUG
    assert(!MRK(expected) && "CAS against a marked link");
#endif
    return atomic_compare_exchange_strong(cell, &expected, desired);
}

uint64_t nbg_faa(_Atomic uint64_t *counter, uint64_t delta) { return atomic_fetch_add(counter, delta); }

/* owner-only counters: a relaxed load/store pair avoids a locked instruction */
static inline void bump(_Atomic uint64_t *c)
{
    atomic_store_explicit(c, atomic_load_explicit(c, memory_order_relaxed) + 1, memory_order_relaxed);
}

static inline int xcas(nbg_tctx *t, _Atomic uintptr_t *cell, uintptr_t exp, uintptr_t des)
{
    bump(&t->cas[t->op]);
    return nbg_cas_link(cell, exp, des);
}

static inline uint64_t xfaa(nbg_tctx *t, _Atomic uint64_t *c)
{
    bump(&t->faa[t->op]);
    return atomic_fetch_add(c, 1);
}

static inline void pause_at(nbg_graph *g, int where)
{
    if (g->pause_cb)
        g->pause_cb(g->pause_arg, where);
}

/* ---- allocation ---------------------------------------------------------- */

static nbg_enode *new_enode(int64_t key, nbg_vnode *ptv, nbg_enode *nxt)
{
    nbg_enode *e = calloc(1, sizeof *e);
    if (!e)
        abort();
    e->hdr.kind = NBG_KIND_EDGE;
    e->key = key;
    e->ptv = ptv;
    atomic_init(&e->enxt, W(nxt, 0));
    return e;
}

static nbg_vnode *new_vnode(nbg_graph *g, int64_t key)
{
    nbg_vnode *v = calloc(1, sizeof *v + (size_t)g->max_threads * sizeof(uint64_t));
    if (!v)
        abort();
    v->hdr.kind = NBG_KIND_VERTEX;
    v->key = key;
    v->eh = new_enode(NBG_KEY_MIN, v, g->et);
    return v;
}

static void drop_vnode_raw(nbg_vnode *v)
{
    free(v->eh);
    free(v);
}

/* ---- epochs -------------------------------------------------------------- */

static void retire(nbg_graph *g, nbg_tctx *t, nbg_hdr *h);

void nbg_pin(nbg_graph *g, int tid)
{
    nbg_tctx *t = &g->threads[tid];
    if (t->depth++ == 0) {
        for (;;) {
            uint64_t e = atomic_load(&g->epoch);
            atomic_store(&t->announce, (e << 1) | 1);
            if (atomic_load(&g->epoch) == e)
                break;
        }
    }
}

void nbg_unpin(nbg_graph *g, int tid)
{
    nbg_tctx *t = &g->threads[tid];
    if (--t->depth == 0)
        atomic_store(&t->announce, 0);
}

static int try_advance(nbg_graph *g)
{
    uint64_t e = atomic_load(&g->epoch);
    for (int i = 0; i < g->max_threads; i++) {
        nbg_tctx *o = &g->threads[i];
        if (!atomic_load(&o->in_use))
            continue;
        uint64_t a = atomic_load(&o->announce);
        if ((a & 1) && (a >> 1) != e)
            return 0;
    }
    return atomic_compare_exchange_strong(&g->epoch, &e, e + 1);
}

static void release_ref(nbg_graph *g, nbg_tctx *t, nbg_vnode *v);

static void retire_final(nbg_graph *g, nbg_tctx *t, nbg_vnode *v)
{
    v->hdr.stage = 2;
    atomic_store(&v->hdr.retired, 0);
    retire(g, t, &v->hdr);
}

static void release_ref(nbg_graph *g, nbg_tctx *t, nbg_vnode *v)
{
    if (atomic_fetch_sub(&v->refs, NBG_REF_ONE) - NBG_REF_ONE == NBG_REF_DEAD)
        retire_final(g, t, v);
}

static int acquire_ref(nbg_vnode *v)
{
    uint64_t cur = atomic_load(&v->refs);
    for (;;) {
        if (cur == NBG_REF_DEAD)
            return 0;
        if (atomic_compare_exchange_weak(&v->refs, &cur, cur + NBG_REF_ONE))
            return 1;
    }
}

static void free_node(nbg_graph *g, nbg_tctx *t, nbg_hdr *h)
{
    if (h->kind == NBG_KIND_EDGE) {
        nbg_enode *e = (nbg_enode *)h;
        release_ref(g, t, e->ptv);
        atomic_fetch_add(&g->freed_edges, 1);
        free(e);
        return;
    }
    nbg_vnode *v = (nbg_vnode *)h;
    if (v->hdr.stage == 2) {
        atomic_fetch_add(&g->freed_vertices, 1);
        free(v);
        return;
    }
    /* stage one: no thread that could walk this edge list is still pinned */
    v->hdr.stage = 1;
    nbg_enode *it = v->eh;
    uint64_t n = 0;
    while (it != g->et) {
        nbg_enode *nxt = PTR(atomic_load(&it->enxt));
        if (it != v->eh) {
            release_ref(g, t, it->ptv);
            n++;
        }
        free(it);
        it = nxt;
    }
    v->eh = NULL;
    atomic_fetch_add(&g->freed_edges, n);
    if (atomic_fetch_add(&v->refs, NBG_REF_DEAD) == 0)
        retire_final(g, t, v);
}

static long collect(nbg_graph *g, nbg_tctx *t)
{
    if (!g->reclaim)
        return 0;
    uint64_t e = atomic_load(&g->epoch);
    long n = 0;
    t->collecting = 1;
    while (t->limbo_head && t->limbo_head->epoch + 2 <= e) {
        nbg_hdr *h = t->limbo_head;
        t->limbo_head = h->limbo_next;
        if (!t->limbo_head)
            t->limbo_tail = NULL;
        free_node(g, t, h);
        n++;
    }
    t->collecting = 0;
    if (n)
        atomic_fetch_add(&g->freed_total, (uint64_t)n);
    return n;
}

static void retire(nbg_graph *g, nbg_tctx *t, nbg_hdr *h)
{
    if (atomic_exchange(&h->retired, 1)) {
        atomic_fetch_add(&g->errors, 1);
#ifdef NBG_DEBUG
        assert(!"double retire");
#endif
        return;
    }
    h->epoch = atomic_load(&g->epoch);
    h->limbo_next = NULL;
    if (t->limbo_tail)
        t->limbo_tail->limbo_next = h;
    else
        t->limbo_head = h;
    t->limbo_tail = h;
    atomic_fetch_add(&g->retired_total, 1);
    if (++t->n_retired % ADVANCE_EVERY == 0 && g->reclaim && !t->collecting) {
        try_advance(g);
        collect(g, t);
    }
}

static void retire_vertex(nbg_graph *g, nbg_tctx *t, nbg_vnode *v)
{
    /* stage one of two, by the winner of the unlinking CAS */
    if (v->hdr.stage != 0) {
        atomic_fetch_add(&g->errors, 1);
        return;
    }
    retire(g, t, &v->hdr);
}

static long drain(nbg_graph *g, nbg_tctx *self)
{
    long n = 0;
    int pending = 1;
    self->collecting = 1;
    while (pending) {
        pending = 0;
        atomic_fetch_add(&g->epoch, 2);
        for (int i = 0; i < g->max_threads; i++) {
            nbg_tctx *t = &g->threads[i];
            while (t->limbo_head) {
                nbg_hdr *h = t->limbo_head;
                t->limbo_head = h->limbo_next;
                if (!t->limbo_head)
                    t->limbo_tail = NULL;
                free_node(g, self, h);
                n++;
                pending = 1;
            }
        }
    }
    self->collecting = 0;
    atomic_fetch_add(&g->freed_total, (uint64_t)n);
    return n;
}

long nbg_quiesce(nbg_graph *g, int tid)
{
    for (int i = 0; i < g->max_threads; i++) {
        if (i != tid && atomic_load(&g->threads[i].in_use) && (atomic_load(&g->threads[i].announce) & 1))
            return -1;
    }
    if (nbg_linked_retired(g))
        return -2;
    if (!g->reclaim)
        return 0;
    return drain(g, &g->threads[tid]);
}

long nbg_linked_retired(nbg_graph *g)
{
    long bad = 0;
    for (nbg_vnode *cv = PTR(atomic_load(&g->vh->vnxt)); cv != g->vt; cv = PTR(atomic_load(&cv->vnxt))) {
        bad += atomic_load(&cv->hdr.retired) != 0;
        for (nbg_enode *ce = PTR(atomic_load(&cv->eh->enxt)); ce != g->et; ce = PTR(atomic_load(&ce->enxt)))
            bad += atomic_load(&ce->hdr.retired) != 0;
    }
    return bad;
}

/* ---- lifecycle ----------------------------------------------------------- */

nbg_graph *nbg_create(int max_threads, int reclaim, int eager_unlink, int instrument)
{
    if (max_threads < 1)
        return NULL;
    nbg_graph *g = calloc(1, sizeof *g);
    if (!g)
        return NULL;
    g->max_threads = max_threads;
    g->reclaim = reclaim;
    g->eager_unlink = eager_unlink;
    g->instrument = instrument;
    g->threads = aligned_alloc(128, sizeof(nbg_tctx) * (size_t)max_threads);
    if (!g->threads) {
        free(g);
        return NULL;
    }
    memset(g->threads, 0, sizeof(nbg_tctx) * (size_t)max_threads);
    for (int i = 0; i < max_threads; i++)
        g->threads[i].op = NBG_OP_OTHER;
    g->vt = calloc(1, sizeof(nbg_vnode) + (size_t)max_threads * sizeof(uint64_t));
    g->vt->key = NBG_KEY_MAX;
    g->et = new_enode(NBG_KEY_MAX, g->vt, NULL);
    g->vt->eh = new_enode(NBG_KEY_MIN, g->vt, g->et);
    g->vh = new_vnode(g, NBG_KEY_MIN);
    atomic_store(&g->vh->vnxt, W(g->vt, 0));
    return g;
}

void nbg_destroy(nbg_graph *g)
{
    if (!g)
        return;
    nbg_tctx *self = &g->threads[0];
    drain(g, self);
    /* whatever is still linked: free edge lists first so stale edges drop their refs */
    size_t nv = 0, cap = 64;
    nbg_vnode **vs = malloc(cap * sizeof *vs);
    for (nbg_vnode *cv = PTR(atomic_load(&g->vh->vnxt)); cv != g->vt; cv = PTR(atomic_load(&cv->vnxt))) {
        if (nv == cap) {
            cap *= 2;
            vs = realloc(vs, cap * sizeof *vs);
        }
        vs[nv++] = cv;
    }
    self->collecting = 1;
    for (size_t i = 0; i < nv; i++) {
        nbg_enode *it = PTR(atomic_load(&vs[i]->eh->enxt));
        while (it != g->et) {
            nbg_enode *nxt = PTR(atomic_load(&it->enxt));
            release_ref(g, self, it->ptv);
            free(it);
            it = nxt;
        }
        atomic_store(&vs[i]->eh->enxt, W(g->et, 0));
    }
    drain(g, self);
    for (size_t i = 0; i < nv; i++)
        drop_vnode_raw(vs[i]);
    free(vs);
    drop_vnode_raw(g->vh);
    free(g->vt->eh);
    free(g->vt);
    free(g->et);
    for (int i = 0; i < g->max_threads; i++) {
        nbg_tree_free(&g->threads[i].trees[0]);
        nbg_tree_free(&g->threads[i].trees[1]);
    }
    free(g->threads);
    free(g);
}

int nbg_register(nbg_graph *g)
{
    for (int i = 0; i < g->max_threads; i++) {
        int expected = 0;
        if (atomic_compare_exchange_strong(&g->threads[i].in_use, &expected, 1))
            return i;
    }
    return -1;
}

int nbg_unregister(nbg_graph *g, int tid)
{
    nbg_tctx *t = &g->threads[tid];
    if (t->depth)
        return -1;
    atomic_store(&t->in_use, 0);
    return 0;
}

static inline nbg_tctx *enter(nbg_graph *g, int tid, int op)
{
    nbg_tctx *t = &g->threads[tid];
    t->op = op;
    t->steps = 0;
    nbg_pin(g, tid);
    return t;
}

static inline void leave(nbg_graph *g, int tid)
{
    nbg_unpin(g, tid);
    g->threads[tid].op = NBG_OP_OTHER;
}

/* ---- locate -------------------------------------------------------------- */

static void loc_v(nbg_graph *g, nbg_tctx *t, nbg_vnode *start, int64_t k, nbg_vnode **ppv, nbg_vnode **pcv)
{
    for (;;) {
    retry:
        /* a marked start can never be CAS'd again; fall back to the head */
        if (MRK(atomic_load(&start->vnxt)))
            start = g->vh;
        nbg_vnode *pv = start;
        nbg_vnode *cv = PTR(atomic_load(&pv->vnxt));
        for (;;) {
            t->steps++;
            uintptr_t cn = atomic_load(&cv->vnxt);
            if (MRK(cn)) {
                nbg_vnode *succ = PTR(cn);
                if (!xcas(t, &pv->vnxt, W(cv, 0), W(succ, 0)))
                    goto retry;
                retire_vertex(g, t, cv);
                cv = succ;
                continue;
            }
            if (cv->key >= k) {
                *ppv = pv;
                *pcv = cv;
                return;
            }
            pv = cv;
            cv = PTR(cn);
        }
    }
}

static void loc_c(nbg_tctx *t, nbg_vnode *start, int64_t k, nbg_vnode **ppv, nbg_vnode **pcv)
{
    nbg_vnode *pv = start;
    nbg_vnode *cv = PTR(atomic_load(&pv->vnxt));
    uint64_t steps = 1;
    while (cv->key < k) {
        pv = cv;
        cv = PTR(atomic_load(&cv->vnxt));
        steps++;
    }
    t->steps += steps;
    *ppv = pv;
    *pcv = cv;
}

static void loc_e(nbg_graph *g, nbg_tctx *t, nbg_vnode *u, int64_t l, nbg_enode **ppe, nbg_enode **pce)
{
    for (;;) {
    retry:;
        nbg_enode *pe = u->eh;
        nbg_enode *ce = PTR(atomic_load(&pe->enxt));
        for (;;) {
            t->steps++;
            uintptr_t cnt = atomic_load(&ce->enxt);
            if (!MRK(cnt) && MRK(atomic_load(&ce->ptv->vnxt))) {
                /* edge into a removed vertex: remove it logically first */
                if (!xcas(t, &ce->enxt, cnt, cnt | NBG_MARK))
                    goto retry;
                cnt |= NBG_MARK;
            }
            if (MRK(cnt)) {
                xfaa(t, &u->ecnt);
                if (g->instrument)
                    atomic_fetch_add(&u->n_purge, 1);
                if (!xcas(t, &pe->enxt, W(ce, 0), cnt & ~NBG_MARK))
                    goto retry;
                retire(g, t, &ce->hdr);
                ce = PTR(cnt);
                continue;
            }
            if (ce->key >= l) {
                *ppe = pe;
                *pce = ce;
                return;
            }
            pe = ce;
            ce = PTR(cnt);
        }
    }
}

static int locate_pair(nbg_graph *g, nbg_tctx *t, int64_t k, int64_t l, int helping, nbg_vnode **pu, nbg_vnode **pv)
{
    nbg_vnode *p, *cv1, *cv2;
    if (k < l) {
        if (helping)
            loc_v(g, t, g->vh, k, &p, &cv1);
        else
            loc_c(t, g->vh, k, &p, &cv1);
        if (cv1->key != k)
            return 0;
        if (helping)
            loc_v(g, t, cv1, l, &p, &cv2);
        else
            loc_c(t, cv1, l, &p, &cv2);
        if (cv2->key != l)
            return 0;
    } else {
        if (helping)
            loc_v(g, t, g->vh, l, &p, &cv2);
        else
            loc_c(t, g->vh, l, &p, &cv2);
        if (cv2->key != l)
            return 0;
        if (helping)
            loc_v(g, t, cv2, k, &p, &cv1);
        else
            loc_c(t, cv2, k, &p, &cv1);
        if (cv1->key != k)
            return 0;
    }
    *pu = cv1;
    *pv = cv2;
    return 1;
}

/* ---- vertices ------------------------------------------------------------ */

int nbg_add_vertex(nbg_graph *g, int tid, int64_t k)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_ADD_V);
    nbg_vnode *nv = NULL, *pv, *cv;
    int r;
    for (;;) {
        loc_v(g, t, g->vh, k, &pv, &cv);
        if (cv->key == k) {
            r = 0;
            break;
        }
        if (!nv)
            nv = new_vnode(g, k);
        atomic_store(&nv->vnxt, W(cv, 0));
        pause_at(g, NBG_OP_ADD_V);
        if (xcas(t, &pv->vnxt, W(cv, 0), W(nv, 0))) {
            nv = NULL;
            r = 1;
            break;
        }
    }
    if (nv)
        drop_vnode_raw(nv);
    leave(g, tid);
    return r;
}

int nbg_remove_vertex(nbg_graph *g, int tid, int64_t k)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_REM_V);
    nbg_vnode *pv, *cv;
    int r;
    for (;;) {
        loc_v(g, t, g->vh, k, &pv, &cv);
        if (cv->key != k) {
            r = 0;
            break;
        }
        uintptr_t cn = atomic_load(&cv->vnxt);
        if (MRK(cn))
            continue;
        pause_at(g, NBG_OP_REM_V);
        if (xcas(t, &cv->vnxt, cn, cn | NBG_MARK)) {
            if (xcas(t, &pv->vnxt, W(cv, 0), cn))
                retire_vertex(g, t, cv);
            else if (g->eager_unlink)
                loc_v(g, t, g->vh, k, &pv, &cv);
            r = 1;
            break;
        }
    }
    leave(g, tid);
    return r;
}

int nbg_contains_vertex(nbg_graph *g, int tid, int64_t k)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_CON_V);
    nbg_vnode *cv = PTR(atomic_load(&g->vh->vnxt));
    uint64_t steps = 1;
    while (cv->key < k) {
        cv = PTR(atomic_load(&cv->vnxt));
        steps++;
    }
    t->steps = steps;
    int r = cv->key == k && !MRK(atomic_load(&cv->vnxt));
    leave(g, tid);
    return r;
}

/* ---- edges --------------------------------------------------------------- */

int nbg_add_edge(nbg_graph *g, int tid, int64_t k, int64_t l)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_ADD_E);
    nbg_vnode *u, *v;
    nbg_enode *ne = NULL, *pe, *ce;
    int r;
    if (!locate_pair(g, t, k, l, 1, &u, &v)) {
        leave(g, tid);
        return NBG_VERTEX_NOT_PRESENT;
    }
    for (;;) {
        if (MRK(atomic_load(&u->vnxt)) || MRK(atomic_load(&v->vnxt))) {
            r = NBG_VERTEX_NOT_PRESENT;
            break;
        }
        loc_e(g, t, u, l, &pe, &ce);
        if (ce->key == l) {
            r = NBG_EDGE_PRESENT;
            break;
        }
        if (!ne) {
            if (!acquire_ref(v)) {
                r = NBG_VERTEX_NOT_PRESENT;
                break;
            }
            ne = new_enode(l, v, ce);
        }
        atomic_store(&ne->enxt, W(ce, 0));
        pause_at(g, NBG_OP_ADD_E);
        if (xcas(t, &pe->enxt, W(ce, 0), W(ne, 0))) {
            ne = NULL;
            xfaa(t, &u->ecnt);
            if (g->instrument)
                atomic_fetch_add(&u->n_add, 1);
            r = NBG_EDGE_ADDED;
            break;
        }
    }
    if (ne) {
        /* never published: only the reference needs dropping */
        release_ref(g, t, v);
        free(ne);
    }
    leave(g, tid);
    return r;
}

int nbg_remove_edge(nbg_graph *g, int tid, int64_t k, int64_t l)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_REM_E);
    nbg_vnode *u, *v;
    nbg_enode *pe, *ce;
    int r;
    if (!locate_pair(g, t, k, l, 1, &u, &v)) {
        leave(g, tid);
        return NBG_VERTEX_NOT_PRESENT;
    }
    for (;;) {
        if (MRK(atomic_load(&u->vnxt)) || MRK(atomic_load(&v->vnxt))) {
            r = NBG_VERTEX_NOT_PRESENT;
            break;
        }
        loc_e(g, t, u, l, &pe, &ce);
        if (ce->key != l) {
            r = NBG_EDGE_NOT_PRESENT;
            break;
        }
        uintptr_t cnt = atomic_load(&ce->enxt);
        if (MRK(cnt))
            continue;
        pause_at(g, NBG_OP_REM_E);
        if (xcas(t, &ce->enxt, cnt, cnt | NBG_MARK)) {
            xfaa(t, &u->ecnt);
            if (g->instrument)
                atomic_fetch_add(&u->n_rem, 1);
            if (xcas(t, &pe->enxt, W(ce, 0), cnt))
                retire(g, t, &ce->hdr);
            else
                loc_e(g, t, u, l, &pe, &ce);
            r = NBG_EDGE_REMOVED;
            break;
        }
    }
    leave(g, tid);
    return r;
}

int nbg_contains_edge(nbg_graph *g, int tid, int64_t k, int64_t l)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_CON_E);
    nbg_vnode *u, *v;
    int r;
    if (!locate_pair(g, t, k, l, 0, &u, &v)) {
        leave(g, tid);
        return NBG_VERTEX_NOT_PRESENT;
    }
    nbg_enode *ce = PTR(atomic_load(&u->eh->enxt));
    uint64_t steps = 1;
    while (ce->key < l) {
        ce = PTR(atomic_load(&ce->enxt));
        steps++;
    }
    t->steps += steps;
    /* ptv identity rules out a stale edge into an earlier v(l) */
    if (ce->key == l && ce->ptv == v && !MRK(atomic_load(&u->vnxt)) && !MRK(atomic_load(&v->vnxt)) &&
        !MRK(atomic_load(&ce->enxt)))
        r = NBG_EDGE_FOUND;
    else
        r = NBG_VERTEX_OR_EDGE_NOT_PRESENT;
    leave(g, tid);
    return r;
}

/* ---- reachability -------------------------------------------------------- */

static void push_rec(nbg_tree *tr, nbg_vnode *n, int64_t p)
{
    if (tr->len == tr->cap) {
        tr->cap = tr->cap ? tr->cap * 2 : 64;
        tr->recs = realloc(tr->recs, tr->cap * sizeof *tr->recs);
        if (!tr->recs)
            abort();
    }
    nbg_rec *r = &tr->recs[tr->len++];
    r->n = n;
    r->key = n->key;
    r->lecnt = atomic_load(&n->ecnt);
    r->p = p;
}

static void tree_collect(nbg_graph *g, nbg_tctx *t, int tid, nbg_vnode *u, nbg_vnode *v, nbg_tree *tr)
{
    uint64_t cnt = ++t->visit;
    uint64_t steps = 0;
    tr->len = 0;
    tr->found = 0;
    u->visited[tid] = cnt;
    push_rec(tr, u, -1);
    /* records after the root double as the BFS queue */
    for (size_t head = 0; head < tr->len; head++) {
        nbg_vnode *cn = tr->recs[head].n;
        nbg_enode *it = PTR(atomic_load(&cn->eh->enxt));
        while (it != g->et) {
            steps++;
            uintptr_t w = atomic_load(&it->enxt);
            if (!MRK(w)) {
                nbg_vnode *a = it->ptv;
                if (!MRK(atomic_load(&a->vnxt))) {
                    if (a == v) {
                        push_rec(tr, a, (int64_t)head);
                        tr->found = 1;
                        t->steps += steps;
                        return;
                    }
                    if (a->visited[tid] != cnt) {
                        a->visited[tid] = cnt;
                        push_rec(tr, a, (int64_t)head);
                    }
                }
            }
            it = PTR(w);
        }
    }
    t->steps += steps;
}

static inline nbg_vnode *parent_of(const nbg_tree *tr, const nbg_rec *r)
{
    return r->p < 0 ? NULL : tr->recs[r->p].n;
}

int nbg_compare_tree(const nbg_tree *ot, const nbg_tree *nt)
{
    if (!ot || !nt || ot->len != nt->len)
        return 0;
    for (size_t i = 0; i < ot->len; i++) {
        const nbg_rec *a = &ot->recs[i], *b = &nt->recs[i];
        if (a->n != b->n || a->lecnt != b->lecnt || parent_of(ot, a) != parent_of(nt, b))
            return 0;
    }
    return 1;
}

int nbg_compare_path(const nbg_tree *ot, const nbg_tree *nt)
{
    if (!ot || !nt || !ot->len || !nt->len)
        return 0;
    int64_t i = (int64_t)ot->len - 1, j = (int64_t)nt->len - 1;
    while (i >= 0 && j >= 0) {
        const nbg_rec *a = &ot->recs[i], *b = &nt->recs[j];
        if (a->n != b->n || a->lecnt != b->lecnt || parent_of(ot, a) != parent_of(nt, b))
            return 0;
        i = a->p;
        j = b->p;
    }
    return i < 0 && j < 0;
}

static void path_from(const nbg_tree *tr, nbg_path *out)
{
    out->len = 0;
    for (int64_t i = (int64_t)tr->len - 1; i >= 0; i = tr->recs[i].p) {
        if (out->len == out->cap) {
            out->cap = out->cap ? out->cap * 2 : 16;
            out->keys = realloc(out->keys, out->cap * sizeof *out->keys);
            if (!out->keys)
                abort();
        }
        out->keys[out->len++] = tr->recs[i].key;
    }
    for (size_t a = 0, b = out->len ? out->len - 1 : 0; a < b; a++, b--) {
        int64_t x = out->keys[a];
        out->keys[a] = out->keys[b];
        out->keys[b] = x;
    }
}

static int scan(nbg_graph *g, nbg_tctx *t, int tid, nbg_vnode *u, nbg_vnode *v, int max_rounds, nbg_path *out)
{
    nbg_tree *ot = &t->trees[0], *nt = &t->trees[1];
    tree_collect(g, t, tid, u, v, ot);
    t->collections = 1;
    int rounds = 0;
    for (;;) {
        if (max_rounds > 0 && rounds >= max_rounds)
            return NBG_PATH_INCONCLUSIVE;
        if (g->collect_cb)
            g->collect_cb(g->collect_arg, (int)t->collections);
        tree_collect(g, t, tid, u, v, nt);
        t->collections++;
        rounds++;
        if (ot->found && nt->found && nbg_compare_path(ot, nt)) {
            if (out)
                path_from(nt, out);
            return NBG_PATH_FOUND;
        }
        if (!ot->found && !nt->found && nbg_compare_tree(ot, nt))
            return NBG_PATH_NONE;
        nbg_tree *x = ot;
        ot = nt;
        nt = x;
    }
}

int nbg_get_path(nbg_graph *g, int tid, int64_t k, int64_t l, int max_rounds, nbg_path *out)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_PATH);
    nbg_vnode *u, *v;
    int r = NBG_PATH_NONE;
    t->collections = 0;
    if (locate_pair(g, t, k, l, 0, &u, &v) && !MRK(atomic_load(&u->vnxt)) && !MRK(atomic_load(&v->vnxt)))
        r = scan(g, t, tid, u, v, max_rounds, out);
    leave(g, tid);
    return r;
}

int nbg_tree_collect(nbg_graph *g, int tid, int64_t k, int64_t l, nbg_tree *out)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_PATH);
    nbg_vnode *u, *v;
    int r = -1;
    if (locate_pair(g, t, k, l, 0, &u, &v)) {
        tree_collect(g, t, tid, u, v, out);
        r = out->found;
    }
    leave(g, tid);
    return r;
}

void nbg_tree_free(nbg_tree *t)
{
    free(t->recs);
    t->recs = NULL;
    t->len = t->cap = 0;
}

void nbg_path_free(nbg_path *p)
{
    free(p->keys);
    p->keys = NULL;
    p->len = p->cap = 0;
}

/* ---- locate helpers by key ---------------------------------------------- */

nbg_vnode *nbg_find_physical(nbg_graph *g, int64_t k)
{
    nbg_vnode *cv = g->vh;
    while (cv->key < k)
        cv = PTR(atomic_load(&cv->vnxt));
    return cv->key == k ? cv : NULL;
}

void nbg_loc_v(nbg_graph *g, int tid, int64_t start, int use_start, int64_t k, int64_t *pk, int64_t *ck)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_OTHER);
    nbg_vnode *s = use_start ? nbg_find_physical(g, start) : g->vh;
    nbg_vnode *pv, *cv;
    loc_v(g, t, s ? s : g->vh, k, &pv, &cv);
    *pk = pv->key;
    *ck = cv->key;
    leave(g, tid);
}

void nbg_loc_c(nbg_graph *g, int tid, int64_t start, int use_start, int64_t k, int64_t *pk, int64_t *ck)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_OTHER);
    nbg_vnode *s = use_start ? nbg_find_physical(g, start) : g->vh;
    nbg_vnode *pv, *cv;
    loc_c(t, s ? s : g->vh, k, &pv, &cv);
    *pk = pv->key;
    *ck = cv->key;
    leave(g, tid);
}

int nbg_loc_e(nbg_graph *g, int tid, int64_t k, int64_t l, int64_t *pk, int64_t *ck)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_OTHER);
    nbg_vnode *u = nbg_find_physical(g, k);
    int r = -1;
    if (u) {
        nbg_enode *pe, *ce;
        loc_e(g, t, u, l, &pe, &ce);
        *pk = pe->key;
        *ck = ce->key;
        r = 0;
    }
    leave(g, tid);
    return r;
}

int nbg_pair(nbg_graph *g, int tid, int64_t k, int64_t l, int helping)
{
    nbg_tctx *t = enter(g, tid, NBG_OP_OTHER);
    nbg_vnode *u, *v;
    int r = locate_pair(g, t, k, l, helping, &u, &v);
    leave(g, tid);
    return r;
}

/* ---- staging and inspection --------------------------------------------- */

int nbg_inject_vertex_mark(nbg_graph *g, int64_t k)
{
    nbg_vnode *cv = nbg_find_physical(g, k);
    if (!cv)
        return -1;
    uintptr_t w = atomic_load(&cv->vnxt);
    return !MRK(w) && nbg_cas_link(&cv->vnxt, w, w | NBG_MARK);
}

int nbg_inject_edge_mark(nbg_graph *g, int64_t k, int64_t l)
{
    nbg_vnode *u = nbg_find_physical(g, k);
    if (!u)
        return -1;
    nbg_enode *ce = PTR(atomic_load(&u->eh->enxt));
    while (ce->key < l)
        ce = PTR(atomic_load(&ce->enxt));
    if (ce->key != l)
        return -1;
    uintptr_t w = atomic_load(&ce->enxt);
    return !MRK(w) && nbg_cas_link(&ce->enxt, w, w | NBG_MARK);
}

void nbg_op_stats(nbg_graph *g, uint64_t *cas, uint64_t *faa)
{
    memset(cas, 0, NBG_N_OPS * sizeof *cas);
    memset(faa, 0, NBG_N_OPS * sizeof *faa);
    for (int i = 0; i < g->max_threads; i++) {
        for (int j = 0; j < NBG_N_OPS; j++) {
            cas[j] += atomic_load_explicit(&g->threads[i].cas[j], memory_order_relaxed);
            faa[j] += atomic_load_explicit(&g->threads[i].faa[j], memory_order_relaxed);
        }
    }
}

void nbg_reset_op_stats(nbg_graph *g)
{
    for (int i = 0; i < g->max_threads; i++) {
        for (int j = 0; j < NBG_N_OPS; j++) {
            atomic_store_explicit(&g->threads[i].cas[j], 0, memory_order_relaxed);
            atomic_store_explicit(&g->threads[i].faa[j], 0, memory_order_relaxed);
        }
    }
}

int nbg_check_structure(nbg_graph *g)
{
    int64_t prev = NBG_KEY_MIN;
    for (nbg_vnode *cv = PTR(atomic_load(&g->vh->vnxt)); cv != g->vt; cv = PTR(atomic_load(&cv->vnxt))) {
        if (cv->key <= prev)
            return 1;
        prev = cv->key;
        int64_t eprev = NBG_KEY_MIN;
        for (nbg_enode *ce = PTR(atomic_load(&cv->eh->enxt)); ce != g->et; ce = PTR(atomic_load(&ce->enxt))) {
            if (ce->key <= eprev)
                return 2;
            if (ce->key != ce->ptv->key)
                return 3;
            eprev = ce->key;
        }
    }
    return 0;
}
