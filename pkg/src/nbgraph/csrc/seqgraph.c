/* Sequential adjacency list, optionally behind one global mutex.
 *
 * Same sorted-list layout as the lock-free engine, including lazy purging of
 * edges into removed vertices, so throughput differences come from
 * synchronisation rather than data-structure choice.
 */

#include "nbgraph.h"

#include <stdlib.h>

typedef struct sq_e sq_e;

typedef struct sq_v {
    int64_t key;
    struct sq_v *nxt;
    sq_e *edges;
    int dead;
    uint32_t incoming;
    uint64_t stamp;
} sq_v;

struct sq_e {
    int64_t key;
    sq_v *target;
    sq_e *nxt;
};

struct nbg_seq {
    sq_v head;
    sq_v tail;
    uint64_t stamp;
    int locked;
    pthread_mutex_t lock;
    sq_v **queue;
    int64_t *parent;
    size_t qcap;
};

nbg_seq *nbg_seq_create(int locked)
{
    nbg_seq *s = calloc(1, sizeof *s);
    if (!s)
        return NULL;
    s->head.key = NBG_KEY_MIN;
    s->tail.key = NBG_KEY_MAX;
    s->head.nxt = &s->tail;
    s->locked = locked;
    pthread_mutex_init(&s->lock, NULL);
    return s;
}

static void drop_target(sq_v *v)
{
    if (--v->incoming == 0 && v->dead)
        free(v);
}

static void free_edges(sq_v *v)
{
    sq_e *e = v->edges;
    while (e) {
        sq_e *n = e->nxt;
        drop_target(e->target);
        free(e);
        e = n;
    }
    v->edges = NULL;
}

void nbg_seq_destroy(nbg_seq *s)
{
    if (!s)
        return;
    sq_v *v = s->head.nxt;
    while (v != &s->tail) {
        sq_v *n = v->nxt;
        free_edges(v);
        v = n;
    }
    v = s->head.nxt;
    while (v != &s->tail) {
        sq_v *n = v->nxt;
        free(v);
        v = n;
    }
    pthread_mutex_destroy(&s->lock);
    free(s->queue);
    free(s->parent);
    free(s);
}

static inline void lock(nbg_seq *s)
{
    if (s->locked)
        pthread_mutex_lock(&s->lock);
}

static inline void unlock(nbg_seq *s)
{
    if (s->locked)
        pthread_mutex_unlock(&s->lock);
}

static sq_v *find(nbg_seq *s, int64_t k, sq_v **pred)
{
    sq_v *pv = &s->head, *cv = pv->nxt;
    while (cv->key < k) {
        pv = cv;
        cv = cv->nxt;
    }
    if (pred)
        *pred = pv;
    return cv;
}

static sq_v *vertex(nbg_seq *s, int64_t k)
{
    sq_v *cv = find(s, k, NULL);
    return cv->key == k ? cv : NULL;
}

/* drops edges into removed vertices on the way */
static sq_e **find_edge(sq_v *u, int64_t l)
{
    sq_e **pe = &u->edges;
    while (*pe) {
        sq_e *ce = *pe;
        if (ce->target->dead) {
            *pe = ce->nxt;
            drop_target(ce->target);
            free(ce);
            continue;
        }
        if (ce->key >= l)
            break;
        pe = &ce->nxt;
    }
    return pe;
}

int nbg_seq_add_vertex(nbg_seq *s, int64_t k)
{
    lock(s);
    sq_v *pv, *cv = find(s, k, &pv);
    int r = 0;
    if (cv->key != k) {
        sq_v *nv = calloc(1, sizeof *nv);
        if (!nv)
            abort();
        nv->key = k;
        nv->nxt = cv;
        pv->nxt = nv;
        r = 1;
    }
    unlock(s);
    return r;
}

int nbg_seq_remove_vertex(nbg_seq *s, int64_t k)
{
    lock(s);
    sq_v *pv, *cv = find(s, k, &pv);
    int r = 0;
    if (cv->key == k) {
        pv->nxt = cv->nxt;
        cv->dead = 1;
        free_edges(cv);
        if (cv->incoming == 0)
            free(cv);
        r = 1;
    }
    unlock(s);
    return r;
}

int nbg_seq_contains_vertex(nbg_seq *s, int64_t k)
{
    lock(s);
    int r = find(s, k, NULL)->key == k;
    unlock(s);
    return r;
}

int nbg_seq_add_edge(nbg_seq *s, int64_t k, int64_t l)
{
    lock(s);
    sq_v *u = vertex(s, k), *v = u ? vertex(s, l) : NULL;
    int r = NBG_VERTEX_NOT_PRESENT;
    if (v) {
        sq_e **pe = find_edge(u, l);
        if (*pe && (*pe)->key == l) {
            r = NBG_EDGE_PRESENT;
        } else {
            sq_e *ne = malloc(sizeof *ne);
            if (!ne)
                abort();
            ne->key = l;
            ne->target = v;
            ne->nxt = *pe;
            *pe = ne;
            v->incoming++;
            r = NBG_EDGE_ADDED;
        }
    }
    unlock(s);
    return r;
}

int nbg_seq_remove_edge(nbg_seq *s, int64_t k, int64_t l)
{
    lock(s);
    sq_v *u = vertex(s, k), *v = u ? vertex(s, l) : NULL;
    int r = NBG_VERTEX_NOT_PRESENT;
    if (v) {
        sq_e **pe = find_edge(u, l);
        if (*pe && (*pe)->key == l) {
            sq_e *ce = *pe;
            *pe = ce->nxt;
            drop_target(ce->target);
            free(ce);
            r = NBG_EDGE_REMOVED;
        } else {
            r = NBG_EDGE_NOT_PRESENT;
        }
    }
    unlock(s);
    return r;
}

int nbg_seq_contains_edge(nbg_seq *s, int64_t k, int64_t l)
{
    lock(s);
    sq_v *u = vertex(s, k), *v = u ? vertex(s, l) : NULL;
    int r = NBG_VERTEX_NOT_PRESENT;
    if (v) {
        sq_e *ce = u->edges;
        while (ce && ce->key < l)
            ce = ce->nxt;
        r = ce && ce->key == l && ce->target == v ? NBG_EDGE_FOUND : NBG_VERTEX_OR_EDGE_NOT_PRESENT;
    }
    unlock(s);
    return r;
}

static void qpush(nbg_seq *s, size_t *len, sq_v *v, int64_t p)
{
    if (*len == s->qcap) {
        s->qcap = s->qcap ? s->qcap * 2 : 256;
        s->queue = realloc(s->queue, s->qcap * sizeof *s->queue);
        s->parent = realloc(s->parent, s->qcap * sizeof *s->parent);
        if (!s->queue || !s->parent)
            abort();
    }
    s->queue[*len] = v;
    s->parent[*len] = p;
    (*len)++;
}

int nbg_seq_get_path(nbg_seq *s, int64_t k, int64_t l, nbg_path *out)
{
    lock(s);
    sq_v *u = vertex(s, k), *v = u ? vertex(s, l) : NULL;
    int r = NBG_PATH_NONE;
    if (v) {
        uint64_t stamp = ++s->stamp;
        size_t len = 0;
        u->stamp = stamp;
        qpush(s, &len, u, -1);
        for (size_t head = 0; head < len && r == NBG_PATH_NONE; head++) {
            for (sq_e *ce = s->queue[head]->edges; ce; ce = ce->nxt) {
                sq_v *y = ce->target;
                if (y->dead)
                    continue;
                if (y == v) {
                    qpush(s, &len, v, (int64_t)head);
                    r = NBG_PATH_FOUND;
                    break;
                }
                if (y->stamp != stamp) {
                    y->stamp = stamp;
                    qpush(s, &len, y, (int64_t)head);
                }
            }
        }
        if (r == NBG_PATH_FOUND && out) {
            out->len = 0;
            for (int64_t i = (int64_t)len - 1; i >= 0; i = s->parent[i]) {
                if (out->len == out->cap) {
                    out->cap = out->cap ? out->cap * 2 : 16;
                    out->keys = realloc(out->keys, out->cap * sizeof *out->keys);
                    if (!out->keys)
                        abort();
                }
                out->keys[out->len++] = s->queue[i]->key;
            }
            for (size_t a = 0, b = out->len - 1; a < b; a++, b--) {
                int64_t x = out->keys[a];
                out->keys[a] = out->keys[b];
                out->keys[b] = x;
            }
        }
    }
    unlock(s);
    return r;
}

void nbg_seq_walk(nbg_seq *s, void (*vertex_cb)(void *, int64_t), void (*edge_cb)(void *, int64_t, int64_t), void *arg)
{
    lock(s);
    for (sq_v *v = s->head.nxt; v != &s->tail; v = v->nxt) {
        vertex_cb(arg, v->key);
        for (sq_e *e = v->edges; e; e = e->nxt)
            if (!e->target->dead)
                edge_cb(arg, v->key, e->key);
    }
    unlock(s);
}
