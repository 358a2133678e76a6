# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for token edit distance.

Pairwise Levenshtein over token-id sequences is the one kernel whose cost
is quadratic per pair and quadratic in corpus size when used for pairwise
similarity targets, so it gets a C implementation. The pure-Python twin
lives in _speedups_fallback; both must stay behaviorally identical (see
tests/test_kernels.py).
"""

from libc.stdlib cimport free, malloc


cdef int _lev(const long long *a, Py_ssize_t la, const long long *b, Py_ssize_t lb) nogil:
    cdef Py_ssize_t i, j
    cdef int sub, best, cand
    cdef int *prev
    cdef int *cur
    cdef int *tmp
    if la == 0:
        return <int> lb
    if lb == 0:
        return <int> la
    prev = <int *> malloc((lb + 1) * sizeof(int))
    cur = <int *> malloc((lb + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        if prev != NULL:
            free(prev)
        if cur != NULL:
            free(cur)
        return -1
    for j in range(lb + 1):
        prev[j] = <int> j
    for i in range(la):
        cur[0] = <int> (i + 1)
        for j in range(lb):
            sub = prev[j] + (0 if a[i] == b[j] else 1)
            best = sub
            cand = prev[j + 1] + 1
            if cand < best:
                best = cand
            cand = cur[j] + 1
            if cand < best:
                best = cand
            cur[j + 1] = best
        tmp = prev
        prev = cur
        cur = tmp
    best = prev[lb]
    free(prev)
    free(cur)
    return best


cdef long long *_to_array(seq, Py_ssize_t *length) except? NULL:
    cdef Py_ssize_t n = len(seq)
    cdef Py_ssize_t i
    cdef long long *buf = <long long *> malloc(max(n, 1) * sizeof(long long))
    if buf == NULL:
        raise MemoryError()
    for i in range(n):
        buf[i] = seq[i]
    length[0] = n
    return buf


def levenshtein_ids(a, b):
    """Edit distance between two sequences of integer token ids."""
    cdef Py_ssize_t la = 0, lb = 0
    cdef long long *pa = _to_array(a, &la)
    cdef long long *pb
    cdef int dist
    try:
        pb = _to_array(b, &lb)
    except BaseException:
        free(pa)
        raise
    with nogil:
        dist = _lev(pa, la, pb, lb)
    free(pa)
    free(pb)
    if dist < 0:
        raise MemoryError()
    return dist


def similarities_to_many(query, corpus):
    """1 - normalized edit distance from one query to each corpus sequence.

    Two empty sequences count as identical (similarity 1.0).
    """
    cdef Py_ssize_t lq = 0, lc = 0, denom
    cdef long long *pq = _to_array(query, &lq)
    cdef long long *pc
    cdef int dist
    out = []
    try:
        for seq in corpus:
            pc = _to_array(seq, &lc)
            with nogil:
                dist = _lev(pq, lq, pc, lc)
            free(pc)
            if dist < 0:
                raise MemoryError()
            denom = lq if lq > lc else lc
            if denom == 0:
                out.append(1.0)
            else:
                out.append(1.0 - (<double> dist) / (<double> denom))
    finally:
        free(pq)
    return out
