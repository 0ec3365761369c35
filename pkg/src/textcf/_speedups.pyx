# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled edit-distance kernels; mirror of textcf._kernels_py."""

from libc.stdlib cimport free, malloc

BACKEND = "cython"


cdef inline int _min3(int a, int b, int c):
    if b < a:
        a = b
    if c < a:
        a = c
    return a


def lev_distance(int[:] a, int[:] b):
    """Edit distance between two integer sequences with unit costs."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = b.shape[0]
    if m == 0:
        return n
    if n == 0:
        return m
    cdef int *prev = <int *> malloc((n + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((n + 1) * sizeof(int))
    cdef int *tmp
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef int ai, cost, result
    try:
        for j in range(n + 1):
            prev[j] = <int> j
        for i in range(1, m + 1):
            cur[0] = <int> i
            ai = a[i - 1]
            for j in range(1, n + 1):
                cost = 0 if ai == b[j - 1] else 1
                cur[j] = _min3(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            tmp = prev
            prev = cur
            cur = tmp
        result = prev[n]
    finally:
        free(prev)
        free(cur)
    return result


def tree_distance(int[:] labels_a, int[:] lmds_a, int[:] keyroots_a,
                  int[:] labels_b, int[:] lmds_b, int[:] keyroots_b):
    """Tree edit distance with unit costs over post-order array form."""
    cdef Py_ssize_t m = labels_a.shape[0]
    cdef Py_ssize_t n = labels_b.shape[0]
    cdef Py_ssize_t rows_max = m + 1
    cdef Py_ssize_t cols_max = n + 1
    cdef int *td = <int *> malloc(m * n * sizeof(int))
    cdef int *fd = <int *> malloc(rows_max * cols_max * sizeof(int))
    if td == NULL or fd == NULL:
        free(td)
        free(fd)
        raise MemoryError()
    cdef Py_ssize_t ki, kj, x, y, rows, cols
    cdef int i, j, la, lb, ioff, joff, p, q, cost, result
    try:
        for ki in range(keyroots_a.shape[0]):
            i = keyroots_a[ki]
            la = lmds_a[i]
            for kj in range(keyroots_b.shape[0]):
                j = keyroots_b[kj]
                lb = lmds_b[j]
                rows = i - la + 2
                cols = j - lb + 2
                ioff = la - 1
                joff = lb - 1
                fd[0] = 0
                for x in range(1, rows):
                    fd[x * cols_max] = fd[(x - 1) * cols_max] + 1
                for y in range(1, cols):
                    fd[y] = fd[y - 1] + 1
                for x in range(1, rows):
                    for y in range(1, cols):
                        if la == lmds_a[x + ioff] and lb == lmds_b[y + joff]:
                            cost = 0 if labels_a[x + ioff] == labels_b[y + joff] else 1
                            fd[x * cols_max + y] = _min3(
                                fd[(x - 1) * cols_max + y] + 1,
                                fd[x * cols_max + y - 1] + 1,
                                fd[(x - 1) * cols_max + y - 1] + cost,
                            )
                            td[(x + ioff) * n + (y + joff)] = fd[x * cols_max + y]
                        else:
                            p = lmds_a[x + ioff] - 1 - ioff
                            q = lmds_b[y + joff] - 1 - joff
                            fd[x * cols_max + y] = _min3(
                                fd[(x - 1) * cols_max + y] + 1,
                                fd[x * cols_max + y - 1] + 1,
                                fd[p * cols_max + q] + td[(x + ioff) * n + (y + joff)],
                            )
        result = td[(m - 1) * n + (n - 1)]
    finally:
        free(td)
        free(fd)
    return result
