"""Pure-Python edit-distance kernels.

Same contracts as the compiled ``textcf._speedups`` module; which one is in
use is decided once, in ``textcf.kernels``.
"""

from __future__ import annotations

BACKEND = "python"


def lev_distance(a, b) -> int:
    """Edit distance between two integer sequences with unit costs."""
    m, n = len(a), len(b)
    if m == 0:
        return n
    if n == 0:
        return m
    prev = list(range(n + 1))
    cur = [0] * (n + 1)
    for i in range(1, m + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, n + 1):
            cost = 0 if ai == b[j - 1] else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev, cur = cur, prev
    return prev[n]


def tree_distance(labels_a, lmds_a, keyroots_a, labels_b, lmds_b, keyroots_b) -> int:
    """Tree edit distance with unit costs over post-order array form.

    ``labels_*`` are integer node labels in post-order, ``lmds_*`` the
    leftmost-leaf-descendant index of each node, ``keyroots_*`` the sorted
    keyroot indices (the standard keyroot dynamic program).
    """
    m, n = len(labels_a), len(labels_b)
    td = [[0] * n for _ in range(m)]
    for i in keyroots_a:
        la = lmds_a[i]
        for j in keyroots_b:
            lb = lmds_b[j]
            rows = i - la + 2
            cols = j - lb + 2
            fd = [[0] * cols for _ in range(rows)]
            ioff = la - 1
            joff = lb - 1
            for x in range(1, rows):
                fd[x][0] = fd[x - 1][0] + 1
            for y in range(1, cols):
                fd[0][y] = fd[0][y - 1] + 1
            for x in range(1, rows):
                for y in range(1, cols):
                    if la == lmds_a[x + ioff] and lb == lmds_b[y + joff]:
                        cost = 0 if labels_a[x + ioff] == labels_b[y + joff] else 1
                        fd[x][y] = min(
                            fd[x - 1][y] + 1,
                            fd[x][y - 1] + 1,
                            fd[x - 1][y - 1] + cost,
                        )
                        td[x + ioff][y + joff] = fd[x][y]
                    else:
                        p = lmds_a[x + ioff] - 1 - ioff
                        q = lmds_b[y + joff] - 1 - joff
                        fd[x][y] = min(
                            fd[x - 1][y] + 1,
                            fd[x][y - 1] + 1,
                            fd[p][q] + td[x + ioff][y + joff],
                        )
    return td[m - 1][n - 1]
