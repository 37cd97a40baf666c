"""Ordered labeled tree edit distance (Zhang-Shasha) with unit costs.

Insert and delete cost 1; relabeling costs 1 when labels differ, 0 otherwise.
The dynamic program runs over keyroot pairs using leftmost-leaf-descendant
indices in postorder, which keeps the forest-distance table small.
"""
from __future__ import annotations

import numpy as np

from .syntax import ConstituencyTree


def _annotate(root: ConstituencyTree) -> tuple[list[str], list[int], list[int]]:
    """Postorder labels, leftmost-leaf-descendant per node, and keyroots."""
    labels: list[str] = []
    lmds: list[int] = []

    def walk(node: ConstituencyTree) -> int:
        if node.is_leaf:
            labels.append(node.label)
            lmds.append(len(labels) - 1)
            return len(labels) - 1
        first = None
        for child in node.children:
            leftmost = walk(child)
            if first is None:
                first = leftmost
        labels.append(node.label)
        lmds.append(first)
        return first

    walk(root)
    keyroots = sorted({lmd: i for i, lmd in enumerate(lmds)}.values())
    return labels, lmds, keyroots


def ted(t1: ConstituencyTree, t2: ConstituencyTree) -> int:
    """Minimum number of node inserts, deletes, and relabels turning t1 into t2."""
    labels1, lmd1, kr1 = _annotate(t1)
    labels2, lmd2, kr2 = _annotate(t2)
    n1, n2 = len(labels1), len(labels2)
    dist = np.zeros((n1, n2), dtype=np.int64)

    for i in kr1:
        for j in kr2:
            # forest distance between the subtrees rooted at keyroots i and j
            m = i - lmd1[i] + 2
            n = j - lmd2[j] + 2
            fd = np.zeros((m, n), dtype=np.int64)
            ioff = lmd1[i] - 1
            joff = lmd2[j] - 1
            for x in range(1, m):
                fd[x][0] = fd[x - 1][0] + 1
            for y in range(1, n):
                fd[0][y] = fd[0][y - 1] + 1
            for x in range(1, m):
                for y in range(1, n):
                    if lmd1[i] == lmd1[x + ioff] and lmd2[j] == lmd2[y + joff]:
                        relabel = 0 if labels1[x + ioff] == labels2[y + joff] else 1
                        fd[x][y] = min(fd[x - 1][y] + 1,
                                       fd[x][y - 1] + 1,
                                       fd[x - 1][y - 1] + relabel)
                        dist[x + ioff][y + joff] = fd[x][y]
                    else:
                        p = lmd1[x + ioff] - 1 - ioff
                        q = lmd2[y + joff] - 1 - joff
                        fd[x][y] = min(fd[x - 1][y] + 1,
                                       fd[x][y - 1] + 1,
                                       fd[p][q] + dist[x + ioff][y + joff])
    return int(dist[n1 - 1][n2 - 1])


def ted_mean(pairs) -> float:
    """Mean edit distance over (tree, reference tree) pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("ted_mean needs at least one tree pair")
    return sum(ted(a, b) for a, b in pairs) / len(pairs)
