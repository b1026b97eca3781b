"""Reference implementations used only as test oracles."""
import itertools
import math

import numpy as np


def brute_force_assignment(a) -> float:
    """Minimum over every injection of rows into columns (inf entries allowed)."""
    a = np.asarray(a, dtype=float)
    n, m = a.shape
    perms = np.array(list(itertools.permutations(range(m), n)), dtype=np.int64)
    if perms.size == 0:
        return math.inf
    totals = a[np.arange(n)[None, :], perms].sum(axis=1)
    return float(totals.min())


def welch_t_reference(a, b) -> float:
    """Welch t from the textbook formula, with explicit sums."""
    na, nb = len(a), len(b)
    ma = sum(a) / na
    mb = sum(b) / nb
    va = sum((x - ma) ** 2 for x in a) / (na - 1)
    vb = sum((x - mb) ** 2 for x in b) / (nb - 1)
    return (ma - mb) / math.sqrt(va / na + vb / nb)


def cost_reference(sv, io, f, cells, alpha, beta, gamma) -> float:
    """Term-by-term cost: every cell adds a*SV/DS + b*IO*C + g*F*DS."""
    total = 0.0
    for ds, cap in cells:
        total += alpha * sv / ds
        total += beta * io * cap
        total += gamma * f * ds
    return total
