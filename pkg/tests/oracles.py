"""Independent reference implementations used as test oracles.

Everything here is deliberately naive: pure-Python loops over pairs,
explicit sorting with (distance, index) keys, central differences.
"""
import math


def dist(a, b):
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))


def ranks(points):
    """rank[i][j] for j != i, 1-based, ties by index."""
    n = len(points)
    out = [[0] * n for _ in range(n)]
    for i in range(n):
        others = sorted((dist(points[i], points[j]), j) for j in range(n) if j != i)
        for r, (_, j) in enumerate(others, 1):
            out[i][j] = r
    return out


def trustworthiness(reference, embedding, k):
    n = len(reference)
    r_ref = ranks(reference)
    r_emb = ranks(embedding)
    total = 0
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            if r_emb[i][j] <= k and r_ref[i][j] > k:
                total += r_ref[i][j] - k
    return 1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * total


def continuity(reference, embedding, k):
    n = len(reference)
    r_ref = ranks(reference)
    r_emb = ranks(embedding)
    total = 0
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            if r_ref[i][j] <= k and r_emb[i][j] > k:
                total += r_emb[i][j] - k
    return 1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * total


def kruskal_stress(reference, embedding):
    """Double loop over all ordered pairs, optimal scale sum(d*e)/sum(e*e)."""
    n = len(reference)
    sde = see = sdd = 0.0
    pairs = []
    for a in range(n):
        for b in range(n):
            d = dist(reference[a], reference[b])
            e = dist(embedding[a], embedding[b])
            pairs.append((d, e))
            sde += d * e
            see += e * e
            sdd += d * d
    beta = sde / see
    num = sum((d - beta * e) ** 2 for d, e in pairs)
    return math.sqrt(num / sdd)


def central_difference(f, x, step=1e-5):
    """Gradient of scalar ``f`` at numpy array ``x`` (perturbed in place, restored)."""
    import numpy as np

    grad = np.zeros_like(x, dtype=float)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for n in range(flat.size):
        old = flat[n]
        flat[n] = old + step
        up = f()
        flat[n] = old - step
        down = f()
        flat[n] = old
        g[n] = (up - down) / (2 * step)
    return grad


def relative_error(analytic, numeric):
    import numpy as np

    a = np.asarray(analytic, dtype=float)
    b = np.asarray(numeric, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)
