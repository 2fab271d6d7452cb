"""Independent reference implementations used to check the engine.

Everything here is deliberately naive: per-split recomputation, relaxation
to a fixed point, per-pixel ray casting, support-subset enumeration. None
of it shares code with the package.
"""

import itertools
import math
from fractions import Fraction

import numpy as np

SQRT2 = math.sqrt(2.0)
NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def otsu_exhaustive(counts) -> int:
    """Argmax of between-class variance over all 256 split levels, evaluated
    from the definition for every k in exact rational arithmetic."""
    counts = [int(c) for c in counts]
    total = sum(counts)

    def variance(k):
        w0 = sum(counts[: k + 1])
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            return Fraction(0)
        mu0 = Fraction(sum(i * counts[i] for i in range(k + 1)), w0)
        mu1 = Fraction(sum(i * counts[i] for i in range(k + 1, 256)), w1)
        return w0 * w1 * (mu0 - mu1) ** 2

    best_k, best_v = 0, Fraction(0)
    for k in range(256):
        v = variance(k)
        if v > best_v:
            best_k, best_v = k, v
    return best_k


def grid_min_cost(costs, frm, to) -> float:
    """Minimum path cost by relaxation to a fixed point (no priority queue,
    no visit order assumptions). Entering pixel v costs costs[v], times
    sqrt(2) on diagonal moves."""
    h, w = costs.shape
    cost = [[float(costs[y, x]) for x in range(w)] for y in range(h)]
    dist = [[math.inf] * w for _ in range(h)]
    sx, sy = frm
    dist[sy][sx] = 0.0
    changed = True
    while changed:
        changed = False
        for y in range(h):
            for x in range(w):
                d = dist[y][x]
                if d == math.inf:
                    continue
                for dy, dx in NEIGHBORS:
                    ny, nx = y + dy, x + dx
                    if not (0 <= ny < h and 0 <= nx < w):
                        continue
                    step = cost[ny][nx]
                    if dy != 0 and dx != 0:
                        step *= SQRT2
                    nd = d + step
                    if nd < dist[ny][nx]:
                        dist[ny][nx] = nd
                        changed = True
    return dist[to[1]][to[0]]


def enumerate_paths_min_cost(costs, frm, to) -> float:
    """True exhaustive minimum over all simple paths. Only viable on tiny
    grids (up to about 4x4)."""
    h, w = costs.shape
    best = [math.inf]

    def dfs(x, y, acc, seen):
        if acc >= best[0]:
            return
        if (x, y) == to:
            best[0] = acc
            return
        for dy, dx in NEIGHBORS:
            nx, ny = x + dx, y + dy
            if 0 <= nx < w and 0 <= ny < h and (nx, ny) not in seen:
                step = float(costs[ny, nx])
                if dy != 0 and dx != 0:
                    step *= SQRT2
                seen.add((nx, ny))
                dfs(nx, ny, acc + step, seen)
                seen.remove((nx, ny))

    dfs(frm[0], frm[1], 0.0, {tuple(frm)})
    return best[0]


def even_odd_inside(polygon, px, py) -> bool:
    """Classic per-point crossing test in exact integer arithmetic."""
    verts = list(polygon)
    if verts[0] == verts[-1]:
        verts = verts[:-1]
    inside = False
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            dy = y2 - y1
            lhs = (px - x1) * dy
            rhs = (x2 - x1) * (py - y1)
            if (lhs < rhs) if dy > 0 else (lhs > rhs):
                inside = not inside
    return inside


def rasterize_bruteforce(polygon, exclude) -> set:
    """Interior pixels by scanning the bounding box point by point."""
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    out = set()
    for py in range(min(ys), max(ys) + 1):
        for px in range(min(xs), max(xs) + 1):
            if (px, py) not in exclude and even_odd_inside(polygon, px, py):
                out.add((px, py))
    return out


def hard_margin_2d(x, y):
    """Max-margin separator of a tiny 2-D dataset by enumerating candidate
    support-vector subsets and solving the equality-constrained KKT system."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    best = None
    for r in (2, 3):
        for subset in itertools.combinations(range(n), r):
            ys = y[list(subset)]
            if ys.min() == ys.max():
                continue
            xs = x[list(subset)]
            gram = (ys[:, None] * ys[None, :]) * (xs @ xs.T)
            kkt = np.zeros((r + 1, r + 1))
            kkt[:r, :r] = gram
            kkt[:r, r] = ys
            kkt[r, :r] = ys
            rhs = np.zeros(r + 1)
            rhs[:r] = 1.0
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                continue
            lam, b = sol[:r], sol[r]
            if (lam < -1e-9).any():
                continue
            w = (lam * ys) @ xs
            if (y * (x @ w + b)).min() < 1.0 - 1e-9:
                continue
            norm = float(w @ w)
            if best is None or norm < best[0] - 1e-12:
                best = (norm, w, b)
    if best is None:
        raise AssertionError("dataset is not linearly separable")
    return best[1], float(best[2])
