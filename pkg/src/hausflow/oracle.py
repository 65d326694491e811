"""Brute-force reference values.

Everything here is written from the definitions with plain Python loops and
``math``; nothing is imported from the numerical modules of the package, so
the values are an independent check on them.
"""
from __future__ import annotations

import heapq
import math
from pathlib import Path

SQRT2 = math.sqrt(2.0)


def _hausdorff(A, B, d):
    fwd = max(min(d(a, b) for b in B) for a in A)
    bwd = max(min(d(a, b) for a in A) for b in B)
    return max(fwd, bwd)


def _abs(a, b):
    return abs(a - b)


def _arctan(a, b):
    return abs(math.atan(a) - math.atan(b))


def _cbrt(x):
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _cuberoot(a, b):
    return abs(_cbrt(a) - _cbrt(b))


def hausdorff_pairs() -> dict:
    cases = [
        ([0.0, 1.0], [0.0, 3.0]),
        ([0.0], [5.0]),
        ([0.0, 1.0, 2.0], [0.5]),
        ([-1.0, 0.0, SQRT2], [-0.5, 0.5, SQRT2 + 0.5]),
        ([0.0, 10.0], [0.0, 1.0, 2.0, 10.0]),
    ]
    return {"metric": "euclidean", "rows": [
        {"A": A, "B": B, "value": _hausdorff(A, B, _abs)} for A, B in cases
    ]}


def induced_pairs() -> dict:
    """``d_X(p, q) = d_H(p + X, q + X)`` and ``max_j d(p + x_j, q + x_j)`` on the line."""
    X = [-1.0, 0.0, SQRT2]
    pts = [(-2.0, 2.0), (0.0, 0.1), (0.0, 1.0), (1.0, 2.0), (-1.5, 0.5), (0.3, 0.3)]
    rows = []
    for name, d in (("arctan_pullback", _arctan), ("cuberoot_pullback", _cuberoot), ("euclidean", _abs)):
        for p, q in pts:
            rows.append({
                "kind": name, "p": p, "q": q,
                "base": d(p, q),
                "induced": _hausdorff([p + x for x in X], [q + x for x in X], d),
                "max_translate": max(d(p + x, q + x) for x in X),
            })
    return {"X": X, "rows": rows}


def _fine_max(f, lo, hi, n):
    best = -math.inf
    arg = lo
    for k in range(n + 1):
        s = lo + (hi - lo) * k / n
        v = f(s)
        if v > best:
            best, arg = v, s
    # golden-section polish around the best sample
    a, b = arg - (hi - lo) / n, arg + (hi - lo) / n
    g = (math.sqrt(5) - 1) / 2
    for _ in range(100):
        c, e = b - g * (b - a), a + g * (b - a)
        if f(c) > f(e):
            b = e
        else:
            a = c
    s = (a + b) / 2
    return max(best, f(s)), s


def bar_metric_values() -> dict:
    rows = []
    for name, d, p, q in (("arctan_pullback", _arctan, 0.0, 0.1), ("cuberoot_pullback", _cuberoot, 0.0, 0.001)):
        val, arg = _fine_max(lambda s: d(p + s, q + s), -3.0, 3.0, 60000)
        rows.append({"kind": name, "p": p, "q": q, "value": val, "argmax": arg, "sample": [-3.0, 3.0]})
    return {"rows": rows}


def arctan_finsler() -> dict:
    """Per-``t`` sup over ``s`` of ``(atan(t + s) - atan(s)) / t`` on a fine 1-D grid."""
    scale = 4.0
    rows = []
    for k in range(1, 15):
        t = scale * 2.0 ** -k
        val, arg = _fine_max(lambda s: (math.atan(t + s) - math.atan(s)) / t, -3.0, 3.0, 6000)
        rows.append({"t": t, "quotient": val, "argmax": arg, "closed_form": 2 * math.atan(t / 2) / t})
    tail = rows[-5:]
    return {"scale": scale, "rows": rows, "tail_max": max(r["quotient"] for r in tail)}


def cuberoot_trend() -> dict:
    scale = 4.0
    rows = []
    for k in range(1, 15):
        t = scale * 2.0 ** -k
        rows.append({"t": t, "closed_form": 2 * (t / 2) ** (1 / 3) / t})
    return {"scale": scale, "rows": rows}


def _words(gens, maxlen):
    """Reachable sums ``a*g0 + b*g1 + ...`` with at most ``maxlen`` letters (commutative group)."""
    seen = {0: 0.0}
    frontier = [0.0]
    for _ in range(maxlen):
        nxt = []
        for p in frontier:
            for g in gens:
                key = round((p + g) * 1e9)
                if key not in seen:
                    seen[key] = p + g
                    nxt.append(p + g)
        frontier = nxt
    return sorted(seen.values())


def _cover_unit(points):
    inside = sorted(p for p in points if -1e-12 <= p <= 1 + 1e-12)
    r = max(inside[0] - 0.0, 1.0 - inside[-1])
    for a, b in zip(inside, inside[1:]):
        r = max(r, (b - a) / 2)
    return inside, r


def words_unit_interval() -> dict:
    X = [-1.0, 0.0, SQRT2]
    Xinv = [1.0, 0.0, -SQRT2]
    rows = []
    for L in (4, 6, 8, 9, 10, 12):
        pts, r = _cover_unit(_words(X, L))
        ipts, ir = _cover_unit(_words(Xinv, L))
        rows.append({"maxlen": L, "points": pts, "radius": r, "inverse_points": ipts, "inverse_radius": ir})
    return {"X": X, "window": [0.0, 1.0], "rows": rows}


def chordal_antipodal() -> dict:
    """Shortest stencil path from node 0 to node n/2 on the chordal circle."""
    rows = []
    for n, radius in ((360, 1), (360, 2), (90, 2)):
        w = {k: 2 * math.sin(math.pi * k / n) for k in range(1, radius + 1)}
        dist = [math.inf] * n
        dist[0] = 0.0
        heap = [(0.0, 0)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for k, c in w.items():
                for v in ((u + k) % n, (u - k) % n):
                    if d + c < dist[v]:
                        dist[v] = d + c
                        heapq.heappush(heap, (d + c, v))
        rows.append({"resolution": n, "stencil_radius": radius, "antipodal": dist[n // 2]})
    return {"continuum": math.pi, "rows": rows}


def raw_arctan_defect() -> dict:
    d12 = _arctan(1.0, 2.0)
    d23 = _arctan(2.0, 3.0)
    return {"x": 1.0, "y": 2.0, "sigma": 1.0, "d_xy": d12, "d_translated": d23, "defect": abs(d23 - d12)}


def heisenberg_checks() -> dict:
    """Products and brackets in polarized coordinates, written out by hand."""
    def mul(g, h):
        return (g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1])

    def exp(v):
        return (v[0], v[1], v[2] + v[0] * v[1] / 2)

    X, Y = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)
    return {
        "products": [
            {"g": [1.0, 2.0, 3.0], "h": [4.0, 5.0, 6.0], "gh": list(mul((1.0, 2.0, 3.0), (4.0, 5.0, 6.0)))},
            {"g": [0.5, -1.0, 0.0], "h": [2.0, 0.25, 1.0], "gh": list(mul((0.5, -1.0, 0.0), (2.0, 0.25, 1.0)))},
        ],
        "exp": [{"v": [1.0, 2.0, 0.5], "exp": list(exp((1.0, 2.0, 0.5)))}],
        "bracket_XY": [0.0, 0.0, X[0] * Y[1] - X[1] * Y[0]],
    }


CASES = {
    "hausdorff-pairs": hausdorff_pairs,
    "induced-pairs": induced_pairs,
    "bar-metric": bar_metric_values,
    "arctan-finsler": arctan_finsler,
    "cuberoot-trend": cuberoot_trend,
    "words-unit-interval": words_unit_interval,
    "chordal-antipodal": chordal_antipodal,
    "raw-arctan-defect": raw_arctan_defect,
    "heisenberg": heisenberg_checks,
}


def compute(case_id: str) -> dict:
    if case_id not in CASES:
        raise KeyError(f"unknown oracle case {case_id!r}; choose from {sorted(CASES)}")
    return {"case": case_id, "values": CASES[case_id]()}


def write_case(case_id: str, out_dir) -> Path:
    from .io import write_json

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{case_id}.json"
    write_json(path, compute(case_id))
    return path
