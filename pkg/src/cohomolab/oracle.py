"""Brute-force reference computations used for cross-validation.

Both oracles build their complexes from raw data (multiplication tables,
action matrices, order matrices) and share only the fpabelian layer with the
main pipeline.  They are deliberately naive.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .fpabelian import (
    FpAbGroup,
    GroupMap,
    IntMatrix,
    Subquotient,
    homology_at,
    zero_map,
)

__all__ = [
    "BarComplexLevel",
    "NerveComplex",
    "bar_complex",
    "bar_group_cohomology",
    "nerve_complex",
    "cech_nerve_cohomology",
]


def _orders_of(V) -> tuple[int, ...]:
    return tuple(V.orders) if hasattr(V, "orders") else tuple(V)


def _cohomology(maps: Sequence[GroupMap], N: int) -> list[Subquotient]:
    out = []
    for n in range(N + 1):
        d_in = maps[n - 1] if n else zero_map(FpAbGroup.free(0), maps[0].source)
        out.append(homology_at(maps[n], d_in))
    return out


# -- inhomogeneous bar complex -----------------------------------------------

@dataclass
class BarComplexLevel:
    degree: int
    basis: list[tuple[int, ...]]
    differential: GroupMap


def _table_of(G) -> list[list[int]]:
    if hasattr(G, "table"):
        return [list(r) for r in G.table]
    return [list(r) for r in G]


def bar_complex(G, V, N: int) -> list[BarComplexLevel]:
    """Levels ``0..N`` of ``C^n = Map(G^n, V)`` with the inhomogeneous differential.

    ``G`` is a multiplication table (or anything with ``.table``); ``V`` a
    module with ``orders`` and per-element matrices ``rho`` (trivial if absent).
    """
    table = _table_of(G)
    n_g = len(table)
    e = next(a for a in range(n_g) if all(table[a][b] == b for b in range(n_g)))
    orders = _orders_of(V)
    m = len(orders)
    rho = getattr(V, "rho", None)
    if rho is None:
        rho = [[[int(i == j) for j in range(m)] for i in range(m)] for _ in range(n_g)]

    def group(n):
        return FpAbGroup.from_orders(list(orders) * (n_g ** n))

    def index(n):
        return {s: k for k, s in enumerate(itertools.product(range(n_g), repeat=n))}

    levels = []
    for n in range(N + 1):
        src_idx, tgt_idx = index(n), index(n + 1)
        cols: list[dict] = [dict() for _ in range(len(src_idx) * m)]
        for tau, r in tgt_idx.items():
            terms = [(1, tau[0], tau[1:])]
            for i in range(1, n + 1):
                merged = tau[:i - 1] + (table[tau[i - 1]][tau[i]],) + tau[i + 1:]
                terms.append(((-1) ** i, e, merged))
            terms.append(((-1) ** (n + 1), e, tau[:-1]))
            for sign, g, sigma in terms:
                c0 = src_idx[sigma] * m
                for j in range(m):
                    col = cols[c0 + j]
                    for i in range(m):
                        v = sign * rho[g][i][j]
                        if v:
                            key = r * m + i
                            w = col.get(key, 0) + v
                            if w:
                                col[key] = w
                            else:
                                del col[key]
        d = GroupMap(group(n), group(n + 1), IntMatrix(len(tgt_idx) * m, len(cols), cols))
        levels.append(BarComplexLevel(n, list(src_idx), d))
    return levels


def bar_group_cohomology(G, V, N: int) -> list[FpAbGroup]:
    """``H^0..H^N(G; V)`` from the inhomogeneous bar complex."""
    levels = bar_complex(G, V, N)
    return _cohomology([lv.differential for lv in levels], N)


# -- Cech nerve --------------------------------------------------------------

def _components(leq, points: Sequence[int]) -> list[frozenset]:
    """Components of the comparability graph restricted to ``points``."""
    left = set(points)
    comps = []
    while left:
        seed = left.pop()
        comp, stack = {seed}, [seed]
        while stack:
            x = stack.pop()
            for y in list(left):
                if leq[x][y] or leq[y][x]:
                    left.discard(y)
                    comp.add(y)
                    stack.append(y)
        comps.append(frozenset(comp))
    comps.sort(key=min)
    return comps


@dataclass
class NerveComplex:
    simplices: list[list[tuple[int, ...]]]
    components: dict
    differentials: list[GroupMap]


def nerve_complex(X, cover, V, N: int, p: int = 0) -> NerveComplex:
    """Alternating Cech complex of ``cover`` for locally constant coefficients.

    A simplex ``s`` (increasing member indices, nonempty intersection ``U_s``)
    carries ``V`` for each component of ``X^{p+1} x U_s``, i.e. locally
    constant functions there.  Components of a product are products of
    components, so the factor ``X^{p+1}`` contributes ``pi0(X)^{p+1}``.
    """
    leq = X.leq
    pts = range(len(leq))
    members = [frozenset(u) for u in (cover.members if hasattr(cover, "members") else cover)]
    orders = _orders_of(V)
    m = len(orders)
    first = len(_components(leq, pts)) ** (p + 1)

    simplices: list[list[tuple[int, ...]]] = []
    comps: dict = {}
    for q in range(N + 2):
        level = []
        for s in itertools.combinations(range(len(members)), q + 1):
            inter = frozenset.intersection(*(members[i] for i in s))
            if inter:
                level.append(s)
                comps[s] = _components(leq, sorted(inter))
        simplices.append(level)

    def offsets(q):
        off, k = {}, 0
        for s in simplices[q]:
            off[s] = k
            k += first * len(comps[s]) * m
        return off, k

    def group(q):
        _, size = offsets(q)
        return FpAbGroup.from_orders(list(orders) * (size // m if m else 0))

    maps = []
    for q in range(N + 1):
        src_off, src_n = offsets(q)
        tgt_off, tgt_n = offsets(q + 1)
        cols: list[dict] = [dict() for _ in range(src_n)]
        for t in simplices[q + 1]:
            for i in range(q + 2):
                s = t[:i] + t[i + 1:]
                sign = (-1) ** i
                # restriction: each component of U_t sits in one component of U_s
                for kt, ct in enumerate(comps[t]):
                    ks = next(k for k, cs in enumerate(comps[s]) if ct <= cs)
                    for a in range(first):
                        for j in range(m):
                            src = src_off[s] + ((a * len(comps[s]) + ks) * m) + j
                            tgt = tgt_off[t] + ((a * len(comps[t]) + kt) * m) + j
                            col = cols[src]
                            w = col.get(tgt, 0) + sign
                            if w:
                                col[tgt] = w
                            else:
                                del col[tgt]
        maps.append(GroupMap(group(q), group(q + 1), IntMatrix(tgt_n, src_n, cols)))
    return NerveComplex(simplices, comps, maps)


def cech_nerve_cohomology(X, cover, V, N: int, p: int = 0) -> list[FpAbGroup]:
    """``H^0..H^N`` of the nerve of ``cover`` with locally constant coefficients."""
    nc = nerve_complex(X, cover, V, N, p)
    return _cohomology(nc.differentials, N)
