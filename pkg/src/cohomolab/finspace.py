"""Finite topological spaces as specialization preorders.

A point ``x`` lies below ``y`` (``x <= y``) when ``x`` is in the closure of
``{y}``; open sets are up-sets and ``U_x = {y : x <= y}`` is the smallest open
containing ``x``.  Maps into a discrete group are continuous iff they are
constant on connected components of the comparability graph.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "SizeOverflow",
    "NotAGroup",
    "NotOrderAutomorphism",
    "NotHomomorphism",
    "FiniteSpace",
    "Covering",
    "SubspaceOfPower",
    "ActionSpec",
    "GroupAction",
    "size_limit",
    "power_space",
    "diagonal_neighborhood",
    "connected_components",
    "minimal_open_cover",
    "trivial_cover",
    "contractibility_certificate",
    "check_certificate",
    "validate_action",
]

DEFAULT_SIZE_LIMIT = 200_000


class SizeOverflow(ValueError):
    pass


class NotAGroup(ValueError):
    pass


class NotOrderAutomorphism(ValueError):
    pass


class NotHomomorphism(ValueError):
    pass


def size_limit() -> int:
    """Ceiling on ambient generator counts, overridable by ``COHOMOLAB_SIZE_LIMIT``."""
    raw = os.environ.get("COHOMOLAB_SIZE_LIMIT")
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_SIZE_LIMIT


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


class FiniteSpace:
    """A finite preorder ``(points, <=)``; ``leq[x][y]`` means ``x <= y``."""

    def __init__(self, labels: Sequence[str], leq: Sequence[Sequence[bool]]):
        n = len(labels)
        if len(set(labels)) != n:
            raise ValueError("duplicate point labels")
        if len(leq) != n or any(len(row) != n for row in leq):
            raise ValueError("order matrix has wrong shape")
        self.labels = tuple(labels)
        self.leq = tuple(tuple(bool(v) for v in row) for row in leq)
        for x in range(n):
            if not self.leq[x][x]:
                raise ValueError(f"order not reflexive at {labels[x]}")
        for x, y, z in itertools.product(range(n), repeat=3):
            if self.leq[x][y] and self.leq[y][z] and not self.leq[x][z]:
                raise ValueError(f"order not transitive at {labels[x]}, {labels[y]}, {labels[z]}")
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self._comp = None

    @classmethod
    def from_relations(cls, labels: Sequence[str], relations: Iterable[tuple[str, str]]) -> "FiniteSpace":
        """Preorder generated (reflexive-transitive closure) by ``a <= b`` pairs."""
        n = len(labels)
        idx = {lab: i for i, lab in enumerate(labels)}
        leq = [[i == j for j in range(n)] for i in range(n)]
        for a, b in relations:
            leq[idx[a]][idx[b]] = True
        for k in range(n):
            for i in range(n):
                if leq[i][k]:
                    for j in range(n):
                        if leq[k][j]:
                            leq[i][j] = True
        return cls(labels, leq)

    @classmethod
    def discrete(cls, labels: Sequence[str]) -> "FiniteSpace":
        return cls.from_relations(labels, [])

    @property
    def point_count(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self._index[label]

    def up(self, x: int) -> frozenset:
        """Minimal open neighbourhood ``U_x``."""
        return frozenset(y for y in range(self.point_count) if self.leq[x][y])

    def is_open(self, subset: Iterable[int]) -> bool:
        s = set(subset)
        return all(self.leq[x][y] <= (y in s) for x in s for y in range(self.point_count))

    def comparable(self, x: int, y: int) -> bool:
        return self.leq[x][y] or self.leq[y][x]

    def components_of(self, subset: Iterable[int]) -> list[frozenset]:
        """Connected components of a subspace, ordered by smallest point."""
        pts = sorted(set(subset))
        uf = _UnionFind(len(pts))
        for i, j in itertools.combinations(range(len(pts)), 2):
            if self.comparable(pts[i], pts[j]):
                uf.union(i, j)
        groups: dict[int, list[int]] = {}
        for i, x in enumerate(pts):
            groups.setdefault(uf.find(i), []).append(x)
        return sorted((frozenset(g) for g in groups.values()), key=min)

    def component_index(self) -> tuple[int, ...]:
        """Component id of each point (components numbered by smallest point)."""
        if self._comp is None:
            comp = [0] * self.point_count
            for k, c in enumerate(self.components_of(range(self.point_count))):
                for x in c:
                    comp[x] = k
            self._comp = tuple(comp)
        return self._comp

    def is_connected(self) -> bool:
        return self.point_count > 0 and max(self.component_index()) == 0

    def tuple_leq(self, s: Sequence[int], t: Sequence[int]) -> bool:
        return all(self.leq[a][b] for a, b in zip(s, t))

    def name(self, t: Sequence[int]) -> str:
        return "(" + ",".join(self.labels[x] for x in t) + ")"

    def __repr__(self) -> str:
        rel = [f"{self.labels[x]}<{self.labels[y]}" for x in range(self.point_count)
               for y in range(self.point_count) if x != y and self.leq[x][y]]
        return f"FiniteSpace({list(self.labels)}, {rel})"


def power_space(X: FiniteSpace, k: int) -> FiniteSpace:
    """``X^k`` with the product preorder."""
    if k < 1:
        raise ValueError("power must be at least 1")
    if X.point_count ** k > size_limit():
        raise SizeOverflow(f"|X|^{k} = {X.point_count ** k} exceeds the size limit {size_limit()}")
    tuples = list(itertools.product(range(X.point_count), repeat=k))
    labels = ["".join(X.labels[x] for x in t) if all(len(X.labels[x]) == 1 for x in t)
              else X.name(t) for t in tuples]
    if len(set(labels)) != len(labels):
        labels = [X.name(t) for t in tuples]
    leq = [[X.tuple_leq(s, t) for t in tuples] for s in tuples]
    return FiniteSpace(labels, leq)


@dataclass(frozen=True)
class Covering:
    """Open covering of a finite space by up-sets."""

    space: FiniteSpace
    members: tuple[frozenset, ...]
    name: str = ""

    def __post_init__(self):
        if not self.members:
            raise ValueError("covering has no members")
        for m in self.members:
            if not self.space.is_open(m):
                raise ValueError("covering member is not open: "
                                 + "{" + " ".join(self.space.labels[x] for x in sorted(m)) + "}")
        union = set().union(*self.members)
        if union != set(range(self.space.point_count)):
            missing = sorted(set(range(self.space.point_count)) - union)
            raise ValueError("covering misses " + " ".join(self.space.labels[x] for x in missing))

    def is_invariant(self, action: "GroupAction") -> bool:
        ms = set(self.members)
        return all(frozenset(action.perms[g][x] for x in m) in ms
                   for g in range(action.order) for m in self.members)

    def describe(self) -> str:
        lab = self.space.labels
        return " ".join("{" + ",".join(lab[x] for x in sorted(m)) + "}" for m in self.members)


def minimal_open_cover(X: FiniteSpace) -> Covering:
    seen: list[frozenset] = []
    for x in range(X.point_count):
        u = X.up(x)
        if u not in seen:
            seen.append(u)
    return Covering(X, tuple(seen), "minimal")


def trivial_cover(X: FiniteSpace) -> Covering:
    return Covering(X, (frozenset(range(X.point_count)),), "trivial")


@dataclass
class SubspaceOfPower:
    """A set of ``arity``-tuples of points, with the induced product preorder."""

    base: FiniteSpace
    arity: int
    tuples: tuple
    pieces: tuple | None = field(default=None, repr=False)
    _members: frozenset | None = field(default=None, repr=False)
    _comp: dict | None = field(default=None, repr=False)

    def __contains__(self, t) -> bool:
        if self._members is None:
            self._members = frozenset(self.tuples)
        return tuple(t) in self._members

    def __len__(self) -> int:
        return len(self.tuples)

    def component_map(self) -> dict:
        """Tuple -> component id, ids numbered by lexicographically first tuple."""
        if self._comp is None:
            parts = connected_components(self)
            self._comp = {t: k for k, part in enumerate(parts) for t in part}
        return self._comp


def diagonal_neighborhood(cover: Covering, n: int) -> SubspaceOfPower:
    """``U[n]``: the union of ``U^{n+1}`` over the members of ``cover``."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    X = cover.space
    k = n + 1
    total = sum(len(m) ** k for m in cover.members)
    if total > size_limit():
        raise SizeOverflow(f"diagonal neighbourhood needs {total} tuples, limit {size_limit()}")
    pieces = []
    tuples = set()
    for m in cover.members:
        for comp in X.components_of(m):
            piece = frozenset(itertools.product(sorted(comp), repeat=k))
            pieces.append(piece)
            tuples |= piece
    return SubspaceOfPower(X, k, tuple(sorted(tuples)), tuple(pieces))


def connected_components(S: SubspaceOfPower) -> list[list[tuple]]:
    """Components of the comparability graph on ``S`` (subspace preorder).

    When ``S`` was built from a covering, each piece (a power of a connected
    part of one member) is connected, and two tuples of ``S`` that are
    comparable always share a piece, so gluing pieces along common tuples
    yields the components.  Otherwise fall back to pairwise comparison.
    """
    tuples = list(S.tuples)
    pos = {t: i for i, t in enumerate(tuples)}
    uf = _UnionFind(len(tuples))
    if S.pieces is not None:
        for piece in S.pieces:
            it = iter(piece)
            first = pos[next(it)]
            for t in it:
                uf.union(first, pos[t])
    else:
        X = S.base
        for i, j in itertools.combinations(range(len(tuples)), 2):
            s, t = tuples[i], tuples[j]
            if X.tuple_leq(s, t) or X.tuple_leq(t, s):
                uf.union(i, j)
    groups: dict[int, list] = {}
    for i, t in enumerate(tuples):
        groups.setdefault(uf.find(i), []).append(t)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


# -- contractibility ---------------------------------------------------------

def _beat(X: FiniteSpace, alive: list[int], x: int) -> tuple[str, int] | None:
    leq = X.leq
    others = [y for y in alive if y != x]
    for y in others:
        if leq[x][y] and leq[y][x]:
            return ("twin", y)
    below = [y for y in others if leq[y][x]]
    if below:
        tops = [y for y in below if all(leq[z][y] for z in below)]
        if tops:
            return ("down", tops[0])
    above = [y for y in others if leq[x][y]]
    if above:
        bottoms = [y for y in above if all(leq[y][z] for z in above)]
        if bottoms:
            return ("up", bottoms[0])
    return None


def contractibility_certificate(X: FiniteSpace) -> list[tuple[str, str, str]] | None:
    """Beat-point removals reducing ``X`` to one point, or ``None``.

    Each step is ``(point, kind, witness)`` where ``kind`` is ``down`` (the
    points strictly below have maximum ``witness``), ``up`` (the points
    strictly above have minimum ``witness``) or ``twin`` (``witness`` is an
    equivalent point).  Greedy removal suffices because the core of a finite
    space is unique up to isomorphism.
    """
    if X.point_count == 0:
        return None
    alive = list(range(X.point_count))
    steps = []
    while len(alive) > 1:
        for x in alive:
            b = _beat(X, alive, x)
            if b is not None:
                steps.append((X.labels[x], b[0], X.labels[b[1]]))
                alive.remove(x)
                break
        else:
            return None
    return steps


def check_certificate(X: FiniteSpace, steps: Sequence[tuple[str, str, str]]) -> bool:
    """Replay a certificate independently of how it was produced."""
    alive = list(range(X.point_count))
    leq = X.leq
    for label, kind, wlabel in steps:
        try:
            x, w = X.index(label), X.index(wlabel)
        except KeyError:
            return False
        if x not in alive or w not in alive or x == w:
            return False
        others = [y for y in alive if y != x]
        if kind == "twin":
            ok = leq[x][w] and leq[w][x]
        elif kind == "down":
            below = [y for y in others if leq[y][x]]
            ok = w in below and all(leq[z][w] for z in below)
        elif kind == "up":
            above = [y for y in others if leq[x][y]]
            ok = w in above and all(leq[w][z] for z in above)
        else:
            ok = False
        if not ok:
            return False
        alive.remove(x)
    return len(alive) == 1


# -- group actions -----------------------------------------------------------

@dataclass
class ActionSpec:
    """Finite group by multiplication table plus a permutation of points per element."""

    element_names: Sequence[str]
    table: Sequence[Sequence[int]]
    point_permutations: Sequence[Sequence[int]]

    @property
    def group_order(self) -> int:
        return len(self.element_names)


class GroupAction:
    """A validated action of a finite group on a finite space."""

    def __init__(self, spec: ActionSpec, X: FiniteSpace):
        self.space = X
        self.names = tuple(spec.element_names)
        self.table = tuple(tuple(r) for r in spec.table)
        self.perms = tuple(tuple(p) for p in spec.point_permutations)
        n = self.order
        self.identity = next(e for e in range(n)
                             if all(self.table[e][g] == g == self.table[g][e] for g in range(n)))
        self.inverse = tuple(next(h for h in range(n) if self.table[g][h] == self.identity)
                             for g in range(n))

    @property
    def order(self) -> int:
        return len(self.names)

    def mul(self, g: int, h: int) -> int:
        return self.table[g][h]

    def act(self, g: int, t: Sequence[int]) -> tuple:
        p = self.perms[g]
        return tuple(p[x] for x in t)

    def is_trivial_group(self) -> bool:
        return self.order == 1

    def is_stable(self, tuples: Iterable[tuple]) -> bool:
        s = set(tuples)
        return all(self.act(g, t) in s for t in s for g in range(self.order))

    def stable_or_raise(self, S: SubspaceOfPower) -> SubspaceOfPower:
        if not self.is_stable(S.tuples):
            raise ValueError("subspace is not stable under the group")
        return S

    def is_free(self) -> bool:
        """Free on points: only the identity fixes any point."""
        return all(self.perms[g][x] != x for g in range(self.order)
                   if g != self.identity for x in range(self.space.point_count))

    def equivariant_section(self) -> tuple[int, ...] | None:
        """``gamma: X -> G`` with ``gamma(g.x) = g * gamma(x)``, if the action is free."""
        if not self.is_free():
            return None
        gamma: list[int | None] = [None] * self.space.point_count
        for x in range(self.space.point_count):
            if gamma[x] is None:
                for g in range(self.order):
                    gamma[self.perms[g][x]] = g
        return tuple(gamma)

    def generators(self) -> list[int]:
        """A small generating set (greedy)."""
        gens: list[int] = []
        span = {self.identity}
        for g in range(self.order):
            if g in span:
                continue
            gens.append(g)
            frontier = list(span)
            span = set(span)
            while frontier:
                a = frontier.pop()
                for s in gens:
                    b = self.table[a][s]
                    if b not in span:
                        span.add(b)
                        frontier.append(b)
        return gens


def trivial_action(X: FiniteSpace) -> GroupAction:
    return GroupAction(ActionSpec(["e"], [[0]], [list(range(X.point_count))]), X)


def validate_action(spec: ActionSpec, X: FiniteSpace) -> GroupAction:
    n = spec.group_order
    table = spec.table
    if n == 0 or len(table) != n or any(len(r) != n for r in table):
        raise NotAGroup("multiplication table must be square of size |G|")
    if any(not (0 <= v < n) for r in table for v in r):
        raise NotAGroup("table entry outside the group")
    ids = [e for e in range(n) if all(table[e][g] == g == table[g][e] for g in range(n))]
    if not ids:
        raise NotAGroup("no identity element")
    e = ids[0]
    for g in range(n):
        if not any(table[g][h] == e and table[h][g] == e for h in range(n)):
            raise NotAGroup(f"element {spec.element_names[g]} has no inverse")
    for a, b, c in itertools.product(range(n), repeat=3):
        if table[table[a][b]][c] != table[a][table[b][c]]:
            names = spec.element_names
            raise NotAGroup(f"associativity fails at ({names[a]}, {names[b]}, {names[c]})")
    m = X.point_count
    if len(spec.point_permutations) != n:
        raise NotHomomorphism("need one permutation per group element")
    for g, p in enumerate(spec.point_permutations):
        if sorted(p) != list(range(m)):
            raise NotOrderAutomorphism(f"{spec.element_names[g]} is not a permutation of the points")
        for x, y in itertools.product(range(m), repeat=2):
            if X.leq[x][y] != X.leq[p[x]][p[y]]:
                raise NotOrderAutomorphism(
                    f"{spec.element_names[g]} does not preserve {X.labels[x]} <= {X.labels[y]}")
    perms = spec.point_permutations
    for a, b in itertools.product(range(n), repeat=2):
        ab = table[a][b]
        if any(perms[ab][x] != perms[a][perms[b][x]] for x in range(m)):
            raise NotHomomorphism(
                f"perm({spec.element_names[ab]}) != perm({spec.element_names[a]}) o perm({spec.element_names[b]})")
    return GroupAction(spec, X)
