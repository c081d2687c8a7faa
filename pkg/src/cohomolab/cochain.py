"""Cochain groups over a finite space, realized as finitely presented groups.

A cochain group is a set of functions ``f: domain -> V`` where the domain is a
set of point tuples partitioned into "components" on which ``f`` must be
constant (the locally constant constraint), optionally also required to be
G-equivariant: ``f(g.t) = g.f(t)``.

Such functions are parametrized by *cells*.  Without equivariance a cell is a
component and carries a value in ``V``.  With equivariance a cell is a G-orbit
of components; fixing a representative component ``C`` with stabilizer ``H``,
the value on ``C`` is any ``w`` in ``V^H`` and the value on ``g.C`` is
``g.w``.  The realized group is the direct sum of these ``V^H`` (each
presented in invariant-factor form), so every cochain group has a diagonal
presentation.

Maps between cochain groups are built by :func:`pullback_map`, which
evaluates linear combinations of pulled-back cochains at target cell
representatives and (optionally) verifies the result on every target tuple.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

from .fpabelian import (FpAbGroup, GroupMap, IntMatrix, Lattice, NotInSubgroup,
                        Subquotient, homology_at, zero_map)
from .finspace import (Covering, FiniteSpace, GroupAction, SizeOverflow, SubspaceOfPower,
                       diagonal_neighborhood, minimal_open_cover, size_limit,
                       trivial_action)

__all__ = [
    "RegionArityMismatch",
    "RegionNotGStable",
    "NotClosedUnderDifferential",
    "NotInCochainGroup",
    "GModule",
    "CochainGroup",
    "Cochain",
    "build_cochain_group",
    "simplicial_differential",
    "pullback_map",
    "act_on_cochain",
    "action_map",
    "fixed_subgroup",
    "fixed_kernel_lattice",
    "inclusion_map",
    "VARIANTS",
    "variant_region",
    "cochain_complex",
    "cochain_cohomology",
]


class RegionArityMismatch(ValueError):
    pass


class RegionNotGStable(ValueError):
    pass


class NotClosedUnderDifferential(ValueError):
    pass


class NotInCochainGroup(ValueError):
    """A function violates the constraints of the group it was converted into."""


# -- coefficient modules -----------------------------------------------------

class FixedModule:
    """``V^H`` for a subgroup ``H``, with chosen generators and a coordinate map."""

    def __init__(self, module: "GModule", stabilizer: frozenset):
        self.module = module
        self.stabilizer = stabilizer
        nontrivial = [h for h in stabilizer if not module.acts_trivially(h)]
        self.identity_like = not nontrivial
        if self.identity_like:
            self.orders = tuple(module.orders)
            self.basis = tuple(tuple(int(i == j) for i in range(module.rank))
                               for j in range(module.rank))
            self._sq = None
        else:
            m = module.rank
            # x with (rho(h) - 1) x = 0 in V for all h in the stabilizer
            rows = []
            for h in nontrivial:
                r = module.rho[h]
                rows.append([[r[i][j] - (i == j) for j in range(m)] for i in range(m)])
            big = [row for block in rows for row in block]
            target = FpAbGroup.from_orders(list(module.orders) * len(rows))
            f = GroupMap(FpAbGroup.from_orders(module.orders), target,
                         IntMatrix.from_rows(big, m))
            sq = Subquotient(f.kernel_lattice(), f.source.relations.iter_columns())
            self._sq = sq
            self.orders = tuple(list(sq.invariants()[0]) + [0] * sq.invariants()[1])
            self.basis = tuple(tuple(module.reduce(_dense(sq.representative(k), m)))
                               for k in range(len(self.orders)))

    @property
    def rank(self) -> int:
        return len(self.orders)

    def coords(self, v: Sequence[int]) -> list[int]:
        if self._sq is None:
            return list(self.module.reduce(v))
        try:
            c = self._sq.coordinates({i: x for i, x in enumerate(v) if x})
        except NotInSubgroup:
            raise NotInSubgroup(f"value {tuple(v)} is not fixed by the stabilizer") from None
        return [x % o if o else x for x, o in zip(c, self.orders)]


def _dense(vec: dict, n: int) -> list[int]:
    out = [0] * n
    for k, v in vec.items():
        out[k] = v
    return out


class GModule:
    """``V = Z/e_1 + ... + Z/e_m`` (``e = 0`` meaning ``Z``) with a G-action.

    ``rho[g]`` is an integer matrix (list of rows) acting on column vectors of
    V-coordinates.  Validation checks well-definedness modulo the orders, the
    homomorphism property and invertibility.
    """

    def __init__(self, orders: Sequence[int], action: GroupAction | None = None,
                 rho: Sequence[Sequence[Sequence[int]]] | None = None):
        self.orders = tuple(int(o) for o in orders)
        if any(o < 0 or o == 1 for o in self.orders):
            raise ValueError("cyclic factor orders must be 0 (for Z) or at least 2")
        self.rank = len(self.orders)
        self.group = FpAbGroup.from_orders(self.orders)
        self.action = action
        m = self.rank
        n = action.order if action is not None else 1
        ident = [[int(i == j) for j in range(m)] for i in range(m)]
        if rho is None:
            rho = [ident for _ in range(n)]
        if len(rho) != n:
            raise ValueError("need one action matrix per group element")
        self.rho = tuple(tuple(tuple(int(x) for x in row) for row in r) for r in rho)
        self._fixed: dict[frozenset, FixedModule] = {}
        self._validate()
        self._trivial = tuple(all(self._eq(self.rho[g][i], ident[i]) for i in range(m))
                              for g in range(n))

    def _eq(self, u, v) -> bool:
        return self.reduce(u) == self.reduce(v)

    def _validate(self) -> None:
        m = self.rank
        for g, r in enumerate(self.rho):
            if len(r) != m or any(len(row) != m for row in r):
                raise ValueError(f"action matrix {g} has wrong shape")
            # column j must be killed by e_j in the target
            for j in range(m):
                e = self.orders[j]
                if e and any(self.reduce_entry(i, e * r[i][j]) for i in range(m)):
                    raise ValueError(f"action matrix {g} is not well defined on Z/{e}")
        if self.action is None:
            return
        act = self.action
        for a, b in itertools.product(range(act.order), repeat=2):
            ab = act.mul(a, b)
            prod = self.matmul(self.rho[a], self.rho[b])
            if any(not self._eq(prod[i], self.rho[ab][i]) for i in range(m)):
                raise ValueError(f"action is not a homomorphism at ({act.names[a]}, {act.names[b]})")
        e = act.identity
        if any(not self._eq(self.rho[e][i], [int(i == j) for j in range(m)]) for i in range(m)):
            raise ValueError("identity does not act trivially")

    def reduce_entry(self, i: int, x: int) -> int:
        e = self.orders[i]
        return x % e if e else x

    def reduce(self, v: Sequence[int]) -> tuple[int, ...]:
        return tuple(x % e if e else x for x, e in zip(v, self.orders))

    @staticmethod
    def matmul(a, b):
        return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
                for i in range(len(a))]

    def apply(self, g: int, v: Sequence[int]) -> tuple[int, ...]:
        if self._trivial[g]:
            return self.reduce(v)
        r = self.rho[g]
        return self.reduce([sum(r[i][j] * v[j] for j in range(self.rank)) for i in range(self.rank)])

    def acts_trivially(self, g: int) -> bool:
        return self._trivial[g]

    def is_trivial(self) -> bool:
        return all(self._trivial)

    def fixed(self, stabilizer: frozenset) -> FixedModule:
        key = frozenset(h for h in stabilizer if not self._trivial[h])
        fm = self._fixed.get(key)
        if fm is None:
            fm = FixedModule(self, key)
            self._fixed[key] = fm
        return fm

    def describe(self) -> str:
        return str(self.group)


# -- cochain groups ----------------------------------------------------------

@dataclass(frozen=True)
class _Cell:
    rep: tuple
    stabilizer: frozenset
    fixed: FixedModule
    offset: int


class CochainGroup:
    """Constrained functions on a tuple domain (see module docstring).

    ``component_key(t)`` returns a hashable key; tuples with equal keys lie in
    the same component.  ``None`` makes every tuple its own component.
    Component keys must be transported by the group: if ``t`` and ``u`` share a
    key then so do ``g.t`` and ``g.u``.
    """

    def __init__(self, space: FiniteSpace, module: GModule, action: GroupAction | None,
                 tuples: Sequence[tuple], component_key: Callable | None = None,
                 equivariant: bool = False, degree=None, label: str = ""):
        self.space = space
        self.module = module
        self.action = action if action is not None else (module.action or trivial_action(space))
        self.tuples = tuple(tuples)
        self.equivariant = bool(equivariant) and self.action.order > 1
        self.degree = degree
        self.label = label
        self._component_key = component_key
        if len(self.tuples) * module.rank > size_limit():
            raise SizeOverflow(f"{label or 'cochain group'} needs {len(self.tuples) * module.rank} "
                               f"ambient generators, limit {size_limit()}")
        self._build(component_key)

    def _build(self, component_key):
        act = self.action
        key = component_key if component_key is not None else (lambda t: t)
        cell_of: dict[tuple, tuple[int, int]] = {}
        assigned: dict = {}
        cells: list[_Cell] = []
        offset = 0
        tupleset = set(self.tuples) if self.equivariant else None
        for t in self.tuples:
            k = key(t)
            hit = assigned.get(k)
            if hit is None:
                c = len(cells)
                if self.equivariant:
                    stab = []
                    for g in range(act.order):
                        gt = act.act(g, t)
                        if gt not in tupleset:
                            raise RegionNotGStable(f"{self.space.name(gt)} is outside the domain")
                        gk = key(gt)
                        if gk == k:
                            stab.append(g)
                        if gk not in assigned:
                            assigned[gk] = (c, g)
                        elif assigned[gk][0] != c:
                            raise RegionNotGStable("components are not permuted by the group")
                    stab = frozenset(stab)
                else:
                    stab = frozenset([act.identity])
                    assigned[k] = (c, act.identity)
                fm = self.module.fixed(stab)
                cells.append(_Cell(t, stab, fm, offset))
                offset += fm.rank
                hit = assigned[k]
            cell_of[t] = hit
        self.cells = cells
        self.cell_of = cell_of
        orders = []
        for c in cells:
            orders.extend(c.fixed.orders)
        self.orders = tuple(orders)
        self.realized = FpAbGroup.from_orders(orders)
        self._images: dict = {}

    # -- basic data
    @property
    def generator_count(self) -> int:
        return len(self.orders)

    @property
    def ambient_size(self) -> int:
        return len(self.tuples) * self.module.rank

    def __repr__(self) -> str:
        return (f"CochainGroup({self.label or self.degree}, cells={len(self.cells)}, "
                f"gens={self.generator_count}, {self.realized})")

    def reduce(self, coords) -> list[int]:
        return [x % o if o else x for x, o in zip(coords, self.orders)]

    def zero(self) -> list[int]:
        return [0] * self.generator_count

    def cell_images(self, c: int, g: int) -> list[tuple[int, ...]]:
        """``g.w`` for each generator ``w`` of the fixed module of cell ``c``."""
        key = (c, g)
        out = self._images.get(key)
        if out is None:
            out = [self.module.apply(g, w) for w in self.cells[c].fixed.basis]
            self._images[key] = out
        return out

    # -- evaluation
    def value(self, coords: Sequence[int], t: tuple) -> tuple[int, ...]:
        c, g = self.cell_of[t]
        cell = self.cells[c]
        m = self.module.rank
        acc = [0] * m
        for k, w in enumerate(self.cell_images(c, g)):
            x = coords[cell.offset + k]
            if x:
                for i in range(m):
                    acc[i] += x * w[i]
        return self.module.reduce(acc)

    def to_function(self, coords: Sequence[int]) -> dict:
        return {t: self.value(coords, t) for t in self.tuples}

    def from_function(self, func, check: bool = True) -> list[int]:
        """Coordinates of a function given as a mapping or callable on tuples."""
        get = func.get if isinstance(func, dict) else func
        zero = (0,) * self.module.rank
        coords = []
        for cell in self.cells:
            v = get(cell.rep)
            if v is None:
                v = zero
            try:
                coords.extend(cell.fixed.coords(v))
            except NotInSubgroup as exc:
                raise NotInCochainGroup(f"{self.space.name(cell.rep)}: {exc}") from None
        if check:
            for t in self.tuples:
                v = get(t)
                if v is None:
                    v = zero
                if self.module.reduce(v) != self.value(coords, t):
                    raise NotInCochainGroup(
                        f"function violates the constraints of {self.label or 'the group'} "
                        f"at {self.space.name(t)}")
        return coords

    def contains_function(self, func) -> bool:
        try:
            self.from_function(func)
        except NotInCochainGroup:
            return False
        return True

    def random_element(self, rng, bound: int = 3) -> list[int]:
        return self.reduce([rng.randint(-bound, bound) for _ in range(self.generator_count)])

    def basis_element(self, j: int) -> list[int]:
        v = self.zero()
        v[j] = 1
        return v

    def ambient_group(self) -> FpAbGroup:
        return FpAbGroup.from_orders(list(self.module.orders) * len(self.tuples))

    def ambient_vector(self, coords: Sequence[int]) -> dict:
        """Sparse vector over the ambient basis (tuple-major, V innermost)."""
        m = self.module.rank
        out = {}
        for i, t in enumerate(self.tuples):
            v = self.value(coords, t)
            for k, x in enumerate(v):
                if x:
                    out[i * m + k] = x
        return out

    def inclusion(self) -> GroupMap:
        """Realized group -> ambient ``V^domain``."""
        cols = [self.ambient_vector(self.basis_element(j)) for j in range(self.generator_count)]
        return GroupMap(self.realized, self.ambient_group(),
                        IntMatrix(self.ambient_size, self.generator_count, cols))

    def realized_lattice(self) -> Lattice:
        """Image of the realized group in the ambient, plus ambient relations."""
        inc = self.inclusion()
        lat = Lattice(self.ambient_size, inc.matrix.iter_columns())
        for c in inc.target.relations.iter_columns():
            lat.add(c)
        return lat


@dataclass
class Cochain:
    group: CochainGroup
    coords: list

    def __post_init__(self):
        if len(self.coords) != self.group.generator_count:
            raise ValueError("coordinate vector has the wrong length")
        self.coords = self.group.reduce(self.coords)

    def value(self, t: tuple):
        return self.group.value(self.coords, t)

    def function(self) -> dict:
        return self.group.to_function(self.coords)


# -- constructing groups -----------------------------------------------------

def power_tuples(X: FiniteSpace, k: int) -> list[tuple]:
    return list(itertools.product(range(X.point_count), repeat=k))


def product_component_key(X: FiniteSpace):
    comp = X.component_index()
    return lambda t: tuple(comp[x] for x in t)


def build_cochain_group(X: FiniteSpace, V: GModule, n: int, region=None,
                        equivariant: bool = False, action: GroupAction | None = None,
                        label: str = "") -> CochainGroup:
    """Cochains of degree ``n`` on ``X^{n+1}``.

    ``region`` is ``None`` (no continuity), ``"full"`` (continuous on all of
    ``X^{n+1}``) or a :class:`SubspaceOfPower` of arity ``n+1`` on which the
    cochain must be locally constant.
    """
    if n < 0:
        raise ValueError("degree must be nonnegative")
    act = action if action is not None else (V.action or trivial_action(X))
    total = X.point_count ** (n + 1) * V.rank
    if total > size_limit():
        raise SizeOverflow(f"|X|^{n + 1} * rank V = {total} exceeds the size limit {size_limit()}")
    tuples = power_tuples(X, n + 1)
    if region is None:
        key = None
    elif region == "full":
        key = product_component_key(X)
    elif isinstance(region, SubspaceOfPower):
        if region.arity != n + 1:
            raise RegionArityMismatch(f"region arity {region.arity} != {n + 1}")
        if equivariant and not act.is_stable(region.tuples):
            raise RegionNotGStable("region is not stable under the group")
        comp = region.component_map()
        key = lambda t: ("r", comp[t]) if t in comp else ("s", t)
    else:
        raise ValueError(f"unknown region {region!r}")
    return CochainGroup(X, V, act, tuples, key, equivariant, n, label)


# -- maps ----------------------------------------------------------------------

Term = tuple  # (coefficient: int or group element marker, tuple map)


def pullback_map(source: CochainGroup, target: CochainGroup,
                 terms: Sequence[tuple[int, Callable]], verify: bool = True,
                 twist: Callable | None = None) -> GroupMap:
    """GroupMap ``f -> sum_k c_k * (f o phi_k)`` (optionally twisted).

    With ``twist``, the value at a target tuple ``t`` is additionally acted on
    by the group element ``twist(t)``.  ``verify`` re-evaluates the image on
    every target tuple and raises :class:`NotClosedUnderDifferential` if the
    result does not satisfy the target constraints.
    """
    m = source.module.rank
    mod = source.module
    ncols = source.generator_count
    columns: list[dict] = [{} for _ in range(ncols)]

    def linear_form(t):
        lf: dict[int, list[int]] = {}
        for coef, phi in terms:
            s = phi(t)
            if s is None or not coef:
                continue
            c, g = source.cell_of[s]
            off = source.cells[c].offset
            for k, w in enumerate(source.cell_images(c, g)):
                acc = lf.get(off + k)
                if acc is None:
                    acc = [0] * m
                    lf[off + k] = acc
                for i in range(m):
                    acc[i] += coef * w[i]
        out = {}
        tw = twist(t) if twist is not None else None
        for j, acc in lf.items():
            v = mod.apply(tw, acc) if tw is not None else mod.reduce(acc)
            if any(v):
                out[j] = v
        return out

    reps = {}
    for ci, cell in enumerate(target.cells):
        lf = linear_form(cell.rep)
        reps[ci] = lf
        for j, v in lf.items():
            try:
                coords = cell.fixed.coords(v)
            except NotInSubgroup:
                raise NotClosedUnderDifferential(
                    f"image value at {target.space.name(cell.rep)} leaves the fixed module") from None
            col = columns[j]
            for k, x in enumerate(coords):
                if x:
                    col[cell.offset + k] = x
    if verify:
        for t in target.tuples:
            ci, g = target.cell_of[t]
            cell = target.cells[ci]
            if t == cell.rep:
                continue
            lf = linear_form(t)
            base = reps[ci]
            for j in set(lf) | set(base):
                expected = mod.apply(g, base.get(j, (0,) * m))
                got = lf.get(j, (0,) * m)
                if mod.reduce(got) != expected:
                    raise NotClosedUnderDifferential(
                        f"image of generator {j} of {source.label or 'source'} is not constant on the "
                        f"component of {target.space.name(t)} in {target.label or 'target'}")
    return GroupMap(source.realized, target.realized,
                    IntMatrix(target.generator_count, ncols, columns))


def face(i: int):
    return lambda t: t[:i] + t[i + 1:]


def simplicial_differential(source: CochainGroup, target: CochainGroup, verify: bool = True) -> GroupMap:
    """``df(x_0..x_{n+1}) = sum_i (-1)^i f(.. x_i omitted ..)``."""
    if target.degree != source.degree + 1:
        raise ValueError("target degree must be source degree + 1")
    terms = [((-1) ** i, face(i)) for i in range(source.degree + 2)]
    return pullback_map(source, target, terms, verify=verify)


def action_map(A: CochainGroup, g: int) -> GroupMap:
    """``f -> g.f`` with ``(g.f)(t) = g.f(g^{-1} t)`` on a non-equivariant group."""
    act = A.action
    ginv = act.inverse[g]
    return pullback_map(A, A, [(1, lambda t: act.act(ginv, t))], twist=lambda t: g)


def act_on_cochain(g: int, f: Cochain) -> Cochain:
    if f.group.equivariant:
        return Cochain(f.group, list(f.coords))
    return Cochain(f.group, _apply_map(action_map(f.group, g), f.coords, f.group))


def _apply_map(m: GroupMap, coords, target: CochainGroup | None = None) -> list[int]:
    out = [0] * m.target.generator_count
    for j, v in m.matrix.apply(coords).items():
        out[j] = v
    return target.reduce(out) if target is not None else out


def apply_map(m: GroupMap, coords) -> list[int]:
    """Apply a GroupMap to dense coordinates, reducing in a diagonal target."""
    out = [0] * m.target.generator_count
    for j, v in m.matrix.apply(coords).items():
        out[j] = v
    orders = m.target.orders
    if orders is not None:
        out = [x % o if o else x for x, o in zip(out, orders)]
    return out


def inclusion_map(source: CochainGroup, target: CochainGroup, verify: bool = True) -> GroupMap:
    """Identity on functions; raises if ``source`` is not inside ``target``."""
    try:
        return pullback_map(source, target, [(1, lambda t: t)], verify=verify)
    except NotClosedUnderDifferential as exc:
        raise NotInCochainGroup(str(exc)) from None


def fixed_subgroup(A: CochainGroup, component_key: Callable | None = None) -> CochainGroup:
    """The equivariant cochains of ``A``, as a new group with the same constraints."""
    if A.equivariant:
        return A
    if not A.action.is_stable(A.tuples):
        raise RegionNotGStable("domain is not stable under the group")
    key = component_key if component_key is not None else A._component_key
    return CochainGroup(A.space, A.module, A.action, A.tuples, key, True, A.degree,
                        (A.label + "^G") if A.label else "")


def fixed_kernel_lattice(A: CochainGroup) -> Lattice:
    """``ker(f -> (g.f - f)_g)`` over generators of G, as a lattice in ``Z^gens(A)``."""
    act = A.action
    gens = act.generators()
    n = A.generator_count
    blocks = []
    for g in gens:
        m = action_map(A, g).matrix - IntMatrix.identity(n)
        blocks.append(m)
    cols = []
    for j in range(n):
        col = {}
        for b, m in enumerate(blocks):
            for i, v in m.column(j).items():
                col[b * n + i] = v
        cols.append(col)
    target = FpAbGroup.from_orders(list(A.orders) * len(gens))
    big = GroupMap(A.realized, target, IntMatrix(n * len(gens), n, cols))
    return big.kernel_lattice()


# -- cohomology of the standard complexes ------------------------------------

VARIANTS = ("standard", "continuous", "covering", "germ")


def variant_region(variant: str, cover: Covering | None = None):
    """``n -> region`` for a named variant.

    ``germ`` uses the minimal open cover, which refines every covering, so its
    ``U[n]`` is the smallest diagonal neighbourhood and realizes the colimit.
    """
    if variant == "standard":
        return lambda n: None
    if variant == "continuous":
        return lambda n: "full"
    if variant == "covering":
        if cover is None:
            raise ValueError("the covering variant needs a covering")
        return lambda n: diagonal_neighborhood(cover, n)
    if variant == "germ":
        if cover is None:
            raise ValueError("the germ variant needs the space (pass any covering)")
        minimal = minimal_open_cover(cover.space)
        return lambda n: diagonal_neighborhood(minimal, n)
    raise ValueError(f"unknown variant {variant!r}")


def cochain_complex(X: FiniteSpace, V: GModule, N: int, region=lambda n: None,
                    equivariant: bool = False, label: str = "A") -> tuple[list, list]:
    """Groups in degrees ``0..N+1`` and the differentials between them."""
    groups = [build_cochain_group(X, V, n, region(n), equivariant, V.action, f"{label}^{n}")
              for n in range(N + 2)]
    maps = [simplicial_differential(groups[n], groups[n + 1]) for n in range(N + 1)]
    return groups, maps


def cochain_cohomology(X: FiniteSpace, V: GModule, N: int, variant: str = "standard",
                       equivariant: bool = False, cover: Covering | None = None) -> list[Subquotient]:
    """``H^0..H^N`` of the named variant of the standard complex."""
    if variant == "germ" or cover is None:
        cover = minimal_open_cover(X)
    _, maps = cochain_complex(X, V, N, variant_region(variant, cover), equivariant)
    out = []
    for n in range(N + 1):
        d_in = maps[n - 1] if n else zero_map(FpAbGroup.free(0), maps[0].source)
        out.append(homology_at(maps[n], d_in))
    return out
