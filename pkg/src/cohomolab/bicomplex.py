"""The double complex of cochains that are continuous near the diagonal.

``grid(p, q)`` holds functions on ``X^{p+1} x X^{q+1}`` that are locally
constant on the region ``X^{p+1} x U[q]`` (and arbitrary elsewhere).  The
horizontal differential is the alternating face sum over the first block, the
vertical one is ``(-1)^p`` times the alternating face sum over the second
block.  Tuples are stored flat: the first ``p+1`` entries form the first block.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

from .cochain import (CochainGroup, GModule, NotInCochainGroup, apply_map,
                      build_cochain_group, inclusion_map, power_tuples,
                      pullback_map, simplicial_differential)
from .finspace import (Covering, FiniteSpace, GroupAction, SizeOverflow,
                       diagonal_neighborhood, minimal_open_cover, size_limit,
                       trivial_action)
from .fpabelian import (CompositionNotZero, FpAbGroup, GroupMap, IntMatrix,
                        Subquotient, block_matrix, homology_at, induced_map,
                        lincomb, matrix_identity_defect, solve_in_group,
                        zero_map)

__all__ = [
    "NotGInvariantCovering",
    "SourceMembership",
    "NotACocycle",
    "NotContinuous",
    "NotEquivariant",
    "SignProfileFailure",
    "BasepointInvalid",
    "NotEquivariantizable",
    "DoubleComplex",
    "build_double_complex",
    "structural_defects",
    "SIGN_PROFILES",
    "psi_bridge",
    "equivariantize",
    "column_analysis",
    "complex_cohomology",
    "CohomologyComparison",
    "compare_cohomology",
    "augmentation_comparison",
    "BridgeResult",
    "ColumnReport",
    "component_section",
    "equivariantize_instance",
    "cocycle_basis",
    "fix_sign_profile",
]


class NotGInvariantCovering(ValueError):
    pass


class SourceMembership(ValueError):
    pass


class NotACocycle(ValueError):
    pass


class NotContinuous(ValueError):
    pass


class NotEquivariant(ValueError):
    pass


class SignProfileFailure(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class BasepointInvalid(ValueError):
    pass


class NotEquivariantizable(ValueError):
    """No continuous equivariant map X -> G exists (G does not act freely on components)."""


def _delete(i: int):
    return lambda t: t[:i] + t[i + 1:]


def complex_cohomology(maps: Sequence[GroupMap], n: int) -> Subquotient:
    """``H^n`` of ``C^0 -> C^1 -> ...`` given ``maps[k]: C^k -> C^{k+1}``."""
    d_out = maps[n]
    if n == 0:
        d_in = zero_map(FpAbGroup.free(0), d_out.source)
    else:
        d_in = maps[n - 1]
    return homology_at(d_out, d_in)


@dataclass
class CohomologyComparison:
    """A chain map on ``H^n``: both groups, the induced map and a bijectivity verdict."""

    degree: int
    source: FpAbGroup | None
    target: FpAbGroup | None
    induced: GroupMap | None
    bijective: bool
    witness: dict | None = None


def compare_cohomology(chain_map: GroupMap, source_maps: Sequence[GroupMap],
                       target_maps: Sequence[GroupMap], n: int) -> CohomologyComparison:
    """Induced map on ``H^n``; bijectivity is decided by solving in both directions.

    Every target class must have a preimage and the solved preimages must
    assemble into a two-sided inverse.  On failure the witness names an
    unreached target class or a nonzero source class in the kernel.
    """
    try:
        hs = complex_cohomology(source_maps, n)
        ht = complex_cohomology(target_maps, n)
    except CompositionNotZero as exc:
        return CohomologyComparison(n, None, None, None, False,
                                    {"identity": "d d = 0", **(exc.witness or {})})
    for k in range(hs.generator_count):
        img = chain_map.matrix.apply(hs.representative(k))
        if not ht.contains(img):
            return CohomologyComparison(n, hs, ht, None, False, {
                "identity": "image of a cocycle is a cocycle", "source_class": k,
                "cocycle": hs.representative(k), "image": img})
    ind = induced_map(chain_map, hs, ht)
    for k in range(ht.generator_count):
        if solve_in_group(ind, {k: 1}) is None:
            return CohomologyComparison(n, hs, ht, ind, False, {
                "unreached_class": k, "cocycle": ht.representative(k)})
    if ind.inverse() is None:
        ker = ind.kernel()
        coords = ker.representative(0)
        cocycle = lincomb((v, hs.representative(i)) for i, v in coords.items())
        return CohomologyComparison(n, hs, ht, ind, False, {"kernel_class": coords, "cocycle": cocycle})
    return CohomologyComparison(n, hs, ht, ind, True)


def augmentation_comparison(dc: "DoubleComplex", n: int) -> CohomologyComparison:
    """``H^n(i): H^n(A_cr) -> H^n(Tot)``."""
    src = [dc.acr_differential(k) for k in range(n + 1)]
    tgt = [dc.D(k) for k in range(n + 1)]
    return compare_cohomology(dc.augmentation_i(n), src, tgt, n)


class DoubleComplex:
    """Grid, differentials, total complex and augmentations up to total degree ``top``.

    ``top`` defaults to ``N + 1`` so that cohomology in degrees ``<= N`` is
    exact.  ``fault`` injects a deliberate error for negative controls:
    ``"sign"`` drops the ``(-1)^p`` factor of ``d_v``; ``"differential"``
    omits the last face term of ``d_h`` on column 0, which breaks ``D^2 = 0``.
    """

    def __init__(self, X: FiniteSpace, V: GModule, cover: Covering | None = None,
                 equivariant: bool = False, N: int = 3, action: GroupAction | None = None,
                 top: int | None = None, fault: str | None = None, verify: bool = True):
        self.X = X
        self.V = V
        self.action = action if action is not None else (V.action or trivial_action(X))
        self.cover = cover if cover is not None else minimal_open_cover(X)
        self.equivariant = bool(equivariant)
        self.N = N
        self.top = N + 1 if top is None else top
        self.fault = fault
        self.verify = verify
        if fault not in (None, "sign", "differential"):
            raise ValueError(f"unknown fault {fault!r}")
        if self.equivariant and not self.cover.is_invariant(self.action):
            raise NotGInvariantCovering("covering is not invariant under the group")
        need = sum((k + 1) * X.point_count ** (k + 2) for k in range(self.top + 1)) * V.rank
        if need > size_limit():
            raise SizeOverflow(f"double complex to total degree {self.top} needs {need} ambient "
                               f"generators, limit {size_limit()}")
        self._U = {}
        self._grid = {}
        self._dh = {}
        self._dv = {}
        self._tot = {}
        self._D = {}
        self._acr = {}
        self._ac = {}
        self._aug = {}
        self._comp = X.component_index()

    # -- building blocks
    def U(self, q: int):
        s = self._U.get(q)
        if s is None:
            s = diagonal_neighborhood(self.cover, q)
            self._U[q] = s
        return s

    def _check(self, p: int, q: int) -> None:
        if p < 0 or q < 0 or p + q > self.top:
            raise IndexError(f"bidegree ({p},{q}) outside the built range (p+q <= {self.top})")

    def grid(self, p: int, q: int) -> CochainGroup:
        self._check(p, q)
        g = self._grid.get((p, q))
        if g is None:
            Uq = self.U(q).component_map()
            comp = self._comp
            k = p + 1

            def key(t, Uq=Uq, comp=comp, k=k):
                c = Uq.get(t[k:])
                if c is None:
                    return t
                return (tuple(comp[x] for x in t[:k]), c)

            g = CochainGroup(self.X, self.V, self.action, power_tuples(self.X, p + q + 2), key,
                             self.equivariant, (p, q), f"grid({p},{q})")
            self._grid[(p, q)] = g
        return g

    def horizontal_differential(self, p: int, q: int) -> GroupMap:
        self._check(p + 1, q)
        m = self._dh.get((p, q))
        if m is None:
            faces = p + 1 if self.fault == "differential" and p == 0 else p + 2
            terms = [((-1) ** i, _delete(i)) for i in range(faces)]
            m = pullback_map(self.grid(p, q), self.grid(p + 1, q), terms, verify=self.verify)
            self._dh[(p, q)] = m
        return m

    def vertical_differential(self, p: int, q: int) -> GroupMap:
        self._check(p, q + 1)
        m = self._dv.get((p, q))
        if m is None:
            sign = 1 if self.fault == "sign" else (-1) ** p
            terms = [(sign * (-1) ** i, _delete(p + 1 + i)) for i in range(q + 2)]
            m = pullback_map(self.grid(p, q), self.grid(p, q + 1), terms, verify=self.verify)
            self._dv[(p, q)] = m
        return m

    d_h = horizontal_differential
    d_v = vertical_differential

    # -- total complex
    def tot_blocks(self, n: int) -> list[tuple[int, int]]:
        return [(p, n - p) for p in range(n + 1)]

    def tot_offsets(self, n: int) -> dict[int, int]:
        off = {}
        acc = 0
        for p, q in self.tot_blocks(n):
            off[p] = acc
            acc += self.grid(p, q).generator_count
        off[n + 1] = acc
        return off

    def tot(self, n: int) -> FpAbGroup:
        if n > self.top:
            raise IndexError(f"total degree {n} beyond {self.top}")
        t = self._tot.get(n)
        if t is None:
            orders = []
            for p, q in self.tot_blocks(n):
                orders.extend(self.grid(p, q).orders)
            t = FpAbGroup.from_orders(orders)
            self._tot[n] = t
        return t

    def total_differential(self, n: int) -> GroupMap:
        """``D = d_h + d_v : Tot^n -> Tot^{n+1}`` (blocks in ascending p)."""
        m = self._D.get(n)
        if m is None:
            src = self.tot_blocks(n)
            dst = self.tot_blocks(n + 1)
            blocks = {}
            for bi, (p, q) in enumerate(src):
                blocks[(p, bi)] = self.d_v(p, q).matrix
                blocks[(p + 1, bi)] = self.d_h(p, q).matrix
            rs = [self.grid(p, q).generator_count for p, q in dst]
            cs = [self.grid(p, q).generator_count for p, q in src]
            m = GroupMap(self.tot(n), self.tot(n + 1), block_matrix(rs, cs, blocks))
            self._D[n] = m
        return m

    D = total_differential

    def tot_component(self, n: int, vec, p: int) -> list[int]:
        """The ``grid(p, n-p)`` block of a Tot^n vector (dense list or sparse dict)."""
        off = self.tot_offsets(n)
        lo, hi = off[p], off[p + 1]
        if isinstance(vec, dict):
            return [vec.get(i, 0) for i in range(lo, hi)]
        return list(vec[lo:hi])

    def tot_vector(self, n: int, parts: dict[int, Sequence[int]]) -> list[int]:
        out = [0] * self.tot(n).generator_count
        off = self.tot_offsets(n)
        for p, coords in parts.items():
            out[off[p]:off[p] + len(coords)] = list(coords)
        return out

    def tot_cohomology(self, n: int) -> Subquotient:
        maps = [self.D(k) for k in range(n + 1)]
        return complex_cohomology(maps, n)

    # -- augmentations
    def acr(self, q: int) -> CochainGroup:
        """Row augmentation source: cochains on ``X^{q+1}`` continuous on ``U[q]``."""
        g = self._acr.get(q)
        if g is None:
            g = build_cochain_group(self.X, self.V, q, self.U(q), self.equivariant, self.action,
                                    f"A_cr^{q}")
            self._acr[q] = g
        return g

    def ac(self, p: int) -> CochainGroup:
        """Column augmentation source: continuous cochains on ``X^{p+1}``."""
        g = self._ac.get(p)
        if g is None:
            g = build_cochain_group(self.X, self.V, p, "full", self.equivariant, self.action,
                                    f"A_c^{p}")
            self._ac[p] = g
        return g

    def acr_differential(self, q: int) -> GroupMap:
        key = ("dacr", q)
        m = self._aug.get(key)
        if m is None:
            m = simplicial_differential(self.acr(q), self.acr(q + 1), verify=self.verify)
            self._aug[key] = m
        return m

    def ac_differential(self, p: int) -> GroupMap:
        key = ("dac", p)
        m = self._aug.get(key)
        if m is None:
            m = simplicial_differential(self.ac(p), self.ac(p + 1), verify=self.verify)
            self._aug[key] = m
        return m

    def _embed(self, n: int, p: int, m: GroupMap, source: FpAbGroup) -> GroupMap:
        off = self.tot_offsets(n)[p]
        cols = [{off + i: v for i, v in c.items()} for c in m.matrix.iter_columns()]
        return GroupMap(source, self.tot(n), IntMatrix(self.tot(n).generator_count, len(cols), cols))

    def row_augmentation(self, q: int) -> GroupMap:
        """``A_cr^q -> grid(0, q)``, ``f -> ((x_0, x') -> f(x'))``."""
        key = ("i", q)
        m = self._aug.get(key)
        if m is None:
            m = pullback_map(self.acr(q), self.grid(0, q), [(1, lambda t: t[1:])], verify=self.verify)
            self._aug[key] = m
        return m

    def column_augmentation(self, p: int) -> GroupMap:
        """``A_c^p -> grid(p, 0)``, ``f -> ((x, x_0') -> f(x))``."""
        key = ("j", p)
        m = self._aug.get(key)
        if m is None:
            m = pullback_map(self.ac(p), self.grid(p, 0), [(1, lambda t: t[:-1])], verify=self.verify)
            self._aug[key] = m
        return m

    def augmentation_i(self, n: int) -> GroupMap:
        """``i^n: A_cr^n -> Tot^n`` (into bidegree (0, n))."""
        return self._embed(n, 0, self.row_augmentation(n), self.acr(n).realized)

    def augmentation_j(self, n: int) -> GroupMap:
        """``j^n: A_c^n -> Tot^n`` (into bidegree (n, 0))."""
        return self._embed(n, n, self.column_augmentation(n), self.ac(n).realized)

    def apply_i(self, n: int, f) -> list[int]:
        coords = self._coerce(self.acr(n), f)
        return apply_map(self.augmentation_i(n), coords)

    def apply_j(self, n: int, f) -> list[int]:
        coords = self._coerce(self.ac(n), f)
        return apply_map(self.augmentation_j(n), coords)

    @staticmethod
    def _coerce(group: CochainGroup, f) -> list[int]:
        if isinstance(f, dict):
            try:
                return group.from_function(f)
            except NotInCochainGroup as exc:
                raise SourceMembership(str(exc)) from None
        if len(f) != group.generator_count:
            raise SourceMembership(f"expected {group.generator_count} coordinates for {group.label}")
        return group.reduce(list(f))

    # -- row contraction
    def row_contraction_map(self, p: int, q: int, signed: bool = True) -> GroupMap:
        """``h: grid(p, q) -> grid(p-1, q)`` (``A_cr^q`` when ``p == 0``).

        ``h(f)(x_0..x_{p-1}, x') = f(x_0..x_{p-1}, x'_0, x')``, multiplied by
        ``(-1)^p`` when ``signed``; only the signed version is a contracting
        homotopy for the horizontal differential used here.
        """
        key = ("h", p, q, signed)
        m = self._aug.get(key)
        if m is None:
            target = self.acr(q) if p == 0 else self.grid(p - 1, q)
            sign = (-1) ** p if signed else 1
            m = pullback_map(self.grid(p, q), target, [(sign, lambda t, p=p: t[:p] + t[p:p + 1] + t[p:])],
                             verify=self.verify)
            self._aug[key] = m
        return m

    def row_contraction(self, p: int, q: int, f, signed: bool = True) -> list[int]:
        return apply_map(self.row_contraction_map(p, q, signed), self._coerce(self.grid(p, q), f))

    def verify_row_contraction(self, q: int, signed: bool = True) -> list[dict]:
        """Check the contracting-homotopy identities on row ``q``; returns failures."""
        fails = []
        i = self.row_augmentation(q)
        h0 = self.row_contraction_map(0, q, signed)
        d = h0.compose(i)
        bad = matrix_identity_defect(d)
        if bad is not None:
            fails.append({"identity": f"h^0 i = id on A_cr^{q}", "generator": bad[0], "defect": bad[1]})
        for p in range(0, self.top - q):
            dh = self.d_h(p, q)
            hnext = self.row_contraction_map(p + 1, q, signed)
            second = hnext.compose(dh)
            if p == 0:
                first = i.compose(h0)
                name = f"i h^0 + h^1 d_h = id on grid(0,{q})"
            else:
                first = self.d_h(p - 1, q).compose(self.row_contraction_map(p, q, signed))
                name = f"d_h h^{p} + h^{p + 1} d_h = id on grid({p},{q})"
            total = GroupMap(first.source, first.target, first.matrix + second.matrix)
            bad = matrix_identity_defect(total)
            if bad is not None:
                fails.append({"identity": name, "generator": bad[0], "defect": bad[1]})
        return fails

    def augmented_row_cohomology(self, q: int) -> list[tuple[str, Subquotient]]:
        """Cohomology of ``0 -> A_cr^q -> grid(0,q) -> grid(1,q) -> ...`` where computable."""
        out = []
        i = self.row_augmentation(q)
        out.append((f"A_cr^{q}", complex_cohomology([i], 0)))
        prev = i
        for p in range(0, self.top - q):
            dh = self.d_h(p, q)
            out.append((f"grid({p},{q})", homology_at(dh, prev)))
            prev = dh
        return out

    # -- partner variant
    def partner(self, equivariant: bool) -> "DoubleComplex":
        if equivariant == self.equivariant:
            return self
        key = ("partner", equivariant)
        dc = self._aug.get(key)
        if dc is None:
            dc = DoubleComplex(self.X, self.V, self.cover, equivariant, self.N, self.action,
                               self.top, self.fault, self.verify)
            self._aug[key] = dc
        return dc


def build_double_complex(X: FiniteSpace, V: GModule, cover: Covering | None = None,
                         equivariant: bool = False, N: int = 3, action: GroupAction | None = None,
                         fault: str | None = None, check: bool = True) -> DoubleComplex:
    """Build and (with ``check``) verify ``d_h^2 = d_v^2 = 0`` and anticommutativity."""
    dc = DoubleComplex(X, V, cover, equivariant, N, action, fault=fault)
    if check:
        bad = structural_defects(dc)
        if bad:
            raise ValueError("double complex identities fail: " + bad[0]["identity"])
    return dc


def structural_defects(dc: DoubleComplex, max_degree: int | None = None) -> list[dict]:
    """All failures of ``d_h^2 = 0``, ``d_v^2 = 0``, ``d_h d_v + d_v d_h = 0``, ``D^2 = 0``."""
    top = dc.top if max_degree is None else max_degree
    out = []

    def check(name, m: GroupMap):
        for j, col in enumerate(m.matrix.iter_columns()):
            if not m.target.is_zero_element(col):
                out.append({"identity": name, "generator": j, "value": m.target.reduce(col)})
                return

    for n in range(top - 1):
        for p in range(n + 1):
            q = n - p
            check(f"d_h d_h = 0 at ({p},{q})", dc.d_h(p + 1, q).compose(dc.d_h(p, q)))
            check(f"d_v d_v = 0 at ({p},{q})", dc.d_v(p, q + 1).compose(dc.d_v(p, q)))
            a = dc.d_v(p + 1, q).compose(dc.d_h(p, q))
            b = dc.d_h(p, q + 1).compose(dc.d_v(p, q))
            check(f"d_h d_v + d_v d_h = 0 at ({p},{q})",
                  GroupMap(a.source, a.target, a.matrix + b.matrix))
        check(f"D D = 0 on Tot^{n}", dc.D(n + 1).compose(dc.D(n)))
    return out


# -- the bridge between the two augmentations --------------------------------

SIGN_PROFILES = {
    "(-1)^p": lambda p, q: (-1) ** p,
    "1": lambda p, q: 1,
    "(-1)^q": lambda p, q: (-1) ** q,
    "-(-1)^p": lambda p, q: -((-1) ** p),
    "-1": lambda p, q: -1,
    "-(-1)^q": lambda p, q: -((-1) ** q),
}


@dataclass
class BridgeResult:
    degree: int
    profile: str
    c: list
    tried: list = field(default_factory=list)


def _continuous_equivariant_coords(dc: DoubleComplex, n: int, f) -> list[int]:
    """Coordinates of ``f`` in ``A_c^n`` of ``dc`` with specific error types."""
    target = dc.ac(n)
    if isinstance(f, dict):
        func = f
    else:
        if len(f) != target.generator_count:
            raise SourceMembership(f"expected {target.generator_count} coordinates")
        return target.reduce(list(f))
    plain = dc.partner(False).ac(n)
    try:
        plain.from_function(func)
    except NotInCochainGroup as exc:
        raise NotContinuous(str(exc)) from None
    try:
        return target.from_function(func)
    except NotInCochainGroup as exc:
        raise NotEquivariant(str(exc)) from None


def psi_bridge(dc: DoubleComplex, n: int, f, profiles: Sequence[str] | None = None) -> BridgeResult:
    """Find ``c`` in Tot^{n-1} with ``D(c) = j(f) - i(f)`` for a continuous cocycle ``f``.

    ``c = sum_{p+q=n-1} eps(p, q) (-1)^p f(x, x')``; the sign profile ``eps``
    is searched over :data:`SIGN_PROFILES` in order and the first that works
    is reported.  ``f`` may be coordinates in ``dc.ac(n)`` or a function dict.
    """
    coords = _continuous_equivariant_coords(dc, n, f)
    Ac = dc.ac(n)
    if n + 1 <= dc.top:
        df = apply_map(dc.ac_differential(n), coords)
        if any(df):
            raise NotACocycle(f"df != 0 (first nonzero coordinate {next(i for i, x in enumerate(df) if x)})")
    func = Ac.to_function(coords)
    # i(f) needs f as a U-continuous cochain; continuous cochains qualify
    acr = dc.acr(n)
    f_cr = acr.from_function(func)
    target = dc.tot(n)
    goal = apply_map(dc.augmentation_j(n), coords)
    ivec = apply_map(dc.augmentation_i(n), f_cr)
    goal = [a - b for a, b in zip(goal, ivec)]
    goal = list(target.reduce(goal).get(k, 0) for k in range(target.generator_count))
    if n == 0:
        return BridgeResult(0, "any", [], [])
    names = list(SIGN_PROFILES) if profiles is None else list(profiles)
    tried = []
    first_witness = None
    D = dc.D(n - 1)
    for name in names:
        eps = SIGN_PROFILES[name]
        parts = {}
        for p in range(n):
            q = n - 1 - p
            s = eps(p, q) * (-1) ** p
            g = dc.grid(p, q)
            parts[p] = g.from_function({t: tuple(s * x for x in v) for t, v in func.items()})
        c = dc.tot_vector(n - 1, parts)
        Dc = apply_map(D, c)
        diff = [a - b for a, b in zip(Dc, goal)]
        red = target.reduce(diff)
        if not red:
            tried.append((name, True))
            return BridgeResult(n, name, c, tried)
        tried.append((name, False))
        if first_witness is None:
            k = min(red)
            first_witness = {"profile": name, "coordinate": k, "D(c)": Dc[k], "j(f)-i(f)": goal[k],
                             "c_nonzero": {i: x for i, x in enumerate(c) if x}}
    raise SignProfileFailure(f"no sign profile among {names} gives D(c) = j(f) - i(f) in degree {n}",
                             first_witness)


def cocycle_basis(dc: DoubleComplex, n: int) -> list[list[int]]:
    """Lattice basis of the cocycles in ``dc.ac(n)`` (coordinates)."""
    A = dc.ac(n)
    lat = dc.ac_differential(n).kernel_lattice()
    return [[v.get(i, 0) for i in range(A.generator_count)] for v in lat.basis()]


def fix_sign_profile(dc: DoubleComplex, cocycles: dict, profiles: Sequence[str] | None = None):
    """First profile bridging every cocycle in ``{degree: [coords]}``.

    Returns ``(name or None, failures)`` where ``failures`` maps each rejected
    profile to the witness of its first failing cocycle.
    """
    names = list(SIGN_PROFILES) if profiles is None else list(profiles)
    failures = {}
    for name in names:
        bad = None
        for n in sorted(cocycles):
            for k, f in enumerate(cocycles[n]):
                try:
                    psi_bridge(dc, n, f, [name])
                except SignProfileFailure as exc:
                    bad = {"degree": n, "cocycle": k, **(exc.witness or {})}
                    break
            if bad:
                break
        if bad is None:
            return name, failures
        failures[name] = bad
    return None, failures


# -- equivariantization ------------------------------------------------------

def component_section(action: GroupAction) -> tuple[int, ...]:
    """Equivariant ``gamma: X -> G`` constant on components, if one exists."""
    X = action.space
    comp = X.component_index()
    ncomp = max(comp) + 1
    gamma_c: list[int | None] = [None] * ncomp
    rep = {}
    for x in range(X.point_count):
        rep.setdefault(comp[x], x)
    for c in range(ncomp):
        if gamma_c[c] is not None:
            continue
        x = rep[c]
        for g in range(action.order):
            gc = comp[action.perms[g][x]]
            if gc == c and g != action.identity:
                raise NotEquivariantizable(
                    f"{action.names[g]} maps the component of {X.labels[x]} to itself")
            gamma_c[gc] = g
    return tuple(gamma_c[comp[x]] for x in range(X.point_count))


def equivariantize(plain: DoubleComplex, eq: DoubleComplex, p: int, q: int, fprime) -> list[int]:
    """``f_eq(t) = gamma(t_0) . f'(gamma(t_0)^{-1} . t)`` for ``f'`` in plain ``grid(p, q)``.

    ``gamma`` is an equivariant map ``X -> G`` constant on connected
    components (for ``X = G`` discrete it is the identity).  The result is
    returned as coordinates in the equivariant ``grid(p, q)``.
    """
    act = plain.action
    gamma = component_section(act)
    src = plain.grid(p, q)
    dst = eq.grid(p, q)
    coords = plain._coerce(src, fprime)
    V = plain.V

    def value(t):
        g = gamma[t[0]]
        s = act.act(act.inverse[g], t)
        return V.apply(g, src.value(coords, s))

    return dst.from_function(value)


def equivariantize_instance(plain: DoubleComplex, eq: DoubleComplex, rng: random.Random,
                            p: int, q: int) -> dict:
    """One randomized check: ``f' = u + z`` with ``u`` equivariant and ``d_v z = 0``.

    Returns a record with the outcome of ``d_v(equivariantize(f')) == d_v(f')``.
    """
    G_plain = plain.grid(p, q)
    u_eq = eq.grid(p, q).random_element(rng)
    u = G_plain.from_function(eq.grid(p, q).to_function(u_eq))
    if q >= 1:
        w = plain.grid(p, q - 1).random_element(rng)
        z = apply_map(plain.d_v(p, q - 1), w)
    else:
        z = G_plain.zero()
    noise = G_plain.random_element(rng)
    fprime = G_plain.reduce([a + b for a, b in zip(u, z)])
    dvf = apply_map(plain.d_v(p, q), fprime)
    dv_noise = apply_map(plain.d_v(p, q), G_plain.reduce([a + b for a, b in zip(fprime, noise)]))
    f_eq = equivariantize(plain, eq, p, q, fprime)
    dv_eq = apply_map(eq.d_v(p, q), f_eq)
    target = plain.grid(p, q + 1)
    dv_eq_plain = target.from_function(eq.grid(p, q + 1).to_function(dv_eq))
    ok = target.reduce(dv_eq_plain) == target.reduce(dvf)
    eq_target = eq.grid(p, q + 1)
    noisy_equivariant = eq_target.contains_function(target.to_function(dv_noise))
    witness = None
    if not ok:
        k = next(i for i, (a, b) in enumerate(zip(dv_eq_plain, dvf)) if a != b)
        witness = {"coordinate": k, "d_v(f_eq)": dv_eq_plain[k], "d_v(f')": dvf[k]}
    return {"p": p, "q": q, "ok": ok, "fprime_equivariant": eq.grid(p, q).contains_function(
        G_plain.to_function(fprime)), "noise_dv_equivariant": noisy_equivariant, "witness": witness}


# -- column analysis ---------------------------------------------------------

@dataclass
class ColumnReport:
    p: int
    basepoint: str
    contraction_failures: list
    kernels_coincide: dict
    kernel_witness: dict
    res_surjective: dict
    cr_inside_global: dict
    continuous_cohomology: list
    local_cohomology: list

    @property
    def exact_global(self) -> bool:
        return not self.contraction_failures


def _first_block_key(X: FiniteSpace, p: int, second_key=None):
    comp = X.component_index()
    k = p + 1
    if second_key is None:
        return lambda t: (tuple(comp[x] for x in t[:k]), t[k:])
    return lambda t: (tuple(comp[x] for x in t[:k]), second_key(t[k:]))


def column_analysis(dc: DoubleComplex, p: int, N: int | None = None,
                    basepoint: int | str | None = None) -> ColumnReport:
    """Evidence for the column statements at horizontal degree ``p`` (non-equivariant).

    (a) point contraction of the global column ``A^{p,*}(X)`` (functions on
        ``X^{p+1} x X^{q+1}`` locally constant in the first block);
    (b) restriction kernels ``ker(A_cr^{p,q} -> A_c^{p,q}(X,U))`` and
        ``ker(A^{p,q}(X) -> A^{p,q}(X,U))`` compared as ambient lattices;
    (c) surjectivity of both restrictions and whether ``A_cr^{p,q}`` lies in
        ``A^{p,q}(X)``;
    (d) cohomology of the continuous column ``A_c^{p,*}(X,U)`` for ``q <= N``
        and of the local column ``A^{p,*}(X,U)``.

    Parts (a)-(c) use ``q <= N - p`` (the range of the total complex).
    """
    plain = dc.partner(False)
    X, V = plain.X, plain.V
    N = plain.N if N is None else N
    if basepoint is None:
        star = 0
    elif isinstance(basepoint, str):
        if basepoint not in X.labels:
            raise BasepointInvalid(f"unknown point {basepoint!r}")
        star = X.index(basepoint)
    else:
        if not 0 <= basepoint < X.point_count:
            raise BasepointInvalid(f"point index {basepoint} out of range")
        star = basepoint
    k = p + 1
    qmax = max(N - p, 0)
    act = plain.action

    def global_col(q):
        return CochainGroup(X, V, act, power_tuples(X, p + q + 2), _first_block_key(X, p),
                            False, (p, q), f"A^({p},{q})(X)")

    glob = {q: global_col(q) for q in range(qmax + 2)}

    def dv(src, dst, q):
        terms = [((-1) ** p * (-1) ** i, _delete(k + i)) for i in range(q + 2)]
        return pullback_map(src, dst, terms)

    # (a) point contraction with augmentation A_c^p(X) -> A^{p,0}(X)
    fails = []
    acp = plain.ac(p)
    eps = pullback_map(acp, glob[0], [(1, lambda t: t[:-1])])
    h0 = pullback_map(glob[0], acp, [(1, lambda t: t + (star,))])
    hs = {q: pullback_map(glob[q], glob[q - 1], [((-1) ** p, lambda t: t[:k] + (star,) + t[k:])])
          for q in range(1, qmax + 2)}
    dvs = {q: dv(glob[q], glob[q + 1], q) for q in range(qmax + 1)}
    bad = matrix_identity_defect(h0.compose(eps))
    if bad:
        fails.append({"identity": "h^0 eps = id", "generator": bad[0], "defect": bad[1]})
    for q in range(qmax + 1):
        second = hs[q + 1].compose(dvs[q])
        first = eps.compose(h0) if q == 0 else dvs[q - 1].compose(hs[q])
        total = GroupMap(first.source, first.target, first.matrix + second.matrix)
        bad = matrix_identity_defect(total)
        if bad:
            fails.append({"identity": f"d h + h d = id at q={q}", "generator": bad[0], "defect": bad[1]})

    # (b), (c) restriction kernels
    coincide, witness, surj, inside = {}, {}, {}, {}
    for q in range(qmax + 1):
        Uq = plain.U(q)
        ucomp = Uq.component_map()
        local_tuples = [a + b for a in power_tuples(X, k) for b in Uq.tuples]
        local = CochainGroup(X, V, act, local_tuples, _first_block_key(X, p), False, (p, q),
                             f"A^({p},{q})(X,U)")
        cont = CochainGroup(X, V, act, local_tuples, _first_block_key(X, p, ucomp.get), False,
                            (p, q), f"A_c^({p},{q})(X,U)")
        grid = plain.grid(p, q)
        res = pullback_map(glob[q], local, [(1, lambda t: t)])
        res_cr = pullback_map(grid, cont, [(1, lambda t: t)])
        surj[q] = res.is_surjective() and res_cr.is_surjective()
        amb_g = glob[q].inclusion()
        amb_cr = grid.inclusion()
        K = _image_lattice(amb_g, res.kernel_lattice())
        Kcr = _image_lattice(amb_cr, res_cr.kernel_lattice())
        coincide[q] = K.same_as(Kcr)
        if not coincide[q]:
            extra = next((v for v in Kcr.basis() if not K.contains(v)), None)
            if extra is not None:
                m = V.rank
                i = min(extra)
                witness[q] = {"in": "ker res_cr only", "tuple": X.name(grid.tuples[i // m]),
                              "value": extra[i]}
        try:
            inclusion_map(grid, glob[q])
            inside[q] = True
        except NotInCochainGroup:
            inside[q] = False

    # (d) continuous and local columns; first block restricted to component representatives
    comp = X.component_index()
    reps = sorted({next(x for x in range(X.point_count) if comp[x] == c) for c in set(comp)})
    first_blocks = list(itertools.product(reps, repeat=k))

    def col_group(q, continuous):
        Uq = plain.U(q)
        ucomp = Uq.component_map()
        tuples = [a + b for a in first_blocks for b in Uq.tuples]
        key = (lambda t: (t[:k], ucomp[t[k:]])) if continuous else None
        return CochainGroup(X, V, act, tuples, key, False, q,
                            f"A_c^({p},{q})(X,U)" if continuous else f"A^({p},{q})(X,U)")

    cont_h, local_h = [], []
    for continuous, out in ((True, cont_h), (False, local_h)):
        groups = [col_group(q, continuous) for q in range(N + 2)]
        maps = [dv(groups[q], groups[q + 1], q) for q in range(N + 1)]
        for q in range(N + 1):
            out.append(complex_cohomology(maps, q))
    return ColumnReport(p, X.labels[star], fails, coincide, witness, surj, inside, cont_h, local_h)


def _image_lattice(inc: GroupMap, lat):
    from .fpabelian import Lattice
    out = Lattice(inc.target.generator_count)
    for v in lat.basis():
        out.add(inc.matrix.apply(v))
    for c in inc.target.relations.iter_columns():
        out.add(c)
    return out
