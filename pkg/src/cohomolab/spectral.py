"""Spectral sequence of the column filtration, computed with explicit lattices.

For a class at ``(p, q)`` on page ``r``::

    Z_r = { x_p : x in F^p Tot, (Dx)_k = 0 for p <= k < p + r }
    B_r = { (Dy)_p : y in F^{p-r+1} Tot, (Dy)_k = 0 for k < p }
    E_r = Z_r / B_r

(all equalities modulo the relations of the bigraded pieces), and ``d_r``
sends the class of ``x_p`` to the class of ``(Dx)_{p+r}`` for a lift ``x``.
Each page is also checked to be the homology of the previous one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fpabelian import (FpAbGroup, GroupMap, IntMatrix, Lattice, Subquotient,
                        block_matrix, homology_at, lincomb, to_sparse)

__all__ = [
    "BoundTooSmall",
    "NotStabilized",
    "NotAComplex",
    "ColumnView",
    "TransposedView",
    "SpectralPage",
    "SpectralSequence",
    "ConvergenceReport",
    "compute_pages",
    "check_total_complex",
    "convergence_report",
]


class BoundTooSmall(ValueError):
    pass


class NotStabilized(ValueError):
    pass


class NotAComplex(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class ColumnView:
    """Bigraded data of a double complex, filtered by columns (first index)."""

    def __init__(self, dc):
        self.dc = dc
        self.top = dc.top
        self.N = dc.N

    def group(self, p: int, q: int) -> FpAbGroup:
        return self.dc.grid(p, q).realized

    def dh(self, p: int, q: int) -> GroupMap:
        return self.dc.d_h(p, q)

    def dv(self, p: int, q: int) -> GroupMap:
        return self.dc.d_v(p, q)


class TransposedView(ColumnView):
    """The same double complex with the roles of the two indices swapped."""

    def group(self, p: int, q: int) -> FpAbGroup:
        return self.dc.grid(q, p).realized

    def dh(self, p: int, q: int) -> GroupMap:
        return self.dc.d_v(q, p)

    def dv(self, p: int, q: int) -> GroupMap:
        return self.dc.d_h(q, p)


@dataclass
class SpectralPage:
    r: int
    entries: dict  # (p, q) -> Subquotient
    differentials: dict = field(default_factory=dict)  # (p, q) -> GroupMap
    homology_check: dict = field(default_factory=dict)  # (p, q) -> bool (E_{r+1} = H(E_r))

    def invariants(self) -> dict:
        return {pq: e.invariants() for pq, e in self.entries.items()}


class _Stack:
    """Block system over consecutive bidegrees ``(k, n-k)`` for ``k`` in a range."""

    def __init__(self, view, n: int, lo: int, hi: int):
        self.view = view
        self.n = n
        self.cols = [k for k in range(lo, hi + 1) if 0 <= k <= n]
        self.rows = [k for k in range(lo, hi + 1) if 0 <= k <= n + 1]

    def matrix(self) -> GroupMap:
        v = self.view
        n = self.n
        cs = [v.group(k, n - k).generator_count for k in self.cols]
        rs = [v.group(k, n + 1 - k).generator_count for k in self.rows]
        blocks = {}
        rpos = {k: i for i, k in enumerate(self.rows)}
        for j, k in enumerate(self.cols):
            if k in rpos:
                blocks[(rpos[k], j)] = v.dv(k, n - k).matrix
            if k + 1 in rpos:
                blocks[(rpos[k + 1], j)] = v.dh(k, n - k).matrix
        src_orders, dst_orders = [], []
        for k in self.cols:
            src_orders.extend(v.group(k, n - k).orders)
        for k in self.rows:
            dst_orders.extend(v.group(k, n + 1 - k).orders)
        return GroupMap(FpAbGroup.from_orders(src_orders), FpAbGroup.from_orders(dst_orders),
                        block_matrix(rs, cs, blocks))

    def offsets(self) -> dict[int, int]:
        off, acc = {}, 0
        for k in self.cols:
            off[k] = acc
            acc += self.view.group(k, self.n - k).generator_count
        return off


class SpectralSequence:
    """Pages of the column filtration for ``p + q <= N`` (plus total degree N+1 targets)."""

    def __init__(self, view, N: int | None = None):
        self.view = view
        self.N = view.N if N is None else N
        if view.top < self.N + 1:
            raise BoundTooSmall(f"double complex built to total degree {view.top}; "
                                f"pages up to degree {self.N} need {self.N + 1}")
        self._Z = {}
        self._B = {}
        self._E = {}

    def _gens(self, p, q):
        return self.view.group(p, q).generator_count

    def _Zr(self, p: int, q: int, r: int):
        """(tracked lattice of projections, full kernel vectors, offsets)."""
        n = p + q
        hi = min(p + r - 1, n + 1)
        key = (p, q, hi)
        hit = self._Z.get(key)
        if hit is not None:
            return hit
        grp = self.view.group(p, q)
        if r == 0:
            lat = Lattice(grp.generator_count, track=True)
            vecs = []
            for i in range(grp.generator_count):
                lat.add({i: 1}, expr={len(vecs): 1})
                vecs.append({i: 1})
            out = (lat, vecs, {p: 0})
        else:
            st = _Stack(self.view, n, p, hi)
            M = st.matrix()
            off = st.offsets()
            size = grp.generator_count
            klat = M.kernel_lattice()
            vecs = klat.basis()
            lat = Lattice(size, track=True)
            for idx, v in enumerate(vecs):
                lat.add({i: x for i, x in v.items() if i < size}, expr={idx: 1})
            out = (lat, vecs, off)
        self._Z[key] = out
        return out

    def _Br(self, p: int, q: int, r: int) -> list[dict]:
        n = p + q
        lo = max(p - r + 1, 0)
        key = (p, q, lo if r >= 1 else None)
        hit = self._B.get(key)
        if hit is not None:
            return hit
        gens: list[dict] = list(self.view.group(p, q).relations.iter_columns())
        if r >= 1 and q >= 1:
            gens.extend(self.view.dv(p, q - 1).matrix.iter_columns())
        if r >= 2 and p >= 1:
            st = _Stack(self.view, n - 1, lo, p - 1)
            # only constraints strictly below p
            st.rows = [k for k in st.rows if k <= p - 1]
            M = st.matrix()
            off = st.offsets()
            dh = self.view.dh(p - 1, q)
            base = off[p - 1]
            width = self._gens(p - 1, q)
            for v in M.kernel_lattice().basis():
                y = {i - base: x for i, x in v.items() if base <= i < base + width}
                if y:
                    gens.append(dh.matrix.apply(y))
        self._B[key] = gens
        return gens

    def entry(self, p: int, q: int, r: int) -> Subquotient:
        key = (p, q, r)
        e = self._E.get(key)
        if e is None:
            lat, _, _ = self._Zr(p, q, r)
            B = self._Br(p, q, r)
            bad = next((b for b in B if not lat.contains(b)), None)
            if bad is not None:
                raise NotAComplex(f"B_{r} is not inside Z_{r} at ({p},{q})",
                                  {"page": r, "position": (p, q), "boundary": bad})
            e = Subquotient(lat, B)
            self._E[key] = e
        return e

    def coarse_entry(self, p: int, q: int, r: int) -> Subquotient:
        """``grid(p, q) / B_r``, used as target when ``Z_r`` is out of range."""
        lat = Lattice(self._gens(p, q), [{i: 1} for i in range(self._gens(p, q))])
        return Subquotient(lat, self._Br(p, q, r))

    def lift(self, p: int, q: int, r: int, xp: dict) -> dict:
        lat, vecs, _ = self._Zr(p, q, r)
        expr = lat.express(xp)
        if expr is None:
            raise ValueError("representative outside Z_r")
        return lincomb((c, vecs[i]) for i, c in expr.items())

    def differential(self, p: int, q: int, r: int) -> GroupMap | None:
        """``d_r: E_r^{p,q} -> E_r^{p+r, q-r+1}`` (coarse target in degree N+1)."""
        n = p + q
        tp, tq = p + r, q - r + 1
        src = self.entry(p, q, r)
        if tq < 0:
            return None
        if tp + tq > self.view.top:
            return None
        tgt = self.entry(tp, tq, r) if tp + tq <= self.N else self.coarse_entry(tp, tq, r)
        cols = []
        _, _, off = self._Zr(p, q, r)
        for k in range(src.generator_count):
            rep = src.representative(k)
            if r == 0:
                x = {p: rep}
            else:
                full = self.lift(p, q, r, rep)
                x = {}
                for kk, o in off.items():
                    w = self._gens(kk, n - kk)
                    part = {i - o: v for i, v in full.items() if o <= i < o + w}
                    x[kk] = part
            # component tp of D x
            val: dict = {}
            src_k = tp - 1
            if src_k in x and x[src_k]:
                for i, v in self.view.dh(src_k, n - src_k).matrix.apply(x[src_k]).items():
                    val[i] = val.get(i, 0) + v
            if tp in x and x[tp]:
                for i, v in self.view.dv(tp, n - tp).matrix.apply(x[tp]).items():
                    val[i] = val.get(i, 0) + v
            val = {i: v for i, v in val.items() if v}
            cols.append(to_sparse(tgt.coordinates(val)))
        return GroupMap(src, tgt, IntMatrix(tgt.generator_count, src.generator_count, cols))

    def positions(self) -> list[tuple[int, int]]:
        return [(p, n - p) for n in range(self.N + 1) for p in range(n + 1)]


def compute_pages(dc_or_view, r_max: int | None = None, check_homology: bool = True) -> list[SpectralPage]:
    """Pages ``E_0 .. E_{r_max}`` on ``p + q <= N``; ``r_max`` defaults to ``N + 2``."""
    view = dc_or_view if isinstance(dc_or_view, ColumnView) else ColumnView(dc_or_view)
    check_total_complex(view)
    ss = SpectralSequence(view)
    N = ss.N
    if r_max is None:
        r_max = N + 2
    if r_max < 0:
        raise BoundTooSmall("r_max must be nonnegative")
    pages = []
    for r in range(r_max + 1):
        page = SpectralPage(r, {pq: ss.entry(*pq, r) for pq in ss.positions()})
        for p, q in ss.positions():
            d = ss.differential(p, q, r)
            if d is not None:
                page.differentials[(p, q)] = d
        pages.append(page)
    if check_homology:
        for r in range(r_max):
            page = pages[r]
            nxt = pages[r + 1]
            for p, q in ss.positions():
                d_out = page.differentials.get((p, q))
                here = page.entries[(p, q)]
                if d_out is None:
                    d_out = GroupMap(here, FpAbGroup.free(0), IntMatrix(0, here.generator_count))
                sp, sq = p - r, q + r - 1
                d_in = page.differentials.get((sp, sq)) if sp >= 0 and sq >= 0 else None
                if d_in is None:
                    d_in = GroupMap(FpAbGroup.free(0), here, IntMatrix(here.generator_count, 0))
                h = homology_at(d_out, d_in)
                page.homology_check[(p, q)] = h.invariants() == nxt.entries[(p, q)].invariants()
    for page in pages:
        page.sequence = ss
    return pages


@dataclass
class ConvergenceReport:
    degrees: dict  # n -> {"H": Subquotient, "graded": {p: Subquotient}, "E_inf": {p: Subquotient}}
    match: bool
    mismatches: list

    def lines(self) -> list[str]:
        out = []
        for n, d in sorted(self.degrees.items()):
            gr = ", ".join(f"{p}:{d['graded'][p]}" for p in sorted(d["graded"]))
            ei = ", ".join(f"{p}:{d['E_inf'][p]}" for p in sorted(d["E_inf"]))
            out.append(f"H^{n}(Tot) = {d['H']}; graded [{gr}]; E_inf [{ei}]")
        return out


def _total(view, n: int) -> tuple[GroupMap, dict]:
    st = _Stack(view, n, 0, n + 1)
    return st.matrix(), st.offsets()


def check_total_complex(view) -> None:
    """Raise :class:`NotAComplex` with a witness unless ``D D = 0`` on ``Tot^0..Tot^N``."""
    for n in range(1, view.N + 1):
        D, _ = _total(view, n)
        Dprev, _ = _total(view, n - 1)
        for j, col in enumerate(Dprev.matrix.iter_columns()):
            img = D.matrix.apply(col)
            if not D.target.is_zero_element(img):
                raise NotAComplex(f"D^{n} D^{n - 1} != 0", {"degree": n - 1, "generator": j,
                                                             "D(D(e_j))": D.target.reduce(img)})


def convergence_report(pages: list[SpectralPage], view=None) -> ConvergenceReport:
    """Compare ``E_inf`` with the graded pieces of the column filtration on ``H(Tot)``."""
    ss: SpectralSequence = pages[-1].sequence
    view = ss.view if view is None else view
    N = ss.N
    last = pages[-1]
    for p, q in ss.positions():
        if last.r <= max(p, q + 1):
            prev = pages[-2].entries[(p, q)].invariants() if len(pages) > 1 else None
            if prev != last.entries[(p, q)].invariants():
                raise NotStabilized(f"E^{p},{q} still changes at r = {last.r}")
    degrees, mismatches = {}, []
    for n in range(N + 1):
        D, off = _total(view, n)
        Dprev, _ = _total(view, n - 1) if n >= 1 else (None, None)
        if Dprev is not None:
            for j, col in enumerate(Dprev.matrix.iter_columns()):
                img = D.matrix.apply(col)
                if not D.target.is_zero_element(img):
                    raise NotAComplex(f"D^{n} D^{n - 1} != 0", {"degree": n - 1, "generator": j,
                                                                 "D(D(e_j))": D.target.reduce(img)})
        B = list(D.source.relations.iter_columns())
        if Dprev is not None:
            B += list(Dprev.matrix.iter_columns())
        size = D.source.generator_count
        cycles_from = {}
        for p in range(n + 2):
            lo = off.get(p, size)
            cols_idx = list(range(lo, size))
            sub = GroupMap(FpAbGroup.from_orders([D.source.orders[i] for i in cols_idx]), D.target,
                           IntMatrix(D.target.generator_count, len(cols_idx),
                                     [D.matrix.column(i) for i in cols_idx]))
            kl = sub.kernel_lattice()
            lat = Lattice(size)
            for v in kl.basis():
                lat.add({lo + i: x for i, x in v.items()})
            for b in B:
                lat.add(b)
            cycles_from[p] = lat
        H = Subquotient(cycles_from[0], B)
        graded, einf = {}, {}
        for p in range(n + 1):
            graded[p] = Subquotient(cycles_from[p], cycles_from[p + 1].basis())
            einf[p] = last.entries[(p, n - p)]
            if graded[p].invariants() != einf[p].invariants():
                mismatches.append({"degree": n, "p": p, "graded": str(graded[p]), "E_inf": str(einf[p])})
        degrees[n] = {"H": H, "graded": graded, "E_inf": einf}
    return ConvergenceReport(degrees, not mismatches, mismatches)
