"""Exact linear algebra over the integers and finitely presented abelian groups.

Vectors are sparse ``dict[int, int]`` (index -> nonzero entry) throughout;
matrices are stored column-wise as lists of such dicts.  Every lattice is a
sublattice of some ``Z^n`` generated by columns, and every finitely presented
group is ``Z^n / L`` with ``L`` spanned by the relation columns.

The workhorse is :class:`Lattice`, an incremental echelon form in which each
basis vector is identified by its largest nonzero row ("low row").  Inserting
a vector reduces it against existing pivots with extended-gcd steps, so the
stored basis always spans exactly the inserted vectors, and reductions that
end at zero are kernel relations.
"""

from __future__ import annotations

import heapq
from typing import Iterable, Sequence

__all__ = [
    "CompositionNotZero",
    "DimensionMismatch",
    "NotInSubgroup",
    "IntMatrix",
    "Lattice",
    "FpAbGroup",
    "Subquotient",
    "GroupMap",
    "xgcd",
    "smith_normal_form",
    "kernel_basis",
    "kernel_vectors",
    "homology_at",
    "solve_in_group",
    "format_invariants",
    "invariant_factors",
]


class CompositionNotZero(ValueError):
    """Raised when ``d_out o d_in`` is not zero modulo the target relations."""

    def __init__(self, message: str, witness: dict | None = None):
        super().__init__(message)
        self.witness = witness


class DimensionMismatch(ValueError):
    pass


class NotInSubgroup(ValueError):
    """A vector (or a generating set) does not lie in the expected lattice."""


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return ``(g, s, t)`` with ``s*a + t*b == g == gcd(a, b) >= 0``."""
    s, next_s = 1, 0
    t, next_t = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        s, next_s = next_s, s - q * next_s
        t, next_t = next_t, t - q * next_t
        g, next_g = next_g, g - q * next_g
    if g < 0:
        s, t, g = -s, -t, -g
    return g, s, t


# -- sparse vector helpers ---------------------------------------------------

def axpy(y: dict, a: int, x: dict) -> None:
    """In place ``y += a * x``; zero entries are removed."""
    if not a:
        return
    for k, v in x.items():
        w = y.get(k, 0) + a * v
        if w:
            y[k] = w
        else:
            y.pop(k, None)


def lincomb(terms: Iterable[tuple[int, dict]]) -> dict:
    out: dict = {}
    for a, x in terms:
        axpy(out, a, x)
    return out


def to_sparse(vec) -> dict:
    if isinstance(vec, dict):
        return {k: v for k, v in vec.items() if v}
    return {i: int(v) for i, v in enumerate(vec) if v}


def to_dense(vec: dict, n: int) -> list[int]:
    out = [0] * n
    for k, v in vec.items():
        out[k] = v
    return out


# -- matrices ----------------------------------------------------------------

class IntMatrix:
    """Integer matrix with arbitrary-precision entries, stored by columns."""

    __slots__ = ("rows", "cols", "_columns")

    def __init__(self, rows: int, cols: int, columns: Sequence[dict] | None = None):
        self.rows = rows
        self.cols = cols
        if columns is None:
            self._columns = [{} for _ in range(cols)]
        else:
            if len(columns) != cols:
                raise DimensionMismatch(f"expected {cols} columns, got {len(columns)}")
            self._columns = [to_sparse(c) for c in columns]
            for c in self._columns:
                if c and (min(c) < 0 or max(c) >= rows):
                    raise DimensionMismatch("column entry outside row range")

    @classmethod
    def from_rows(cls, data: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        rows = len(data)
        if cols is None:
            cols = len(data[0]) if rows else 0
        columns: list[dict] = [{} for _ in range(cols)]
        for i, row in enumerate(data):
            if len(row) != cols:
                raise DimensionMismatch("ragged rows")
            for j, v in enumerate(row):
                if v:
                    columns[j][i] = int(v)
        m = cls(rows, cols)
        m._columns = columns
        return m

    @classmethod
    def from_columns(cls, rows: int, columns: Sequence) -> "IntMatrix":
        return cls(rows, len(columns), [to_sparse(c) for c in columns])

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        m = cls(n, n)
        m._columns = [{i: 1} for i in range(n)]
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols)

    @property
    def entries(self) -> list[int]:
        """Row-major entry list."""
        return [v for row in self.to_rows() for v in row]

    def to_rows(self) -> list[list[int]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for j, col in enumerate(self._columns):
            for i, v in col.items():
                out[i][j] = v
        return out

    def column(self, j: int) -> dict:
        return dict(self._columns[j])

    def iter_columns(self):
        return iter(self._columns)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self._columns[j].get(i, 0)

    def apply(self, vec) -> dict:
        """Matrix times a (sparse or dense) column vector."""
        vec = to_sparse(vec)
        out: dict = {}
        for j, a in vec.items():
            if j >= self.cols:
                raise DimensionMismatch("vector longer than matrix width")
            axpy(out, a, self._columns[j])
        return out

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"{self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        m = IntMatrix(self.rows, other.cols)
        m._columns = [self.apply(c) for c in other._columns]
        return m

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise DimensionMismatch("shape mismatch in sum")
        m = IntMatrix(self.rows, self.cols)
        m._columns = [lincomb([(1, a), (1, b)]) for a, b in zip(self._columns, other._columns)]
        return m

    def __neg__(self) -> "IntMatrix":
        m = IntMatrix(self.rows, self.cols)
        m._columns = [{k: -v for k, v in c.items()} for c in self._columns]
        return m

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return self + (-other)

    def scaled(self, a: int) -> "IntMatrix":
        m = IntMatrix(self.rows, self.cols)
        m._columns = [{k: a * v for k, v in c.items()} if a else {} for c in self._columns]
        return m

    def transpose(self) -> "IntMatrix":
        m = IntMatrix(self.cols, self.rows)
        for j, col in enumerate(self._columns):
            for i, v in col.items():
                m._columns[i][j] = v
        return m

    def is_zero(self) -> bool:
        return not any(self._columns)

    def nnz(self) -> int:
        return sum(len(c) for c in self._columns)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and self._columns == other._columns

    __hash__ = None  # mutable-ish container semantics

    def __repr__(self) -> str:
        if self.rows * self.cols <= 64:
            return f"IntMatrix({self.to_rows()})"
        return f"IntMatrix<{self.rows}x{self.cols}, nnz={self.nnz()}>"


def block_matrix(row_sizes: Sequence[int], col_sizes: Sequence[int],
                 blocks: dict[tuple[int, int], IntMatrix]) -> IntMatrix:
    """Assemble a block matrix from ``{(block_row, block_col): IntMatrix}``."""
    roff = [0]
    for s in row_sizes:
        roff.append(roff[-1] + s)
    coff = [0]
    for s in col_sizes:
        coff.append(coff[-1] + s)
    m = IntMatrix(roff[-1], coff[-1])
    for (bi, bj), blk in blocks.items():
        if (blk.rows, blk.cols) != (row_sizes[bi], col_sizes[bj]):
            raise DimensionMismatch(f"block {(bi, bj)} has shape {blk.rows}x{blk.cols}")
        r0, c0 = roff[bi], coff[bj]
        for j, col in enumerate(blk.iter_columns()):
            target = m._columns[c0 + j]
            for i, v in col.items():
                target[r0 + i] = target.get(r0 + i, 0) + v
                if not target[r0 + i]:
                    del target[r0 + i]
    return m


# -- lattices ----------------------------------------------------------------

_SIZE_BOUND = 1 << 20  # pivot entries larger than this are size-reduced


def _reduce_step(v: dict, q: int, p: dict, heap: list) -> None:
    """``v -= q * p`` pushing newly created rows onto the max-heap ``heap``."""
    for k, x in p.items():
        w = v.get(k, 0) - q * x
        if w:
            if k not in v:
                heapq.heappush(heap, -k)
            v[k] = w
        else:
            v.pop(k, None)


class Lattice:
    """A sublattice of ``Z^dim`` in low-row echelon form.

    Pivot vectors have pairwise distinct low rows (their largest index), which
    makes membership a triangular back-substitution.  With ``track=True`` every
    pivot remembers its expression in terms of the inserted generators, and
    insertions that reduce to zero return that expression (a syzygy).
    """

    __slots__ = ("dim", "track", "_piv", "_expr", "_ngen")

    def __init__(self, dim: int, generators: Iterable = (), track: bool = False):
        self.dim = dim
        self.track = track
        self._piv: dict[int, dict] = {}
        self._expr: dict[int, dict] = {}
        self._ngen = 0
        for g in generators:
            self.add(g)

    def copy(self) -> "Lattice":
        new = Lattice(self.dim, track=self.track)
        new._piv = {r: dict(v) for r, v in self._piv.items()}
        new._expr = {r: dict(v) for r, v in self._expr.items()}
        new._ngen = self._ngen
        return new

    def add(self, vec, expr: dict | None = None) -> dict | None:
        """Insert a generator.

        Returns the syzygy (a dict over generator indices) when the vector was
        already in the span and tracking is on; ``None`` otherwise.
        """
        v = to_sparse(vec)
        if self.track:
            e = {self._ngen: 1} if expr is None else dict(expr)
        else:
            e = None
        self._ngen += 1
        piv = self._piv
        # pending rows, largest first; stale and duplicate keys are skipped
        heap = [-k for k in v]
        heapq.heapify(heap)
        while heap:
            r = -heapq.heappop(heap)
            a = v.get(r)
            if not a:
                continue
            p = piv.get(r)
            if p is None:
                if a < 0:
                    v = {k: -x for k, x in v.items()}
                    if e is not None:
                        e = {k: -x for k, x in e.items()}
                piv[r] = self._size_reduce(v, e, r)
                if e is not None:
                    self._expr[r] = e
                return None
            b = p[r]
            if a % b == 0:
                q = a // b
                _reduce_step(v, q, p, heap)
                if e is not None:
                    axpy(e, -q, self._expr[r])
            else:
                g, s, t = xgcd(b, a)
                # new pivot s*p + t*v has entry g; (b/g)*v - (a/g)*p has entry 0
                newp = lincomb([(s, p), (t, v)])
                v = lincomb([(b // g, v), (-(a // g), p)])
                for k in p:
                    heapq.heappush(heap, -k)
                if e is not None:
                    pe = self._expr[r]
                    newe = lincomb([(s, pe), (t, e)])
                    e = lincomb([(b // g, e), (-(a // g), pe)])
                else:
                    newe = None
                piv[r] = self._size_reduce(newp, newe, r)
                if newe is not None:
                    self._expr[r] = newe
        return e

    def _size_reduce(self, v: dict, e: dict | None, r: int) -> dict:
        """Reduce the entries of pivot ``v`` below its row ``r`` modulo lower pivots.

        Only entries above ``_SIZE_BOUND`` in absolute value are touched, which
        stops the coefficient growth repeated gcd steps otherwise cause without
        densifying pivots by a full reduction.
        """
        piv = self._piv
        heap = [-k for k, x in v.items() if k < r and abs(x) > _SIZE_BOUND]
        heapq.heapify(heap)
        while heap:
            k = -heapq.heappop(heap)
            a = v.get(k)
            p = piv.get(k)
            if not a or p is None or abs(a) <= _SIZE_BOUND:
                continue
            q = a // p[k]
            if q:
                _reduce_step(v, q, p, heap)
                if e is not None:
                    axpy(e, -q, self._expr[k])
        return v

    def add_all(self, vecs: Iterable) -> list[dict]:
        """Insert many generators; returns the syzygies produced (tracking mode)."""
        syz = []
        for v in vecs:
            s = self.add(v)
            if self.track and s is not None and s:
                syz.append(s)
        return syz

    @property
    def rank(self) -> int:
        return len(self._piv)

    def pivot_rows(self) -> list[int]:
        return sorted(self._piv)

    def basis(self) -> list[dict]:
        return [self._piv[r] for r in sorted(self._piv)]

    def pivot_expression(self, r: int) -> dict:
        return self._expr[r]

    def solve(self, vec) -> dict | None:
        """Coefficients (keyed by pivot row) expressing ``vec``, or ``None``."""
        v = to_sparse(vec)
        coeffs: dict = {}
        piv = self._piv
        heap = [-k for k in v]
        heapq.heapify(heap)
        while heap:
            r = -heapq.heappop(heap)
            a = v.get(r)
            if not a:
                continue
            p = piv.get(r)
            if p is None:
                return None
            q, rem = divmod(a, p[r])
            if rem:
                return None
            _reduce_step(v, q, p, heap)
            coeffs[r] = q
        return coeffs

    def express(self, vec) -> dict | None:
        """Coefficients over the inserted generators (requires tracking)."""
        if not self.track:
            raise ValueError("lattice built without tracking")
        c = self.solve(vec)
        if c is None:
            return None
        return lincomb((q, self._expr[r]) for r, q in c.items())

    def contains(self, vec) -> bool:
        return self.solve(vec) is not None

    def __contains__(self, vec) -> bool:
        return self.contains(vec)

    def reduce(self, vec) -> dict:
        """Canonical residue of ``vec`` modulo the lattice."""
        v = to_sparse(vec)
        out: dict = {}
        piv = self._piv
        heap = [-k for k in v]
        heapq.heapify(heap)
        while heap:
            r = -heapq.heappop(heap)
            a = v.get(r)
            if not a:
                continue
            p = piv.get(r)
            if p is not None:
                q = a // p[r]
                if q:
                    _reduce_step(v, q, p, heap)
            if r in v:
                out[r] = v.pop(r)
        return out

    def hermite_basis(self) -> list[dict]:
        """Canonical basis: positive pivots, entries at pivot rows reduced."""
        basis = {r: dict(v) for r, v in self._piv.items()}
        rows = sorted(basis, reverse=True)
        for r in rows:
            p = basis[r]
            for r2 in rows:
                if r2 <= r:
                    continue
                w = basis[r2]
                a = w.get(r, 0)
                if a:
                    q = a // p[r]
                    if q:
                        axpy(w, -q, p)
        return [basis[r] for r in sorted(basis)]

    def issubset(self, other: "Lattice") -> bool:
        return all(other.contains(v) for v in self._piv.values())

    def same_as(self, other: "Lattice") -> bool:
        return self.rank == other.rank and self.issubset(other) and other.issubset(self)


def kernel_vectors(columns: Sequence[dict], nrows: int | None = None) -> list[dict]:
    """Lattice basis of ``{x : sum_j x_j col_j = 0}`` as sparse vectors."""
    lat = Lattice(nrows or 0, track=True)
    out = []
    for j, c in enumerate(columns):
        syz = lat.add(c, expr={j: 1})
        if syz:
            out.append(syz)
    return out


def kernel_basis(M: IntMatrix) -> IntMatrix:
    """Columns generating ``{x : Mx = 0}``, returned in canonical Hermite form."""
    vecs = kernel_vectors(list(M.iter_columns()), M.rows)
    lat = Lattice(M.cols, vecs)
    return IntMatrix.from_columns(M.cols, lat.hermite_basis())


# -- Smith normal form (dense) -----------------------------------------------

def _snf_dense(A: list[list[int]], m: int, n: int, want_transforms: bool = True):
    """Dense SNF with transforms; returns (A, U, Uinv, W) with U*A0*W = A."""
    A = [row[:] for row in A]
    U = [[int(i == j) for j in range(m)] for i in range(m)] if want_transforms else None
    Uinv = [[int(i == j) for j in range(m)] for i in range(m)] if want_transforms else None
    W = [[int(i == j) for j in range(n)] for i in range(n)] if want_transforms else None

    def row_add(dst, src, q):  # row_dst += q * row_src
        Ad, As = A[dst], A[src]
        for k in range(n):
            if As[k]:
                Ad[k] += q * As[k]
        if U is not None:
            Ud, Us = U[dst], U[src]
            for k in range(m):
                if Us[k]:
                    Ud[k] += q * Us[k]
            # inverse: column_src -= q * column_dst
            for row in Uinv:
                if row[dst]:
                    row[src] -= q * row[dst]

    def row_swap(i, j):
        A[i], A[j] = A[j], A[i]
        if U is not None:
            U[i], U[j] = U[j], U[i]
            for row in Uinv:
                row[i], row[j] = row[j], row[i]

    def row_neg(i):
        A[i] = [-x for x in A[i]]
        if U is not None:
            U[i] = [-x for x in U[i]]
            for row in Uinv:
                row[i] = -row[i]

    def col_add(dst, src, q):  # col_dst += q * col_src
        for row in A:
            if row[src]:
                row[dst] += q * row[src]
        if W is not None:
            for row in W:
                if row[src]:
                    row[dst] += q * row[src]

    def col_swap(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        if W is not None:
            for row in W:
                row[i], row[j] = row[j], row[i]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            Ai = A[i]
            for j in range(t, n):
                x = Ai[j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        if i != t:
            row_swap(i, t)
        if j != t:
            col_swap(j, t)
        while True:
            p = A[t][t]
            for i in range(t + 1, m):
                if A[i][t]:
                    row_add(i, t, -(A[i][t] // p))
            for j in range(t + 1, n):
                if A[t][j]:
                    col_add(j, t, -(A[t][j] // p))
            # any remaining nonzero in the pivot row/column is smaller than |p|
            cand = None
            for i in range(t + 1, m):
                if A[i][t] and (cand is None or abs(A[i][t]) < cand[0]):
                    cand = (abs(A[i][t]), "r", i)
            for j in range(t + 1, n):
                if A[t][j] and (cand is None or abs(A[t][j]) < cand[0]):
                    cand = (abs(A[t][j]), "c", j)
            if cand is not None:
                if cand[1] == "r":
                    row_swap(cand[2], t)
                else:
                    col_swap(cand[2], t)
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_add(t, bad, 1)
        if A[t][t] < 0:
            row_neg(t)
        t += 1
    return A, U, Uinv, W


def smith_normal_form(M: IntMatrix) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Return ``(S, U, W)`` with ``S == U @ M @ W`` diagonal, ``d_i | d_{i+1}``."""
    A, U, _, W = _snf_dense(M.to_rows(), M.rows, M.cols)
    return (IntMatrix.from_rows(A, M.cols), IntMatrix.from_rows(U, M.rows),
            IntMatrix.from_rows(W, M.cols))


# -- presentations -----------------------------------------------------------

def format_invariants(torsion: Sequence[int], free: int) -> str:
    parts = [f"Z/{d}" for d in torsion]
    if free == 1:
        parts.append("Z")
    elif free > 1:
        parts.append(f"Z^{free}")
    return "+".join(parts) if parts else "0"


def _prime_powers(n: int) -> list[tuple[int, int]]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 1
            while n % p == 0:
                n //= p
                e *= p
            out.append((p, e))
        p += 1
    if n > 1:
        out.append((n, n))
    return out


def invariant_factors(orders: Iterable[int]) -> tuple[int, ...]:
    """Normalize cyclic orders (``> 1``) into a divisibility chain."""
    powers: dict[int, list[int]] = {}
    cache: dict[int, list] = {}
    for o in orders:
        if o > 1:
            if o not in cache:
                cache[o] = _prime_powers(o)
            for p, e in cache[o]:
                powers.setdefault(p, []).append(e)
    length = max((len(v) for v in powers.values()), default=0)
    out = [1] * length
    for es in powers.values():
        es.sort()
        for k, e in enumerate(es):
            out[length - len(es) + k] *= e
    return tuple(out)


class _Presentation:
    """Simplified presentation of ``Z^m / span(relation columns)``.

    Pivots dividing every entry of their row and column are eliminated
    sparsely: each one splits off a cyclic summand (trivial for units) and
    rewrites one generator.  What is left goes through dense SNF.  Keeps the
    bookkeeping to map coordinates forward and to produce representatives.
    """

    def __init__(self, m: int, relations: Sequence[dict]):
        self.m = m
        cols = [dict(c) for c in relations if c]
        row_index: dict[int, set] = {}
        for j, c in enumerate(cols):
            for i in c:
                row_index.setdefault(i, set()).add(j)
        alive = set(j for j, c in enumerate(cols) if c)
        subs: list[tuple[int, dict, int]] = []
        removed_rows: set[int] = set()

        def divides_all(i, j, u):
            if any(v % u for v in cols[j].values()):
                return False
            return all(cols[l][i] % u == 0 for l in row_index[i])

        def column_pivot(j):
            c = cols[j]
            lc = len(c)
            best = None
            for i, v in c.items():
                a = abs(v)
                if best is not None and a > best[0]:
                    continue
                cost = (lc - 1) * (len(row_index[i]) - 1)
                if best is not None and a == best[0] and cost >= best[1]:
                    continue
                if a == 1 or divides_all(i, j, a):
                    best = (a, cost, i)
            return best

        def eliminate(i, j):
            c = cols[j]
            u = c[i]
            # clear row i with column operations
            for l in list(row_index[i]):
                if l == j:
                    continue
                cl = cols[l]
                q = -(cl[i] // u)
                for k, v in c.items():
                    w = cl.get(k, 0) + q * v
                    if w:
                        if k not in cl:
                            row_index.setdefault(k, set()).add(l)
                        cl[k] = w
                    else:
                        if k in cl:
                            del cl[k]
                            row_index[k].discard(l)
                if not cl:
                    alive.discard(l)
            # generator i becomes e_i + sum (c_k / u) e_k, of order |u|
            rest = {k: v // u for k, v in c.items() if k != i}
            subs.append((i, rest, abs(u)))
            for k in c:
                row_index[k].discard(j)
            alive.discard(j)
            removed_rows.add(i)
            del row_index[i]

        # greedy sweeps: units first, then divisible pivots
        for units_only in (True, False):
            progress = True
            while progress and alive:
                progress = False
                for j in sorted(alive, key=lambda j: len(cols[j])):
                    if j not in alive:
                        continue
                    found = column_pivot(j)
                    if found is None or (units_only and found[0] != 1):
                        continue
                    eliminate(found[2], j)
                    progress = True

        self.subs = subs
        self.sub_position = {i: n for n, (i, _, _) in enumerate(subs)}
        self.removed = removed_rows
        remaining_cols = [cols[j] for j in sorted(alive) if cols[j]]
        touched = sorted({i for c in remaining_cols for i in c})
        self.touched = touched
        touched_set = set(touched)
        self.untouched = [i for i in range(m) if i not in removed_rows and i not in touched_set]
        tpos = {r: k for k, r in enumerate(touched)}
        if touched:
            dense = [[0] * len(remaining_cols) for _ in touched]
            for j, c in enumerate(remaining_cols):
                for i, v in c.items():
                    dense[tpos[i]][j] = v
            A, U, Uinv, _ = _snf_dense(dense, len(touched), len(remaining_cols))
            diag = [A[k][k] if k < len(remaining_cols) else 0 for k in range(len(touched))]
        else:
            U = Uinv = []
            diag = []
        self.U = U
        self.Uinv = Uinv
        self.touched_pos = tpos
        self.U_columns = [{a: U[a][k] for a in range(len(U)) if U[a][k]} for k in range(len(touched))]
        self.diag = diag
        # output generators: torsion (ascending order), then free
        slots = [(o, ("s", n)) for n, (_, _, o) in enumerate(subs) if o > 1]
        slots += [(d, ("t", k)) for k, d in enumerate(diag) if d > 1]
        slots.sort(key=lambda s: s[0])
        self.torsion_slots = [s for _, s in slots]
        self._torsion = tuple(o for o, _ in slots)
        self.free_slots = [("t", k) for k, d in enumerate(diag) if d == 0]
        self.free_slots += [("u", r) for r in self.untouched]

    @property
    def torsion(self) -> tuple[int, ...]:
        """Orders of the torsion generators (not necessarily a divisibility chain)."""
        return self._torsion

    @property
    def free_rank(self) -> int:
        return len(self.free_slots)

    def forward(self, y: dict) -> list[int]:
        """Map coordinates over ``Z^m`` to coordinates on the cyclic generators."""
        y = dict(y)
        sub_vals = {}
        # a substitution only mentions rows eliminated after it, so visiting
        # the rows present in y in elimination order suffices
        pos = self.sub_position
        heap = [pos[r] for r in y if r in pos]
        heapq.heapify(heap)
        while heap:
            n = heapq.heappop(heap)
            i, rest, o = self.subs[n]
            yi = y.pop(i, 0)
            if yi:
                for k, x in rest.items():
                    w = y.get(k, 0) - yi * x
                    if w:
                        if k not in y and k in pos:
                            heapq.heappush(heap, pos[k])
                        y[k] = w
                    else:
                        y.pop(k, None)
                if o > 1:
                    sub_vals[n] = yi
        z = []
        if self.touched:
            z = [0] * len(self.touched)
            for r, v in y.items():
                k = self.touched_pos.get(r)
                if k is not None:
                    for a, u in self.U_columns[k].items():
                        z[a] += u * v
        out = []
        for (kind, k), o in zip(self.torsion_slots, self._torsion):
            val = sub_vals.get(k, 0) if kind == "s" else z[k]
            out.append(val % o)
        for kind, k in self.free_slots:
            out.append(z[k] if kind == "t" else y.get(k, 0))
        return out

    def generator(self, idx: int) -> dict:
        """Coordinates over ``Z^m`` of the ``idx``-th cyclic generator."""
        nt = len(self.torsion_slots)
        if idx < nt:
            kind, k = self.torsion_slots[idx]
            if kind == "s":
                i, rest, _ = self.subs[k]
                g = dict(rest)
                g[i] = 1
                return g
        else:
            kind, k = self.free_slots[idx - nt]
            if kind == "u":
                return {k: 1}
        return {self.touched[i]: self.Uinv[i][k] for i in range(len(self.touched)) if self.Uinv[i][k]}


class FpAbGroup:
    """Finitely presented abelian group ``Z^generator_count / span(relations)``.

    Two groups compare equal iff their invariant factors agree.
    """

    def __init__(self, generator_count: int, relations: IntMatrix | None = None):
        if relations is None:
            relations = IntMatrix(generator_count, 0)
        if relations.rows != generator_count:
            raise DimensionMismatch("relations must have generator_count rows")
        self.generator_count = generator_count
        self.relations = relations
        self._orders = self._diagonal_orders()
        self._invariants = None
        self._rel_lattice = None

    @classmethod
    def from_orders(cls, orders: Sequence[int]) -> "FpAbGroup":
        """Direct sum of cyclic groups ``Z/o`` (``o == 0`` meaning ``Z``)."""
        n = len(orders)
        cols = [{i: o} for i, o in enumerate(orders) if o]
        return cls(n, IntMatrix(n, len(cols), cols))

    @classmethod
    def from_invariants(cls, torsion: Sequence[int], free: int) -> "FpAbGroup":
        return cls.from_orders(list(torsion) + [0] * free)

    @classmethod
    def free(cls, n: int) -> "FpAbGroup":
        return cls(n)

    def _diagonal_orders(self):
        orders = [0] * self.generator_count
        seen = set()
        for c in self.relations.iter_columns():
            if not c:
                continue
            if len(c) != 1:
                return None
            (i, v), = c.items()
            if i in seen:
                return None
            seen.add(i)
            orders[i] = abs(v)
        return tuple(orders)

    @property
    def orders(self) -> tuple[int, ...] | None:
        """Per-generator orders when the presentation is diagonal, else None."""
        return self._orders

    def relation_lattice(self) -> Lattice:
        if self._rel_lattice is None:
            self._rel_lattice = Lattice(self.generator_count, self.relations.iter_columns())
        return self._rel_lattice

    def reduce(self, vec) -> dict:
        """Canonical representative of an element."""
        v = to_sparse(vec)
        if self._orders is not None:
            out = {}
            for k, x in v.items():
                o = self._orders[k]
                if o:
                    x %= o
                if x:
                    out[k] = x
            return out
        return self.relation_lattice().reduce(v)

    def is_zero_element(self, vec) -> bool:
        v = to_sparse(vec)
        if self._orders is not None:
            return all(self._orders[k] and x % self._orders[k] == 0 for k, x in v.items())
        return self.relation_lattice().contains(v)

    def invariants(self) -> tuple[tuple[int, ...], int]:
        """``(torsion invariant factors ascending, free rank)``."""
        if self._invariants is None:
            if self._orders is not None:
                free = sum(1 for o in self._orders if o == 0)
                self._invariants = (invariant_factors(self._orders), free)
            else:
                pres = _Presentation(self.generator_count, list(self.relations.iter_columns()))
                self._invariants = (invariant_factors(pres.torsion), pres.free_rank)
        return self._invariants

    @property
    def cached_invariants(self):
        return self._invariants

    def is_trivial(self) -> bool:
        t, f = self.invariants()
        return not t and not f

    def order(self) -> int | None:
        t, f = self.invariants()
        if f:
            return None
        out = 1
        for d in t:
            out *= d
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, FpAbGroup):
            return NotImplemented
        return self.invariants() == other.invariants()

    def __hash__(self) -> int:
        return hash(self.invariants())

    def __str__(self) -> str:
        return format_invariants(*self.invariants())

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self})"

    def direct_sum(self, other: "FpAbGroup") -> "FpAbGroup":
        n = self.generator_count + other.generator_count
        cols = list(self.relations.iter_columns())
        cols += [{i + self.generator_count: v for i, v in c.items()} for c in other.relations.iter_columns()]
        return FpAbGroup(n, IntMatrix(n, len(cols), cols))


class Subquotient(FpAbGroup):
    """``N / D`` for lattices ``D <= N <= Z^dim``, in invariant-factor form.

    ``numerator`` is a :class:`Lattice` (its pivot vectors serve as basis);
    ``denominator`` is any generating set.  The group itself is presented on
    cyclic generators (torsion ascending, then free), and the object keeps the
    maps needed to pass between ambient vectors and those coordinates.
    """

    def __init__(self, numerator: Lattice, denominator: Iterable):
        self.numerator = numerator
        self.dim = numerator.dim
        self._rows = numerator.pivot_rows()
        self._rowpos = {r: k for k, r in enumerate(self._rows)}
        rels = []
        for b in denominator:
            c = numerator.solve(b)
            if c is None:
                raise NotInSubgroup("denominator generator outside numerator lattice")
            if c:
                rels.append({self._rowpos[r]: q for r, q in c.items()})
        self._pres = _Presentation(len(self._rows), rels)
        orders = list(self._pres.torsion) + [0] * self._pres.free_rank
        n = len(orders)
        cols = [{i: o} for i, o in enumerate(orders) if o]
        super().__init__(n, IntMatrix(n, len(cols), cols))
        self._invariants = (invariant_factors(self._pres.torsion), self._pres.free_rank)
        self._reps = None

    def coordinates(self, vec) -> list[int]:
        """Coordinates of an ambient vector of the numerator lattice."""
        c = self.numerator.solve(vec)
        if c is None:
            raise NotInSubgroup("vector outside numerator lattice")
        y = {self._rowpos[r]: q for r, q in c.items()}
        return self._pres.forward(y)

    def contains(self, vec) -> bool:
        return self.numerator.contains(vec)

    def basis_coefficients(self, idx: int) -> dict:
        """Generator ``idx`` as coefficients over the numerator pivot rows."""
        g = self._pres.generator(idx)
        return {self._rows[k]: v for k, v in g.items()}

    def representative(self, idx: int) -> dict:
        """An ambient vector representing cyclic generator ``idx``."""
        piv = self.numerator._piv
        return lincomb((v, piv[r]) for r, v in self.basis_coefficients(idx).items())

    def representatives(self) -> list[dict]:
        if self._reps is None:
            self._reps = [self.representative(i) for i in range(self.generator_count)]
        return self._reps

    def is_zero_class(self, vec) -> bool:
        return self.is_zero_element(self.coordinates(vec))


# -- group maps --------------------------------------------------------------

class GroupMap:
    """Homomorphism between presented groups given on generators."""

    def __init__(self, source: FpAbGroup, target: FpAbGroup, matrix: IntMatrix, check: bool = False):
        if matrix.rows != target.generator_count or matrix.cols != source.generator_count:
            raise DimensionMismatch(
                f"matrix {matrix.rows}x{matrix.cols} vs {source.generator_count} -> {target.generator_count}")
        self.source = source
        self.target = target
        self.matrix = matrix
        if check and not self.is_well_defined():
            raise ValueError("matrix does not respect source relations")

    def __call__(self, vec) -> dict:
        return self.target.reduce(self.matrix.apply(vec))

    def is_well_defined(self) -> bool:
        return all(self.target.is_zero_element(self.matrix.apply(c))
                   for c in self.source.relations.iter_columns())

    def compose(self, inner: "GroupMap") -> "GroupMap":
        """``self o inner``."""
        return GroupMap(inner.source, self.target, self.matrix @ inner.matrix)

    def is_zero(self) -> bool:
        return all(self.target.is_zero_element(c) for c in self.matrix.iter_columns())

    def _image_lattice(self, track: bool) -> Lattice:
        lat = Lattice(self.target.generator_count, track=track)
        for j, c in enumerate(self.matrix.iter_columns()):
            lat.add(c, expr={j: 1} if track else None)
        off = self.source.generator_count
        for k, c in enumerate(self.target.relations.iter_columns()):
            lat.add(c, expr={off + k: 1} if track else None)
        return lat

    def solve(self, target_elt) -> list[int] | None:
        """``x`` with ``f(x) == target_elt`` in the target group, or ``None``."""
        b = to_sparse(target_elt)
        if b and max(b) >= self.target.generator_count:
            raise DimensionMismatch("target element has too many entries")
        if not isinstance(target_elt, dict) and len(target_elt) != self.target.generator_count:
            raise DimensionMismatch("target element has wrong length")
        lat = self._image_lattice(track=True)
        e = lat.express(b)
        if e is None:
            return None
        n = self.source.generator_count
        x = [0] * n
        for k, v in e.items():
            if k < n:
                x[k] = v
        return x

    def kernel_lattice(self) -> Lattice:
        """Preimage of the target relation lattice, as a lattice in ``Z^source``."""
        cols = list(self.matrix.iter_columns()) + list(self.target.relations.iter_columns())
        n = self.source.generator_count
        lat = Lattice(n)
        for syz in kernel_vectors(cols, self.target.generator_count):
            lat.add({k: v for k, v in syz.items() if k < n})
        for c in self.source.relations.iter_columns():
            lat.add(c)
        return lat

    def kernel(self) -> Subquotient:
        return Subquotient(self.kernel_lattice(), self.source.relations.iter_columns())

    def is_injective(self) -> bool:
        return self.kernel().is_trivial()

    def is_surjective(self) -> bool:
        lat = self._image_lattice(track=False)
        return all(lat.contains({i: 1}) for i in range(self.target.generator_count))

    def inverse(self) -> "GroupMap | None":
        """Two-sided inverse built by solving target generators, if one exists."""
        cols = []
        for i in range(self.target.generator_count):
            x = self.solve({i: 1} if self.target.generator_count else [])
            if x is None:
                return None
            cols.append(to_sparse(x))
        g = GroupMap(self.target, self.source, IntMatrix(self.source.generator_count,
                                                          self.target.generator_count, cols))
        if not g.is_well_defined():
            return None
        for j in range(self.source.generator_count):
            back = g.matrix.apply(self.matrix.apply({j: 1}))
            axpy(back, -1, {j: 1})
            if not self.source.is_zero_element(back):
                return None
        return g

    def is_bijective(self) -> bool:
        return self.inverse() is not None


def solve_in_group(f: GroupMap, target_elt) -> list[int] | None:
    return f.solve(target_elt)


def homology_at(d_out: GroupMap, d_in: GroupMap) -> Subquotient:
    """``ker(d_out) / im(d_in)`` at the common group ``C``.

    The returned :class:`Subquotient` lives in ``Z^{gens(C)}``: its
    representatives are cycles and :meth:`Subquotient.coordinates` maps a
    cycle to its class.
    """
    C = d_out.source
    if d_in.target.generator_count != C.generator_count:
        raise DimensionMismatch("d_in does not land in the source of d_out")
    for j, c in enumerate(d_in.matrix.iter_columns()):
        val = d_out.matrix.apply(c)
        if not d_out.target.is_zero_element(val):
            raise CompositionNotZero(f"d_out o d_in is nonzero on generator {j}",
                                     {"generator": j, "value": d_out.target.reduce(val)})
    cycles = d_out.kernel_lattice()
    denominator = list(C.relations.iter_columns()) + list(d_in.matrix.iter_columns())
    return Subquotient(cycles, denominator)


def zero_map(source: FpAbGroup, target: FpAbGroup) -> GroupMap:
    return GroupMap(source, target, IntMatrix(target.generator_count, source.generator_count))


def induced_map(f: GroupMap, source_h: Subquotient, target_h: Subquotient) -> GroupMap:
    """Map on homology induced by a chain map ``f`` (given on chain groups)."""
    cols = []
    for k in range(source_h.generator_count):
        img = f.matrix.apply(source_h.representative(k))
        cols.append(to_sparse(target_h.coordinates(img)))
    return GroupMap(source_h, target_h,
                    IntMatrix(target_h.generator_count, source_h.generator_count, cols))


def matrix_identity_defect(m: GroupMap) -> tuple[int, dict] | None:
    """First generator ``j`` with ``m(e_j) != e_j`` (for endomorphisms), or None."""
    for j, col in enumerate(m.matrix.iter_columns()):
        diff = dict(col)
        axpy(diff, -1, {j: 1})
        if not m.target.is_zero_element(diff):
            return j, m.target.reduce(diff)
    return None
