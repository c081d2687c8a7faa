"""Line-oriented model files describing ``(G, X, V, coverings, bounds)``.

Grammar (``#`` starts a comment, names are identifiers)::

    [space]
    points a b c t
    a < t                 # chains like ``a < b < c`` are allowed
    [group]               # optional; absent means the trivial group
    cyclic s 2            # cyclic group on generator s (elements e, s, s2, ...)
    gen s = (a b)         # or: permutation group generated by gen lines
    elements e s          # or: explicit elements with
    table e = e s         #     one multiplication row per element
    perm s = (a b)(c d)   # point permutation of an element (default: identity)
    [module]
    factors 0 2           # V = Z + Z/2  (0 stands for Z)
    action s = 1 0; 0 1   # integer rows; given for generators, rest by products
    [covering NAME]
    U1 = a c t            # member name optional
    [bounds]
    N = 3
    r_max = 5
    seed = 0
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .cochain import GModule
from .finspace import (ActionSpec, Covering, FiniteSpace, GroupAction,
                       NotAGroup, NotHomomorphism, NotOrderAutomorphism,
                       validate_action)

__all__ = ["ModelError", "ParseError", "ValidationError", "Model", "parse_model", "load_model"]

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")
_SECTIONS = ("space", "group", "module", "covering", "bounds")


class ModelError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ParseError(ModelError):
    pass


class ValidationError(ModelError):
    pass


@dataclass
class Model:
    name: str
    space: FiniteSpace
    action: GroupAction
    module: GModule
    coverings: dict = field(default_factory=dict)
    N: int = 3
    r_max: int | None = None
    seed: int = 0

    def covering(self, name: str | None) -> Covering | None:
        """``None``/``minimal`` -> minimal cover (returned as None), ``trivial`` or a named block."""
        from .finspace import trivial_cover
        if name is None or name == "minimal":
            return None
        if name == "trivial":
            return trivial_cover(self.space)
        if name not in self.coverings:
            raise KeyError(name)
        return self.coverings[name]


def _name(tok: str, line: int) -> str:
    if not _NAME.match(tok):
        raise ParseError(line, f"bad name {tok!r}")
    return tok


def _int(tok: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(line, f"expected an integer, got {tok!r}") from None


def _cycles(text: str, index: dict, line: int) -> list[int]:
    """Permutation of point indices from cycle notation; ``()`` or ``id`` is the identity."""
    perm = list(range(len(index)))
    text = text.strip()
    if text in ("", "id", "()"):
        return perm
    if not re.fullmatch(r"(\([^()]*\)\s*)+", text):
        raise ParseError(line, f"bad cycle notation {text!r}")
    seen: set = set()
    for cyc in re.findall(r"\(([^()]*)\)", text):
        pts = cyc.split()
        for p in pts:
            if p not in index:
                raise ValidationError(line, f"unknown point {p!r}")
            if p in seen:
                raise ValidationError(line, f"point {p!r} appears twice")
            seen.add(p)
        for a, b in zip(pts, pts[1:] + pts[:1]):
            perm[index[a]] = index[b]
    return perm


def _matrix(text: str, line: int) -> list[list[int]]:
    rows = [r.split() for r in text.split(";")]
    if not rows or any(not r for r in rows):
        raise ParseError(line, "empty matrix row")
    out = [[_int(x, line) for x in r] for r in rows]
    return out


def _split_sections(text: str):
    sections = []
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[\s*([A-Za-z_]+)(?:\s+([^\]]*?))?\s*\]", line)
        if m:
            kind, arg = m.group(1), m.group(2)
            if kind not in _SECTIONS:
                raise ParseError(no, f"unknown section [{kind}]")
            if kind == "covering":
                if not arg:
                    raise ParseError(no, "covering section needs a name")
                _name(arg, no)
            elif arg:
                raise ParseError(no, f"section [{kind}] takes no argument")
            current = (kind, arg, no, [])
            sections.append(current)
            continue
        if line.startswith("["):
            raise ParseError(no, f"malformed section header {line!r}")
        if current is None:
            raise ParseError(no, "statement outside any section")
        current[3].append((no, line))
    return sections


def _parse_space(body, header_line):
    labels: list[str] = []
    rels: list[tuple[str, str, int]] = []
    for no, line in body:
        toks = line.split()
        if toks[0] == "points":
            if labels:
                raise ParseError(no, "points declared twice")
            labels = [_name(t, no) for t in toks[1:]]
            if not labels:
                raise ValidationError(no, "space has no points")
            if len(set(labels)) != len(labels):
                raise ValidationError(no, "duplicate point names")
        elif "<" in line:
            chain = [t.strip() for t in line.replace("<=", "<").split("<")]
            if len(chain) < 2 or any(not c for c in chain):
                raise ParseError(no, "bad order relation")
            for a, b in zip(chain, chain[1:]):
                rels.append((_name(a, no), _name(b, no), no))
        else:
            raise ParseError(no, f"unknown statement in [space]: {toks[0]!r}")
    if not labels:
        raise ValidationError(header_line, "[space] needs a points line")
    known = set(labels)
    for a, b, no in rels:
        for p in (a, b):
            if p not in known:
                raise ValidationError(no, f"unknown point {p!r}")
    return FiniteSpace.from_relations(labels, [(a, b) for a, b, _ in rels])


def _closure(gens: dict, n_points: int):
    """Permutation group generated by ``gens``; element names are shortest words."""
    ident = tuple(range(n_points))
    names = ["e"]
    perms = [ident]
    where = {ident: 0}
    frontier = [0]
    gen_items = sorted(gens.items())
    while frontier:
        nxt = []
        for k in frontier:
            for gname, gp in gen_items:
                comp = tuple(gp[perms[k][x]] for x in range(n_points))
                if comp not in where:
                    where[comp] = len(perms)
                    word = gname if names[k] == "e" else f"{gname}*{names[k]}"
                    names.append(word)
                    perms.append(comp)
                    nxt.append(where[comp])
        frontier = nxt
    table = [[where[tuple(perms[a][perms[b][x]] for x in range(n_points))] for b in range(len(perms))]
             for a in range(len(perms))]
    return names, table, [list(p) for p in perms]


def _parse_group(body, header_line, X: FiniteSpace):
    index = {lab: i for i, lab in enumerate(X.labels)}
    n = X.point_count
    elements = None
    table_rows: dict = {}
    perms: dict = {}
    gens: dict = {}
    cyclic = None
    for no, line in body:
        toks = line.split()
        head = toks[0]
        if head == "elements":
            elements = [_name(t, no) for t in toks[1:]]
            if not elements or len(set(elements)) != len(elements):
                raise ValidationError(no, "elements must be distinct and nonempty")
        elif head == "cyclic":
            if len(toks) != 3:
                raise ParseError(no, "expected: cyclic NAME ORDER")
            order = _int(toks[2], no)
            if order < 1:
                raise ValidationError(no, "cyclic order must be positive")
            cyclic = (_name(toks[1], no), order, no)
        elif head in ("table", "perm", "gen"):
            if "=" not in line:
                raise ParseError(no, f"expected: {head} NAME = ...")
            lhs, rhs = line.split("=", 1)
            parts = lhs.split()
            if len(parts) != 2:
                raise ParseError(no, f"expected: {head} NAME = ...")
            nm = _name(parts[1], no)
            if head == "table":
                table_rows[nm] = ([_name(t, no) for t in rhs.split()], no)
            elif head == "perm":
                perms[nm] = (_cycles(rhs, index, no), no)
            else:
                gens[nm] = _cycles(rhs, index, no)
        else:
            raise ParseError(no, f"unknown statement in [group]: {head!r}")
    if (elements is not None) + (cyclic is not None) + bool(gens) != 1:
        raise ValidationError(header_line, "[group] needs exactly one of: elements+table, cyclic, gen")
    if gens:
        if perms or table_rows:
            raise ValidationError(header_line, "gen lines cannot be mixed with perm/table")
        names, table, plist = _closure(gens, n)
        return ActionSpec(names, table, plist)
    if cyclic is not None:
        g, order, no = cyclic
        names = ["e"] + [g if k == 1 else f"{g}{k}" for k in range(1, order)]
        table = [[(a + b) % order for b in range(order)] for a in range(order)]
        for nm, (_, pno) in perms.items():
            if nm != g:
                raise ValidationError(pno, f"give the permutation of the generator {g!r} only")
        gp = perms.get(g, (list(range(n)), no))[0]
        plist = [list(range(n))]
        for _ in range(1, order):
            plist.append([gp[x] for x in plist[-1]])
        if table_rows:
            raise ValidationError(no, "table lines are not used with cyclic")
        return ActionSpec(names, table, plist)
    pos = {nm: k for k, nm in enumerate(elements)}
    table = []
    for nm in elements:
        if nm not in table_rows:
            raise ValidationError(header_line, f"missing table row for {nm!r}")
        row, no = table_rows[nm]
        if len(row) != len(elements):
            raise ValidationError(no, f"table row for {nm!r} has wrong length")
        for t in row:
            if t not in pos:
                raise ValidationError(no, f"unknown element {t!r}")
        table.append([pos[t] for t in row])
    for nm, (_, no) in list(table_rows.items()) + list(perms.items()):
        if nm not in pos:
            raise ValidationError(no, f"unknown element {nm!r}")
    plist = [perms[nm][0] if nm in perms else list(range(n)) for nm in elements]
    return ActionSpec(elements, table, plist)


def _parse_module(body, header_line, action: GroupAction):
    orders = None
    mats: dict = {}
    for no, line in body:
        toks = line.split()
        if toks[0] == "factors":
            orders = [_int(t, no) for t in toks[1:]]
            if not orders:
                raise ValidationError(no, "factors needs at least one entry")
            if any(o < 0 or o == 1 for o in orders):
                raise ValidationError(no, "factors must be 0 (for Z) or at least 2")
        elif toks[0] == "action":
            if "=" not in line:
                raise ParseError(no, "expected: action NAME = row; row")
            lhs, rhs = line.split("=", 1)
            parts = lhs.split()
            if len(parts) != 2:
                raise ParseError(no, "expected: action NAME = row; row")
            nm = _name(parts[1], no)
            if nm not in action.names:
                raise ValidationError(no, f"unknown group element {nm!r}")
            mats[action.names.index(nm)] = (_matrix(rhs, no), no)
        else:
            raise ParseError(no, f"unknown statement in [module]: {toks[0]!r}")
    if orders is None:
        raise ValidationError(header_line, "[module] needs a factors line")
    m = len(orders)
    for g, (mat, no) in mats.items():
        if len(mat) != m or any(len(r) != m for r in mat):
            raise ValidationError(no, f"action matrix must be {m}x{m}")
    # extend to all elements through products
    ident = [[int(i == j) for j in range(m)] for i in range(m)]
    rho = {action.identity: ident}
    rho.update({g: mat for g, (mat, _) in mats.items()})
    changed = True
    while changed:
        changed = False
        for a in list(rho):
            for b in list(rho):
                c = action.mul(a, b)
                if c not in rho:
                    rho[c] = GModule.matmul(rho[a], rho[b])
                    changed = True
    if not mats:
        rho = {g: ident for g in range(action.order)}
    missing = [action.names[g] for g in range(action.order) if g not in rho]
    if missing:
        raise ValidationError(header_line, "action matrices do not generate the group; missing "
                              + " ".join(missing))
    try:
        return GModule(orders, action, [rho[g] for g in range(action.order)])
    except ValueError as exc:
        raise ValidationError(header_line, str(exc)) from None


def _parse_covering(name, body, header_line, X: FiniteSpace) -> Covering:
    if not body:
        raise ValidationError(header_line, f"covering {name!r} is empty")
    index = {lab: i for i, lab in enumerate(X.labels)}
    members = []
    for no, line in body:
        rhs = line.split("=", 1)[1] if "=" in line else line
        if "=" in line:
            _name(line.split("=", 1)[0].strip(), no)
        pts = rhs.split()
        if not pts:
            raise ValidationError(no, "empty covering member")
        for p in pts:
            if p not in index:
                raise ValidationError(no, f"unknown point {p!r}")
        members.append((frozenset(index[p] for p in pts), no))
        if not X.is_open(members[-1][0]):
            raise ValidationError(no, "covering member is not open (not an up-set)")
    try:
        return Covering(X, tuple(dict.fromkeys(m for m, _ in members)), name)
    except ValueError as exc:
        raise ValidationError(header_line, str(exc)) from None


def _parse_bounds(body):
    out = {}
    for no, line in body:
        if "=" not in line:
            raise ParseError(no, "expected: key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in ("N", "r_max", "seed"):
            raise ParseError(no, f"unknown bound {k!r}")
        val = _int(v, no)
        if val < 0:
            raise ValidationError(no, f"{k} must be nonnegative")
        out[k] = val
    return out


def parse_model(text: str, name: str = "model") -> Model:
    sections = _split_sections(text)
    by_kind: dict = {}
    coverings_raw = []
    for kind, arg, no, body in sections:
        if kind == "covering":
            coverings_raw.append((arg, no, body))
            continue
        if kind in by_kind:
            raise ParseError(no, f"section [{kind}] appears twice")
        by_kind[kind] = (no, body)
    if "space" not in by_kind:
        raise ValidationError(1, "missing [space] section")
    X = _parse_space(by_kind["space"][1], by_kind["space"][0])
    if "group" in by_kind:
        no, body = by_kind["group"]
        spec = _parse_group(body, no, X)
        try:
            action = validate_action(spec, X)
        except (NotAGroup, NotOrderAutomorphism, NotHomomorphism) as exc:
            raise ValidationError(no, f"{type(exc).__name__}: {exc}") from None
    else:
        action = validate_action(ActionSpec(["e"], [[0]], [list(range(X.point_count))]), X)
    if "module" in by_kind:
        no, body = by_kind["module"]
        V = _parse_module(body, no, action)
    else:
        V = GModule([0], action)
    coverings = {}
    for cname, no, body in coverings_raw:
        if cname in coverings or cname in ("minimal", "trivial"):
            raise ValidationError(no, f"covering name {cname!r} is reserved or repeated")
        coverings[cname] = _parse_covering(cname, body, no, X)
    bounds = _parse_bounds(by_kind["bounds"][1]) if "bounds" in by_kind else {}
    return Model(name, X, action, V, coverings, bounds.get("N", 3), bounds.get("r_max"),
                 bounds.get("seed", 0))


def load_model(path: str | Path) -> Model:
    p = Path(path)
    return parse_model(p.read_text(), p.stem)
