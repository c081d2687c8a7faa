"""Command line entry point: ``cohomolab <command> <model-file> [options]``.

Exit codes: 0 all verdicts positive, 1 a mathematical verdict is negative,
2 input error, 3 internal assertion.
"""

from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass, field

from .bicomplex import (DoubleComplex, NotEquivariantizable, NotGInvariantCovering,
                        augmentation_comparison, cocycle_basis, column_analysis,
                        compare_cohomology, component_section, equivariantize_instance,
                        fix_sign_profile, structural_defects)
from .cochain import (VARIANTS, RegionNotGStable, cochain_cohomology, cochain_complex,
                      inclusion_map, variant_region)
from .finspace import (SizeOverflow, check_certificate, contractibility_certificate,
                       minimal_open_cover, size_limit)
from .fpabelian import CompositionNotZero, FpAbGroup
from .model import Model, ModelError, load_model
from .oracle import bar_group_cohomology, cech_nerve_cohomology
from .spectral import NotAComplex, NotStabilized, compute_pages, convergence_report

__all__ = ["Report", "main", "cmd_cohomology", "cmd_spectral", "cmd_verify_theorem",
           "cmd_selftest", "check_size"]

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


# -- reports -----------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, FpAbGroup):
        return str(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, dict):
        return "{" + ",".join(f"{k}:{_fmt(v[k])}" for k in sorted(v, key=str)) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class Report:
    command: str
    model: str
    entries: list = field(default_factory=list)
    verdict: str = ""
    exit_code: int = EXIT_OK

    def add(self, key: str, value) -> None:
        self.entries.append((key, _fmt(value)))

    def value(self, key: str) -> str | None:
        return next((v for k, v in self.entries if k == key), None)

    def render(self, fmt: str = "text") -> str:
        if fmt == "machine":
            lines = [f"command={self.command}", f"model={self.model}"]
            lines += [f"{k}={v}" for k, v in self.entries]
            lines.append(f"verdict={self.verdict}")
            return "\n".join(lines) + "\n"
        width = max((len(k) for k, _ in self.entries), default=0)
        lines = [f"cohomolab {self.command}: {self.model}"]
        lines += [f"  {k.ljust(width)}  {v}" for k, v in self.entries]
        lines.append(f"verdict: {self.verdict}")
        return "\n".join(lines) + "\n"


# -- size guard --------------------------------------------------------------

def check_size(model: Model, N: int, double: bool) -> int:
    """Ambient generator count of the needed groups; raises SizeOverflow above the limit."""
    n_pts = model.space.point_count
    rank = model.module.rank
    if double:
        total = sum((n + 1) * n_pts ** (n + 2) for n in range(N + 2)) * rank
    else:
        total = sum(n_pts ** (n + 1) for n in range(N + 2)) * rank
    if total > size_limit():
        raise SizeOverflow(f"{total} ambient generators exceed the size limit {size_limit()} "
                           f"(lower --bound or set COHOMOLAB_SIZE_LIMIT)")
    return total


def _cover(model: Model, name: str | None):
    try:
        cov = model.covering(name)
    except KeyError:
        raise ModelError(0, f"no covering named {name!r}") from None
    return cov


# -- commands ----------------------------------------------------------------

def cmd_cohomology(model: Model, variant: str = "all", equivariant: bool = False,
                   N: int | None = None, covering: str | None = None) -> Report:
    N = model.N if N is None else N
    check_size(model, N, double=False)
    rep = Report("cohomology", model.name)
    cov = _cover(model, covering) or minimal_open_cover(model.space)
    rep.add("bound", N)
    rep.add("equivariant", equivariant)
    rep.add("covering", cov.name or "unnamed")
    variants = VARIANTS if variant == "all" else (variant,)
    for v in variants:
        hs = cochain_cohomology(model.space, model.module, N, v, equivariant, cov)
        for n, h in enumerate(hs):
            rep.add(f"{v}.H{n}", h)
    rep.verdict = "COMPUTED"
    return rep


def _double(model: Model, equivariant: bool, N: int, covering: str | None, fault=None):
    return DoubleComplex(model.space, model.module, _cover(model, covering), equivariant, N,
                         model.action, fault=fault)


def cmd_spectral(model: Model, equivariant: bool = False, N: int | None = None,
                 covering: str | None = None, r_max: int | None = None) -> Report:
    N = model.N if N is None else N
    r_max = model.r_max if r_max is None else r_max
    check_size(model, N, double=True)
    rep = Report("spectral", model.name)
    dc = _double(model, equivariant, N, covering)
    rep.add("bound", N)
    rep.add("equivariant", equivariant)
    rep.add("covering", dc.cover.name or "unnamed")
    pages = compute_pages(dc, r_max)
    for page in pages:
        for (p, q), e in sorted(page.entries.items()):
            rep.add(f"E{page.r}.{p},{q}", e)
        nonzero = sorted(pq for pq, d in page.differentials.items() if not d.is_zero())
        rep.add(f"E{page.r}.nonzero_differentials", [f"{p},{q}" for p, q in nonzero])
        bad = sorted(pq for pq, ok in page.homology_check.items() if not ok)
        if bad:
            rep.add(f"E{page.r}.homology_check_failed", [f"{p},{q}" for p, q in bad])
    ok = all(all(p.homology_check.values()) for p in pages)
    try:
        conv = convergence_report(pages)
    except NotStabilized as exc:
        rep.add("stabilized", False)
        rep.add("stabilized.detail", str(exc))
        rep.verdict = "NOT-STABILIZED"
        rep.exit_code = EXIT_NEGATIVE
        return rep
    rep.add("stabilized", True)
    for n, d in sorted(conv.degrees.items()):
        rep.add(f"tot.H{n}", d["H"])
        for p in sorted(d["graded"]):
            rep.add(f"tot.H{n}.graded.{p}", d["graded"][p])
    rep.add("convergence.match", conv.match)
    for mm in conv.mismatches:
        rep.add("convergence.mismatch", mm)
    good = conv.match and ok
    rep.verdict = "MATCH" if good else "MISMATCH"
    rep.exit_code = EXIT_OK if good else EXIT_NEGATIVE
    return rep


def cmd_verify_theorem(model: Model, N: int | None = None) -> Report:
    N = model.N if N is None else N
    check_size(model, N, double=True)
    X, V = model.space, model.module
    rep = Report("verify-theorem", model.name)
    rep.add("bound", N)
    cert = contractibility_certificate(X)
    if cert is None:
        rep.add("certificate", "none (not dismantlable)")
    else:
        rep.add("certificate", "dismantlable" if check_certificate(X, cert) else "invalid")
        rep.add("certificate.steps", [f"{lab}:{kind}:{w}" for lab, kind, w in cert])
    minimal = minimal_open_cover(X)
    src_groups, src_maps = cochain_complex(X, V, N, variant_region("continuous"), True, "A_c")
    tgt_groups, tgt_maps = cochain_complex(X, V, N, variant_region("germ", minimal), True, "A_cg")
    all_iso = True
    for n in range(N + 1):
        inc = inclusion_map(src_groups[n], tgt_groups[n])
        cmp = compare_cohomology(inc, src_maps, tgt_maps, n)
        rep.add(f"H{n}.continuous_eq", cmp.source)
        rep.add(f"H{n}.germ_eq", cmp.target)
        rep.add(f"H{n}.inclusion_bijective", cmp.bijective)
        if cmp.witness:
            rep.add(f"H{n}.witness", cmp.witness)
        all_iso &= cmp.bijective
    dc = DoubleComplex(X, V, None, False, N, model.action)
    for p in range(N + 1):
        col = column_analysis(dc, p, N)
        rep.add(f"column{p}.point_contraction", "exact" if col.exact_global else col.contraction_failures)
        rep.add(f"column{p}.kernels_coincide", col.kernels_coincide)
        rep.add(f"column{p}.continuous_cohomology", col.continuous_cohomology)
    if cert is None:
        rep.verdict = "NO-CERTIFICATE"
        rep.exit_code = EXIT_NEGATIVE
    elif all_iso:
        rep.verdict = "THEOREM-CONFIRMED"
    else:
        rep.verdict = "NOT-ISOMORPHIC"
        rep.exit_code = EXIT_NEGATIVE
    return rep


def _is_regular(model: Model) -> bool:
    """Discrete ``X`` on which ``G`` acts freely and transitively."""
    X, act = model.space, model.action
    discrete = all(X.leq[x][y] == (x == y) for x in range(X.point_count) for y in range(X.point_count))
    if not discrete or act.order != X.point_count:
        return False
    return sorted(act.perms[g][0] for g in range(act.order)) == list(range(X.point_count))


def cmd_selftest(model: Model, seed: int | None = None, N: int | None = None,
                 covering: str | None = None, fault: str | None = None,
                 instances: int = 10) -> Report:
    N = model.N if N is None else N
    seed = model.seed if seed is None else seed
    check_size(model, N, double=True)
    X, V = model.space, model.module
    rep = Report("selftest", model.name)
    rep.add("bound", N)
    rep.add("seed", seed)
    if fault:
        rep.add("fault", fault)
    failures = []

    def record(name, ok, witness=None):
        rep.add(f"{name}", "pass" if ok else "FAIL")
        if not ok:
            failures.append(name)
            if witness is not None:
                rep.add(f"{name}.witness", witness)

    # standard complexes: d d = 0
    cov = _cover(model, covering) or minimal_open_cover(X)
    for variant in VARIANTS:
        for eq in (False, True):
            _, maps = cochain_complex(X, V, N, variant_region(variant, cov), eq)
            wit = None
            for n in range(N):
                dd = maps[n + 1].compose(maps[n])
                col = next(((j, c) for j, c in enumerate(dd.matrix.iter_columns())
                            if not dd.target.is_zero_element(c)), None)
                if col is not None:
                    wit = {"degree": n, "generator": col[0], "dd": dd.target.reduce(col[1])}
                    break
            record(f"cochain.{variant}.{'eq' if eq else 'plain'}.dd_zero", wit is None, wit)

    dcs = {eq: _double(model, eq, N, covering, fault) for eq in (False, True)}
    for eq, dc in dcs.items():
        tag = "eq" if eq else "plain"
        bad = structural_defects(dc)
        record(f"double.{tag}.identities", not bad, bad[0] if bad else None)
        fails = []
        for q in range(N + 1):
            fails += dc.verify_row_contraction(q, signed=True)
        record(f"double.{tag}.row_contraction", not fails, fails[0] if fails else None)
        for n in range(N + 1):
            cmp = augmentation_comparison(dc, n)
            record(f"double.{tag}.i_star.H{n}", cmp.bijective, cmp.witness)

    # psi bridge: one sign profile must work for every basis cocycle
    cocycles = {n: cocycle_basis(dcs[True], n) for n in range(1, N + 1)}
    rep.add("psi_bridge.cocycles", sum(len(v) for v in cocycles.values()))
    profile, rejected = fix_sign_profile(dcs[True], cocycles)
    rep.add("psi_bridge.profile", profile if profile else "none")
    record("psi_bridge", profile is not None, None if profile else rejected)

    # equivariantization
    try:
        component_section(model.action)
        if N < 1:
            raise NotEquivariantizable("needs N >= 1")
        rng = random.Random(seed)
        plain, eqdc = dcs[False], dcs[True]
        bad = None
        for k in range(instances):
            p = rng.randrange(0, N)
            q = rng.randrange(0, N - p)
            res = equivariantize_instance(plain, eqdc, rng, p, q)
            if not res["ok"]:
                bad = res
                break
        rep.add("equivariantize.instances", instances)
        record("equivariantize", bad is None, bad)
    except NotEquivariantizable as exc:
        rep.add("equivariantize", f"skipped ({exc})")

    # oracles
    if _is_regular(model):
        bar = bar_group_cohomology(model.action, V, N)
        std = cochain_cohomology(X, V, N, "standard", True)
        same = [a == b for a, b in zip(bar, std)]
        rep.add("oracle.bar", bar)
        rep.add("oracle.equivariant_standard", std)
        record("oracle.group_cohomology", all(same),
               None if all(same) else {"degree": same.index(False)})
    col = column_analysis(dcs[False] if not fault else _double(model, False, N, covering), 0, N)
    cech = cech_nerve_cohomology(X, minimal_open_cover(X), V, N)
    agree = [a == b for a, b in zip(col.continuous_cohomology, cech)]
    rep.add("oracle.column0", col.continuous_cohomology)
    rep.add("oracle.cech_nerve", cech)
    # agreement of the two is an open question; disagreement is reported, not counted
    rep.add("oracle.cech_vs_column", "agree" if all(agree) else f"disagree in degree {agree.index(False)}")

    # spectral sequence
    for eq, dc in dcs.items():
        tag = "eq" if eq else "plain"
        try:
            pages = compute_pages(dc)
            bad = [(pg.r, pq) for pg in pages for pq, ok in pg.homology_check.items() if not ok]
            record(f"spectral.{tag}.pages_are_homology", not bad,
                   {"page": bad[0][0], "position": bad[0][1]} if bad else None)
            conv = convergence_report(pages)
            record(f"spectral.{tag}.convergence", conv.match,
                   conv.mismatches[0] if conv.mismatches else None)
        except NotAComplex as exc:
            record(f"spectral.{tag}.convergence", False, exc.witness)
        except CompositionNotZero as exc:
            record(f"spectral.{tag}.pages_are_homology", False, exc.witness)
        except NotStabilized as exc:
            record(f"spectral.{tag}.convergence", False, {"detail": str(exc)})

    rep.add("failures", len(failures))
    rep.verdict = "PASS" if not failures else "FAIL"
    rep.exit_code = EXIT_OK if not failures else EXIT_NEGATIVE
    return rep


# -- entry point -------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cohomolab", description=(
        "Exact cohomology of finite transformation groups: standard, continuous and "
        "germ-continuous cochains, the double complex and its spectral sequence."))
    ap.add_argument("command", choices=["cohomology", "spectral", "verify-theorem", "selftest"])
    ap.add_argument("model", help="model file")
    ap.add_argument("--bound", type=int, default=None, help="top degree N (default: model or 3)")
    ap.add_argument("--covering", default=None, help="NAME of a covering block, minimal or trivial")
    ap.add_argument("--equivariant", action="store_true")
    ap.add_argument("--variant", default="all", choices=("all",) + VARIANTS)
    ap.add_argument("--r-max", type=int, default=None, help="last spectral page")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--instances", type=int, default=10, help="random equivariantization checks")
    ap.add_argument("--inject-fault", choices=("sign", "differential"), default=None,
                    help="corrupt the double complex (negative control)")
    ap.add_argument("--format", choices=("text", "machine"), default="text")
    return ap


def run(argv: list[str] | None = None) -> tuple[int, str]:
    args = _parser().parse_args(argv)
    try:
        model = load_model(args.model)
        if args.bound is not None and args.bound < 0:
            raise ModelError(0, "--bound must be nonnegative")
        if args.command == "cohomology":
            rep = cmd_cohomology(model, args.variant, args.equivariant, args.bound, args.covering)
        elif args.command == "spectral":
            rep = cmd_spectral(model, args.equivariant, args.bound, args.covering, args.r_max)
        elif args.command == "verify-theorem":
            rep = cmd_verify_theorem(model, args.bound)
        else:
            rep = cmd_selftest(model, args.seed, args.bound, args.covering, args.inject_fault,
                               args.instances)
    except (ModelError, SizeOverflow, OSError, RegionNotGStable, NotGInvariantCovering) as exc:
        return EXIT_INPUT, f"error: {type(exc).__name__}: {exc}\n"
    except Exception as exc:  # noqa: BLE001 - anything else is a bug
        return EXIT_INTERNAL, f"internal error: {type(exc).__name__}: {exc}\n"
    return rep.exit_code, rep.render(args.format)


def main(argv: list[str] | None = None) -> int:
    code, out = run(argv)
    stream = sys.stdout if code in (EXIT_OK, EXIT_NEGATIVE) else sys.stderr
    stream.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
