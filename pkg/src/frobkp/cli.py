"""Command-line driver: ``frobkp <command> [options]``.

Exit codes: 0 when every requested check passes, 1 on a verification
failure, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import random
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .diffring import JetPoly, is_total_derivative
from .frobenius import (
    AlgebraError,
    FrobeniusAlgebra,
    algebra_to_json,
    build_z2_eps_mu,
    build_zn,
    check_frobenius,
    load_algebra,
    parse_algebra,
    trace,
)
from .psido import TrustUnderflowError

log = logging.getLogger("frobkp")

FORMATS = ("text", "latex", "json", "csv")
COMMANDS = ("algebra", "derive", "bracket", "verify", "walgebra", "soliton", "dkp", "selftest")
# options whose values may start with '-'
_VALUE_OPTS = {"--grid", "--a", "--b", "--params", "--x0", "--t0"}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    algebra: FrobeniusAlgebra
    command: str
    params: dict = field(default_factory=dict)
    fmt: str = "text"
    seed: int = 0


@dataclass
class Outcome:
    ok: bool
    text: str
    payload: dict
    latex: str | None = None
    csv: str | None = None


# -- argument handling ------------------------------------------------------------


def _join_values(argv: list) -> list:
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_OPTS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def _resolve_algebra(text: str, trace_index: int | None) -> FrobeniusAlgebra:
    if os.path.isfile(text):
        alg = load_algebra(text)
    else:
        alg = parse_algebra(text)
    if trace_index is None:
        return alg
    parts = text.split(":")
    head = parts[0].lower()
    if head == "zn" or (len(parts) == 1 and head.startswith("z") and head[1:].isdigit()):
        return build_zn(alg.dim, trace_index)
    if head == "z2" and len(parts) == 4:
        return build_z2_eps_mu(parts[1], parts[2], trace_index)
    raise ConfigError(f"--trace applies to zn and z2 families, not {text!r}")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algebra", default="z2", help="zn:n:k, z2:eps:mu:k, trn:n, scalar, z<n> or a JSON file")
    p.add_argument("--trace", type=int, default=None, help="basic trace index override")
    p.add_argument("--format", "--out", dest="fmt", choices=FORMATS, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frobkp", description="Frobenius-algebra-valued KP hierarchy toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("algebra", help="describe and check an algebra")
    _common(p)

    p = sub.add_parser("derive", help="derive flows and equations")
    p.add_argument("what", choices=("kp", "flow", "gd", "ckdv", "zero-curvature"))
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--l", type=int, default=3)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--full", action="store_true", help="keep V_{m-1} (no reduction)")
    _common(p)

    p = sub.add_parser("bracket", help="Adler maps and bracket densities with free gradients")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--kind", default="second-dirac", choices=("first", "second", "second-dirac"))
    p.add_argument("--matrices", action="store_true", help="m = 2 component matrices in u = V/2")
    _common(p)

    p = sub.add_parser("verify", help="run a verification and emit a report")
    p.add_argument(
        "what",
        choices=("bihamiltonian", "dirac", "zero-curvature", "kp", "kdv-pair", "walgebra", "frobenius",
                 "dispersionless", "commutator-trace"),
    )
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--l", type=int, default=4)
    p.add_argument("--count", type=int, default=10)
    _common(p)

    p = sub.add_parser("walgebra", help="Boussinesq W-algebra relations")
    _common(p)

    p = sub.add_parser("soliton", help="tau-function soliton table and residuals")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--params", default=None, help="comma separated generator coordinates")
    p.add_argument("--grid", default="-5:5:21")
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-9)
    _common(p)

    p = sub.add_parser("dkp", help="dispersionless counterparts and the limit check")
    p.add_argument("what", choices=("flow", "kp", "gd", "bracket", "limit"))
    p.add_argument("--r", type=int, default=3)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--kind", default="second-dirac", choices=("first", "second", "second-dirac"))
    p.add_argument("--matrices", action="store_true")
    _common(p)

    p = sub.add_parser("selftest", help="property checks and golden comparisons")
    p.add_argument("--update-golden", action="store_true")
    p.add_argument("--count", type=int, default=5)
    _common(p)
    return parser


# -- rendering helpers ------------------------------------------------------------


def _poly(p: JetPoly, latex: bool, names=None) -> str:
    return p.to_latex(names) if latex else p.to_ascii(names)


def _report_text(rep: dict) -> str:
    head = f"{rep['check']} [{rep.get('algebra')}]"
    if rep.get("m") is not None:
        head += f" m={rep['m']}"
    if rep.get("r") is not None:
        head += f" r={rep['r']}"
    lines = [f"{head}: {rep['status'].upper()}"]
    for mm in rep.get("mismatches", []):
        lines.append("  mismatch: " + json.dumps(mm, sort_keys=True, default=str))
    return "\n".join(lines)


def _report(check: str, alg, m, r, mismatches: list, **extra) -> dict:
    rep = {"check": check, "algebra": alg.name, "m": m, "r": r,
           "status": "pass" if not mismatches else "fail", "mismatches": mismatches}
    rep.update(extra)
    return rep


def _outcome_from_report(rep: dict, text: str | None = None) -> Outcome:
    return Outcome(rep["status"] == "pass", text or _report_text(rep), rep)


# -- commands -----------------------------------------------------------------------


def cmd_algebra(cfg: RunConfig) -> Outcome:
    alg = cfg.algebra
    rep = check_frobenius(alg)
    data = algebra_to_json(alg)
    data["gram"] = [[str(v) for v in row] for row in alg.gram]
    lines = [f"algebra {alg.name} (dim {alg.dim})"]
    for i in range(alg.dim):
        for j in range(i, alg.dim):
            prod = " + ".join(f"{c}*e{k + 1}" for k, c in alg.mult_table.get((i, j), ())) or "0"
            lines.append(f"  e{i + 1} o e{j + 1} = {prod}")
    lines.append("  unit = " + str([str(u) for u in alg.unit_coords]))
    lines.append("  trace weights = " + str([str(w) for w in alg.trace_weights]))
    lines.append("  gram = " + str(data["gram"]))
    lines.append(str(rep))
    payload = _report("frobenius", alg, None, None,
                      [{"axiom": ax, "witness": list(w)} for ax, w in rep.failures], algebra_data=data)
    return Outcome(bool(rep), "\n".join(lines), payload)


def _names_for(alg: FrobeniusAlgebra, label: str, letters=None) -> dict:
    n = alg.dim
    letters = letters or (["v", "w"] if n == 2 else [label] if n == 1 else [f"{label}{q}" for q in range(1, n + 1)])
    return {(label, q + 1): letters[q] for q in range(n)}


def cmd_derive(cfg: RunConfig) -> Outcome:
    from . import hierarchy as hy

    alg, P = cfg.algebra, cfg.params
    latex = cfg.fmt == "latex"
    what = P["what"]
    if what == "kp":
        eq = hy.kp_equation(alg)
        ids = hy.kp_flow_identities(alg)
        checks = {"U1_t2": not ids["U1_t2"], "U1_t3": not ids["U1_t3"], "kp": eq.holds}
        if alg.dim == 2 and alg.unit_coords == (1, 0):
            eps = alg.structure_constants[1][1][0]
            mu = alg.structure_constants[1][1][1]
            closed = hy.closed_z2_kp(eps, mu)
            checks["component_form"] = all(a == b for a, b in zip(closed, eq.expression.coords))
        text = [f"KP equation over {alg.name}", eq.render(latex)]
        text += [f"check {k}: {'ok' if v else 'FAILED'}" for k, v in checks.items()]
        mism = [{"identity": k} for k, v in checks.items() if not v]
        payload = _report("kp", alg, None, None, mism,
                          equations=[p.to_ascii(eq.component_names()) for p in eq.expression.coords])
        return Outcome(not mism, "\n".join(text), payload)
    if what == "flow":
        depth = max(cfg.params.get("depth") or 0, P["r"] + 3)
        flow = hy.flow_equations(hy.generic_L(alg, depth), P["r"])
        text = flow.render(latex=latex)
        return Outcome(True, text, {"check": "flow", "algebra": alg.name, "r": P["r"], "status": "pass",
                                     "equations": text.splitlines(), "mismatches": []})
    if what in ("gd", "ckdv"):
        m, r = (2, 3) if what == "ckdv" else (P["m"], P["r"])
        flow = hy.gd_reduction(alg, m, r, reduced=not P.get("full"))
        ok = True
        mism = []
        if what == "ckdv":
            flow = hy.gd_flow_in_u(flow)
            want = hy.coupled_kdv_rhs(alg)
            got = flow.component("u")
            ok = got == want
            if not ok:
                mism.append({"expression": "u_t", "difference": str(got - want)})
            text = flow.render(_names_for(alg, "u"), latex)
        else:
            text = flow.render(latex=latex)
        return Outcome(ok, text, _report(what, alg, m, r, mism, equations=text.splitlines()))
    if what == "zero-curvature":
        r, l = P["r"], P["l"]
        depth = cfg.params.get("depth") or 6
        need = r + l - 1
        if depth < need:
            log.warning("depth raised from %d to %d for (r, l) = (%d, %d)", depth, need, r, l)
            depth = need
        res = hy.zero_curvature_residual(hy.generic_L(alg, depth), r, l)
        mism = [{"order": o, "difference": str(c)} for o, c in res]
        rep = _report("zero-curvature", alg, None, r, mism, l=l, depth=depth)
        return _outcome_from_report(rep)
    raise ConfigError(f"unknown derive target {what}")


def _free_grad(alg, lax, prefix, cls=None):
    from .diffring import field_element
    from .psido import GradOperator

    return GradOperator(alg, {i: field_element(alg, f"{prefix}{i}") for i in lax.indices}, cls or lax.cls)


def _bracket_outcome(cfg: RunConfig, cls=None) -> Outcome:
    from .hamiltonian import BracketKind, apply_map, bracket_density, dirac_complete, kdv_bracket_pair
    from .hierarchy import GDLax

    alg, P = cfg.algebra, cfg.params
    kind = BracketKind.parse(P["kind"])
    m = P["m"]
    reduced = kind is not BracketKind.SecondZero
    lax = GDLax(alg, m, reduced, cls) if cls else GDLax(alg, m, reduced)
    latex = cfg.fmt == "latex"
    X = _free_grad(alg, lax, "X")
    Y = _free_grad(alg, lax, "Y")
    if reduced:
        Y = dirac_complete(Y, lax)
    H = apply_map(kind, X, lax)
    density = bracket_density(X, Y, kind, lax)
    lines = [f"{kind.value} map on {lax.op.render(latex=latex)}"]
    for o in sorted(H.coeffs, reverse=True):
        lines.append(f"  order {o}: " + ", ".join(_poly(p, latex) for p in H.coeffs[o].coords))
    lines.append("density: " + _poly(density, latex))
    payload = {"check": "bracket", "algebra": alg.name, "m": m, "r": None, "status": "pass",
               "kind": kind.value, "density": density.to_ascii(), "mismatches": []}
    ok = True
    if P.get("matrices"):
        if m != 2 or alg.dim != 2:
            raise ConfigError("--matrices needs m = 2 and a two-dimensional algebra")
        rep = kdv_bracket_pair(alg, cls=cls)
        names = rep["names"]
        for title, M in zip(("first", "second"), rep["matrices"]):
            lines.append(f"{title} structure (component form):")
            for row in M:
                lines.append("  [" + " | ".join(_op_text(cell, names) for cell in row) + "]")
        ok = bool(rep["matrices_match"] or rep["expected_matrices"][0] is None) and all(rep["regenerates_flow"].values())
        lines.append(f"matrices match closed forms: {rep['matrices_match']}")
        lines.append(f"flow regenerated: {rep['regenerates_flow']}")
        payload["status"] = "pass" if ok else "fail"
    return Outcome(ok, "\n".join(lines), payload)


def _op_text(cell: dict, names) -> str:
    if not cell:
        return "0"
    parts = []
    for k in sorted(cell, reverse=True):
        c = cell[k].to_ascii(names)
        parts.append(f"({c})" + (f"d^{k}" if k > 1 else "d" if k == 1 else ""))
    return " + ".join(parts)


def cmd_bracket(cfg: RunConfig) -> Outcome:
    return _bracket_outcome(cfg)


def cmd_verify(cfg: RunConfig) -> Outcome:
    from . import hamiltonian as hm
    from . import hierarchy as hy

    alg, P = cfg.algebra, cfg.params
    what = P["what"]
    m, r = P["m"], P["r"]
    if what == "bihamiltonian":
        depth = cfg.params.get("depth")
        if depth is not None and depth < r + m + 2:
            log.warning("depth raised from %d to %d", depth, r + m + 2)
            depth = r + m + 2
        return _outcome_from_report(hm.verify_bihamiltonian(alg, m, r, depth))
    if what == "dirac":
        mism = []
        for mm in sorted({2, 3, 4, m}):
            lax = hy.GDLax(alg, mm)
            X = _free_grad(alg, lax, "X")
            try:
                hm.dirac_complete(X, lax, cross_check=True)
            except hm.ConventionMismatchError as exc:
                mism.append({"m": mm, "difference": str(exc)})
        return _outcome_from_report(_report("dirac", alg, m, None, mism))
    if what == "zero-curvature":
        cfg.params["what"] = "zero-curvature"
        return cmd_derive(cfg)
    if what == "kp":
        cfg.params["what"] = "kp"
        out = cmd_derive(cfg)
        return Outcome(out.ok, _report_text(out.payload), out.payload)
    if what == "kdv-pair":
        rep = hm.kdv_bracket_pair(alg)
        mism = [{"item": k} for k in ("operators_match", "matrices_match", "hamiltonians_match") if rep[k] is False]
        mism += [{"item": f"regenerates_flow:{k}"} for k, v in rep["regenerates_flow"].items() if not v]
        return _outcome_from_report(_report("kdv-pair", alg, 2, 3, mism))
    if what == "walgebra":
        return cmd_walgebra(cfg)
    if what == "frobenius":
        return cmd_algebra(cfg)
    if what == "dispersionless":
        from .dkp import dispersionless_limit_check

        rep = dispersionless_limit_check(m, r, alg)
        return _outcome_from_report(rep)
    if what == "commutator-trace":
        from .sampling import random_operator

        rng = random.Random(cfg.seed)
        mism = []
        for k in range(P["count"]):
            A = random_operator(rng, alg, rng.randint(0, 2), 6, ("A",), terms=2)
            B = random_operator(rng, alg, rng.randint(0, 2), 6, ("A",), terms=2)
            d = trace(A.commutator(B).res())
            if not is_total_derivative(d):
                mism.append({"sample": k, "density": d.to_ascii()})
        return _outcome_from_report(_report("commutator-trace", alg, None, None, mism, samples=P["count"]))
    raise ConfigError(f"unknown verification {what}")


def cmd_walgebra(cfg: RunConfig) -> Outcome:
    from .hamiltonian import walgebra_boussinesq

    alg = cfg.algebra
    latex = cfg.fmt == "latex"
    res = walgebra_boussinesq(alg)
    lines = [f"Boussinesq W-algebra over {alg.name}"]
    mism = []
    for (a, b), item in res.items():
        status = "ok" if item["equal"] else "MISMATCH"
        lines.append(f"{{W{a}, W{b}}}: {status}")
        lines.append("  computed:    " + _poly(item["computed"], latex))
        lines.append("  closed form: " + _poly(item["closed_form"], latex))
        if not item["equal"]:
            mism.append({"pair": [a, b], "difference": item["difference"].to_ascii()})
    return Outcome(not mism, "\n".join(lines), _report("walgebra", alg, 3, None, mism))


def cmd_soliton(cfg: RunConfig) -> Outcome:
    import numpy as np

    from .soliton import TauFunction, make_grid, parse_grid, soliton_table, write_csv

    alg, P = cfg.algebra, cfg.params
    if P.get("params"):
        coords = [float(x) for x in P["params"].split(",")]
    elif alg.dim == 1:
        coords = [P["a"]]
    else:
        coords = [P["a"], P["b"]]
    if len(coords) != alg.dim:
        raise ConfigError(f"generator needs {alg.dim} coordinates, got {len(coords)}")
    tau = TauFunction.from_params(alg, coords)
    lo, hi, num = parse_grid(P["grid"])
    grid = make_grid(lo, hi, num)
    table = soliton_table(tau, grid, P["order"])
    maxres = np.abs(table["residual"]).max(axis=0)
    ok = bool(np.all(maxres <= P["tol"]))
    buf = io.StringIO()
    write_csv(buf, table)
    names = ["v", "w"] if alg.dim == 2 else ["u"] if alg.dim == 1 else [f"u{q}" for q in range(1, alg.dim + 1)]
    origin = None
    idx = np.where((np.abs(table["points"][:, 0]) < 1e-12) & (np.abs(table["points"][:, 1]) < 1e-12))[0]
    if len(idx):
        origin = [float(v) for v in table["u"][idx[0]]]
    payload = {"check": "soliton", "algebra": alg.name, "m": 2, "r": 3, "status": "pass" if ok else "fail",
               "generator": coords, "grid": [lo, hi, num], "max_residual": [float(x) for x in maxres],
               "value_at_origin": origin,
               "mismatches": [] if ok else [{"component": names[q], "max_residual": float(x)}
                                            for q, x in enumerate(maxres) if x > P["tol"]]}
    text = [f"soliton over {alg.name}, generator {coords}, grid {lo}:{hi}:{num}"]
    text += [f"  max residual {nm}: {x:.3e}" for nm, x in zip(names, maxres)]
    if origin is not None:
        text.append("  U(0,0) = " + ", ".join(f"{nm}={v:.15g}" for nm, v in zip(names, origin)))
    text.append("status: " + ("pass" if ok else "FAIL"))
    return Outcome(ok, "\n".join(text), payload, csv=buf.getvalue())


def cmd_dkp(cfg: RunConfig) -> Outcome:
    from . import dkp

    alg, P = cfg.algebra, cfg.params
    latex = cfg.fmt == "latex"
    what = P["what"]
    if what == "flow":
        flow = dkp.dkp_flows(alg, P["r"], cfg.params.get("depth"))
        text = flow.render(latex=latex)
        return Outcome(True, text, {"check": "dkp-flow", "algebra": alg.name, "r": P["r"], "m": None,
                                     "status": "pass", "mismatches": [], "equations": text.splitlines()})
    if what == "kp":
        eq = dkp.dkp_equation(alg)
        text = f"dKP equation over {alg.name}\n{eq.render(latex)}\ncheck dkp: {'ok' if eq.holds else 'FAILED'}"
        mism = [] if eq.holds else [{"identity": "dkp"}]
        return Outcome(eq.holds, text, _report("dkp", alg, None, None, mism))
    if what == "gd":
        flow = dkp.dkp_gd_flow(alg, P["m"], P["r"])
        text = flow.render(latex=latex)
        return Outcome(True, text, _report("dkp-gd", alg, P["m"], P["r"], [], equations=text.splitlines()))
    if what == "bracket":
        return _bracket_outcome(cfg, dkp.LaurentSymbol)
    if what == "limit":
        return _outcome_from_report(dkp.dispersionless_limit_check(P["m"], P["r"], alg))
    raise ConfigError(f"unknown dkp target {what}")


# -- golden files and selftest ------------------------------------------------------


def golden_outputs() -> dict:
    """Canonical ASCII for the stored golden derivations."""
    from . import dkp
    from . import hierarchy as hy
    from .hamiltonian import walgebra_boussinesq

    z2 = build_zn(2, 1)
    out = {}
    out["kp_z2_1_0_1.txt"] = hy.kp_equation(build_z2_eps_mu(1, 0, 1)).render()
    out["ckdv_zn_2_1.txt"] = hy.gd_flow_in_u(hy.gd_reduction(z2, 2, 3)).render(_names_for(z2, "u"))
    out["boussinesq_t2_zn_2_1.txt"] = hy.gd_reduction(z2, 3, 2).render()
    out["boussinesq_t4_zn_2_1.txt"] = hy.gd_reduction(z2, 3, 4).render()
    out["dkp_zn_2_1.txt"] = dkp.dkp_equation(z2).render()
    w = walgebra_boussinesq(z2)
    out["walgebra_zn_2_1.txt"] = "\n".join(
        f"W{a}W{b}: {item['computed'].to_ascii()}" for (a, b), item in sorted(w.items())
    )
    return {k: v + "\n" for k, v in out.items()}


def _golden_dir():
    return resources.files("frobkp").joinpath("data", "golden")


def cmd_selftest(cfg: RunConfig) -> Outcome:
    from .frobenius import build_trn
    from .hamiltonian import BracketKind, bracket
    from .hierarchy import GDLax
    from .psido import adjoint
    from .sampling import random_functional, random_operator

    rng = random.Random(cfg.seed)
    count = cfg.params.get("count", 5)
    results = []

    gold = golden_outputs()
    if cfg.params.get("update_golden"):
        target = Path(str(_golden_dir()))
        target.mkdir(parents=True, exist_ok=True)
        for name, text in gold.items():
            (target / name).write_text(text)
    for name, text in sorted(gold.items()):
        stored = _golden_dir().joinpath(name)
        ok = stored.is_file() and stored.read_text() == text
        results.append((f"golden {name}", ok))

    algs = [build_zn(n, k) for n in range(1, 7) for k in range(n)] + [build_trn(n) for n in range(1, 7)]
    for e in (0, 1, -1):
        for mu in (0, 1):
            for k in (1, 2):
                try:
                    algs.append(build_z2_eps_mu(e, mu, k))
                except AlgebraError:
                    pass  # degenerate trace for this choice
    results.append(("frobenius axioms (built-ins)", all(check_frobenius(a) for a in algs)))

    ok = True
    for _ in range(count):
        alg = rng.choice([build_zn(1, 0), build_zn(2, 1), build_zn(3, 0)])
        A, B, C = (random_operator(rng, alg, rng.randint(0, 2), 4, terms=2) for _ in range(3))
        ok &= A.compose(B).compose(C).agrees_with(A.compose(B.compose(C)))
        ok &= adjoint(A.compose(B)).agrees_with(adjoint(B).compose(adjoint(A)))
    results.append(("psido associativity and adjoint", bool(ok)))

    ok = True
    for _ in range(count):
        alg = rng.choice([build_zn(1, 0), build_zn(2, 1), build_zn(3, 2)])
        m = rng.choice((2, 3))
        lax = GDLax(alg, m)
        f = random_functional(rng, alg, lax.labels)
        g = random_functional(rng, alg, lax.labels)
        for kind in (BracketKind.FirstInfinity, BracketKind.SecondZeroDirac):
            ok &= (bracket(f, g, kind, lax) + bracket(g, f, kind, lax)).is_zero()
    results.append(("bracket skew-symmetry", bool(ok)))

    lines = [f"{'PASS' if ok else 'FAIL'}  {name}" for name, ok in results]
    allok = all(ok for _, ok in results)
    mism = [{"item": name} for name, ok in results if not ok]
    return Outcome(allok, "\n".join(lines), {"check": "selftest", "algebra": None, "m": None, "r": None,
                                              "status": "pass" if allok else "fail", "mismatches": mism})


HANDLERS = {
    "algebra": cmd_algebra,
    "derive": cmd_derive,
    "bracket": cmd_bracket,
    "verify": cmd_verify,
    "walgebra": cmd_walgebra,
    "soliton": cmd_soliton,
    "dkp": cmd_dkp,
    "selftest": cmd_selftest,
}


def _emit(out: Outcome, fmt: str, stream) -> None:
    if fmt == "json":
        stream.write(json.dumps(out.payload, indent=2, sort_keys=True, default=str) + "\n")
    elif fmt == "csv":
        if out.csv is None:
            raise ConfigError("csv output is only available for the soliton command")
        stream.write(out.csv)
    else:
        stream.write(out.text + "\n")


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_values(argv))
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    fmt = args.fmt or ("csv" if args.command == "soliton" else "text")
    handler = logging.StreamHandler(stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    log.propagate = False
    try:
        alg = _resolve_algebra(args.algebra, args.trace)
        params = {k: v for k, v in vars(args).items() if k not in ("algebra", "trace", "fmt", "seed", "command")}
        cfg = RunConfig(alg, args.command, params, fmt, args.seed)
        out = HANDLERS[args.command](cfg)
        _emit(out, fmt, stdout)
    except (ConfigError, AlgebraError, ValueError, OSError, TrustUnderflowError) as exc:
        if fmt == "json":
            stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        else:
            stderr.write(f"error: {exc}\n")
        return 2
    finally:
        log.removeHandler(handler)
    return 0 if out.ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
