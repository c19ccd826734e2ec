"""Command-line runner: ``boxlab <subcommand> [--config FILE] [flags]``.

Config files hold ``key = value`` lines (``#`` starts a comment); keys are
flag names with dashes or underscores. Flags given on the command line win.
Exit status: 0 when every check in the run passes, 1 on a failed check,
2 on bad input or an exceeded size cap.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, bassserre, baumslag, expansion, extension, metric, tower, treepartition, verify
from .errors import BoxlabError, CapExceeded, InputError, VerificationError
from .graphs import cayley_multigraph, read_graph, size_cap
from .groups import A_SIDE, B_SIDE, FreeProduct, group_from_spec

SCHEMA_VERSION = 1
log = logging.getLogger("boxlab")


def _bool(text: str) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InputError(f"not a boolean: {text!r}")


def _ints(text: str) -> list[int]:
    if isinstance(text, list):
        return text
    return [int(x) for x in str(text).replace(",", " ").split()]


def _fraction(text) -> Fraction:
    return text if isinstance(text, Fraction) else Fraction(str(text).strip())


# (flag, type, default, help) per subcommand
COMMON = [
    ("report", str, "boxlab-report", "output directory"),
    ("seed", int, 0, "seed for randomized checks"),
]
PARAMS: dict[str, list[tuple[str, Callable, Any, str]]] = {
    "group": [("spec", str, None, "group spec, e.g. cyclic:6, dihedral:4, cyclic:2*cyclic:2, table:PATH"),
              ("gens", _ints, None, "generators for the Cayley graph (default: all non-identity)")],
    "baumslag": [("a", str, "cyclic:2", "factor A"), ("b", str, "cyclic:3", "factor B"),
                 ("k", int, 4, "truncation depth"), ("L", int, None, "faithfulness radius (default k)"),
                 ("cheeger", str, "witness", "witness | exact | spectral | none")],
    "tower": [("rank", int, 2, "free rank"), ("depth", int, 2, "number of levels")],
    "bassserre": [("a", str, "cyclic:2", "factor A"), ("b", str, "cyclic:3", "factor B"),
                  ("radius", int, 3, "tree ball radius"), ("qi_radius", int, 4, "basis ball radius for the QI check")],
    "cheeger": [("graph", str, None, "graph file"), ("group", str, None, "group spec (Cayley graph)"),
                ("gens", _ints, None, "generators"), ("mode", str, "auto", "exact | spectral | auto")],
    "embed": [("rank", int, 2, "tower rank"), ("level", int, 2, "tower level"), ("t", float, 0.1, "Gaussian parameter"),
              ("l_max", int, 16, "direct-sum truncation"), ("R", int, 1, "gluing scale"), ("L", int, 4, "cover separation"),
              ("core_radius", int, 2, "radius of the core ball for gluing")],
    "union": [("rank", int, 1, "tower rank"), ("depth", int, 10, "number of components"),
              ("radii", _ints, [1, 10, 100], "radii R for axiom (2)")],
    "treepartition": [("trees", int, 10, "number of random trees"), ("size", int, 500, "vertices per tree"),
                      ("max_degree", int, 5, "degree bound"), ("R", int, 5, "scale R"), ("eps", _fraction, Fraction(1), "epsilon (rational)"),
                      ("weights", _bool, False, "also write the weights CSV of the first tree")],
    "extension": [("a", str, "cyclic:2", "factor A"), ("b", str, "cyclic:3", "factor B"), ("k", int, 1, "tower depth")],
    "verify": [("full", _bool, False, "acceptance-scale parameters"), ("group_table", str, None, "also validate a table file")],
}


def read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boxlab", description="Finite quotients of free products and their coarse geometry.")
    p.add_argument("--version", action="version", version=f"boxlab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, params in PARAMS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="key=value config file")
        for flag, _typ, default, help_ in COMMON + params:
            sp.add_argument(f"--{flag.replace('_', '-')}", dest=flag, default=None,
                            help=f"{help_} (default: {default})")
    return p


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    cfg = read_config(args.config)
    known = {flag for flag, *_ in COMMON + PARAMS[args.command]}
    unknown = set(cfg) - known
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for flag, typ, default, _ in COMMON + PARAMS[args.command]:
        raw = getattr(args, flag)
        if raw is None:
            raw = cfg.get(flag)
        if raw is None:
            out[flag] = default
            continue
        try:
            out[flag] = typ(raw)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise InputError(f"bad value for {flag}: {raw!r} ({exc})") from None
    return out


class Run:
    """Collects output files, check results and the manifest for one command."""

    def __init__(self, command: str, params: dict[str, Any]) -> None:
        self.command = command
        self.params = params
        self.dir = Path(params["report"])
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, dict] = {}
        self.checks: dict[str, bool] = {}
        self.cap_error = ""

    def record(self, name: str, module: str, **parameters) -> Path:
        self.files[name] = {"module": module, "parameters": _jsonable(parameters)}
        return self.dir / name

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks[name] = bool(ok)
        print(f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else ""))

    def write_json(self, name: str, module: str, data: dict, **parameters) -> None:
        path = self.record(name, module, **parameters)
        body = {"schema_version": SCHEMA_VERSION, **_jsonable(data)}
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")

    def finish(self) -> int:
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "parameters": _jsonable({k: v for k, v in self.params.items() if k != "report"}),
            "files": self.files,
            "checks": self.checks,
            "passed": all(self.checks.values()),
        }
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                                encoding="utf-8", newline="\n")
        if self.cap_error:
            raise CapExceeded(self.cap_error)
        return 0 if all(self.checks.values()) else 1


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)] + [",".join("" if v is None else str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


# -- subcommands ---------------------------------------------------------------


def cmd_group(run: Run, p: dict) -> None:
    if not p["spec"]:
        raise InputError("--spec is required")
    g = group_from_spec(p["spec"])
    gens = p["gens"] if p["gens"] is not None else g.non_identity()
    sym = g.symmetric_closure(gens)
    cay = cayley_multigraph(g, sym)
    run.record("group_table.txt", "group-core", spec=p["spec"]).write_text(g.to_text(), encoding="utf-8", newline="\n")
    cay.write(run.record("cayley.graph", "group-core", spec=p["spec"], gens=sym))
    gen_span = len(g.generated_subgroup(gens)) if g.order > 1 else 1
    run.write_json("group.json", "group-core", {
        "spec": p["spec"], "order": g.order, "element_orders": [g.element_order(x) for x in g.elements()],
        "subgroup_count": len(g.subgroups()), "generators": sym, "generated_order": gen_span,
    }, spec=p["spec"], gens=sym)
    run.check("group_axioms", True, f"order {g.order}")
    run.check("generates", gen_span == g.order, f"generated subgroup of order {gen_span}")


def cmd_baumslag(run: Run, p: dict) -> None:
    fp = FreeProduct(group_from_spec(p["a"]), group_from_spec(p["b"]))
    k, L = p["k"], p["L"] if p["L"] is not None else p["k"]
    rep = baumslag.build_sigma(fp, k)
    gens = fp.full_generating_set()
    graph = baumslag.schreier_graph(rep, gens)
    graph.write(run.record("schreier.graph", "baumslag", a=p["a"], b=p["b"], k=k))
    faith = baumslag.faithfulness_report(rep, L)
    order = baumslag.quotient_order(rep)
    run.check("faithfulness", faith.passed, f"{faith.checked} words of syllable length <= {L}")
    data = {"a": p["a"], "b": p["b"], "k": k, "degree": rep.degree, "quotient_order": order,
            "faithfulness": {"L": L, "checked": faith.checked, "failures": [fp.format(w) for w in faith.failures[:20]]}}
    mode = p["cheeger"]
    if mode == "witness":
        rows = expansion.folner_table(fp, list(range(1, k + 1)))
        expansion.write_folner_csv(rows, run.record("folner.csv", "expansion", a=p["a"], b=p["b"], k=list(range(1, k + 1)), side="A"))
        s = baumslag.effective_generator_count(fp, gens)
        for kk in range(1, k + 1):
            wa = expansion.folner_witness(fp, kk, A_SIDE, exact_cheeger=False)
            wb = expansion.folner_witness(fp, kk, B_SIDE, exact_cheeger=False)
            run.check(f"folner_k{kk}", wa.boundary <= s and wb.boundary <= s and len(wa.P) + len(wb.P) == wa.words + 1,
                      f"|dP| = {wa.boundary} <= |S| = {s}, ratio {wa.ratio}")
        data["folner"] = rows
    elif mode in ("exact", "spectral"):
        res = expansion.cheeger_exact(graph) if mode == "exact" else expansion.cheeger_spectral(graph)
        data["cheeger"] = {"value": res.value, "interval": res.interval, "witness": list(res.witness_set)}
    elif mode != "none":
        raise InputError("--cheeger must be witness, exact, spectral or none")
    run.write_json("baumslag.json", "baumslag", data, a=p["a"], b=p["b"], k=k, L=L)


def cmd_tower(run: Run, p: dict) -> None:
    tw = tower.build_tower(p["rank"], p["depth"])
    rows, wall_rows = [], []
    for lv in tw.levels:
        g = lv.graph
        g.write(run.record(f"level{lv.level}.graph", "square-tower", rank=p["rank"], level=lv.level))
        rows.append((lv.level, g.vertex_count, g.edge_count, lv.girth_simple, g.cycle_rank()))
        if lv.has_walls:
            tower.write_signatures_csv(lv, run.record(f"level{lv.level}_signatures.csv", "square-tower", rank=p["rank"], level=lv.level))
            rep = tower.girth_scale_report(lv)
            seps = tower.wall_separation_counts(lv)
            wall_rows.append((lv.level, rep["vertices"], rep["girth"], rep["dw_le_d_violations"],
                              rep["equal_below_half_girth_violations"], rep["girth_iff_violations"], min(seps), max(seps)))
            run.check(f"wall_metric_level{lv.level}", rep["dw_le_d_violations"] == 0
                      and rep["equal_below_half_girth_violations"] == 0 and set(seps) == {2})
            prof = metric.profile(tower.wall_embedding(lv), metric.MetricComponent(g.distance_matrix()))
            prof.write_csv(run.record(f"level{lv.level}_profile.csv", "metric-lab", rank=p["rank"], level=lv.level, embedding="wall"))
        run.check(f"cycle_rank_level{lv.level}", g.cycle_rank() == 1 + g.vertex_count * (p["rank"] - 1))
    _csv(run.record("girth.csv", "square-tower", rank=p["rank"], depth=p["depth"]),
         ["level", "vertices", "edges", "girth", "cycle_rank"], rows)
    _csv(run.record("wall_metric.csv", "square-tower", rank=p["rank"], depth=p["depth"]),
         ["level", "vertices", "girth", "dw_gt_d", "dw_ne_d_below_half_girth", "girth_iff_mismatch", "min_wall_components", "max_wall_components"],
         wall_rows)
    run.write_json("tower.json", "square-tower", {"rank": p["rank"], "levels": [r[1] for r in rows], "truncated": tw.truncated,
                                                  "truncation_reason": tw.truncation_reason}, rank=p["rank"], depth=p["depth"])
    if tw.truncated:
        run.cap_error = f"level {len(tw.levels) + 1} not built: {tw.truncation_reason}"


def cmd_bassserre(run: Run, p: dict) -> None:
    fp = FreeProduct(group_from_spec(p["a"]), group_from_spec(p["b"]))
    ball = bassserre.tree_ball(fp, p["radius"])
    bassserre.write_tree_ball(fp, ball, run.record("tree_ball.graph", "bass-serre", a=p["a"], b=p["b"], radius=p["radius"]),
                              run.record("tree_ball.csv", "bass-serre", a=p["a"], b=p["b"], radius=p["radius"]))
    run.check("tree_ball_is_tree", ball.graph.cycle_rank() == 0 and ball.graph.is_connected(), f"{ball.graph.vertex_count} cosets")
    r = bassserre.qi_report(fp, p["qi_radius"])
    run.check("qi_inequality", r.passed, f"{r.checked} elements, {len(r.violations)} violations")
    run.write_json("qi.json", "bass-serre", {
        "radius": r.radius, "checked": r.checked, "violations": r.violations[:20], "basis_distances": r.basis_distances,
        "best_multiplicative": r.best_multiplicative, "best_additive": r.best_additive, "rewrite_mismatches": r.rewrite_mismatches,
    }, a=p["a"], b=p["b"], qi_radius=p["qi_radius"])


def cmd_cheeger(run: Run, p: dict) -> None:
    if p["graph"]:
        graph = read_graph(p["graph"])
        source = p["graph"]
    elif p["group"]:
        g = group_from_spec(p["group"])
        graph = cayley_multigraph(g, g.symmetric_closure(p["gens"] if p["gens"] is not None else g.non_identity()))
        source = p["group"]
    else:
        raise InputError("give --graph or --group")
    mode = p["mode"]
    if mode == "auto":
        mode = "exact" if graph.vertex_count <= expansion.EXACT_MAX_VERTICES else "spectral"
    data: dict[str, Any] = {"source": source, "vertices": graph.vertex_count, "edges": graph.edge_count}
    if mode == "exact":
        ex = expansion.cheeger_exact(graph)
        data["exact"] = {"value": ex.value, "witness": list(ex.witness_set)}
        if graph.regular_degree() and graph.is_connected():
            sp = expansion.cheeger_spectral(graph)
            data["spectral"] = {"interval": sp.interval, "eigenvalue": sp.eigenvalue}
            run.check("spectral_contains_exact", sp.contains(ex.value))
    elif mode == "spectral":
        sp = expansion.cheeger_spectral(graph)
        data["spectral"] = {"interval": sp.interval, "eigenvalue": sp.eigenvalue}
    else:
        raise InputError("--mode must be exact, spectral or auto")
    run.write_json("cheeger.json", "expansion", data, source=source, mode=mode)


def cmd_embed(run: Run, p: dict) -> None:
    tw = tower.build_tower(p["rank"], p["level"])
    if len(tw.levels) < p["level"] or p["level"] < 2:
        raise InputError(f"level {p['level']} unavailable (need 2 <= level <= {len(tw.levels)})")
    lv = tw.levels[p["level"] - 1]
    d = lv.graph.distance_matrix()
    sq = tower.wall_distance_matrix(lv).astype(float)
    fam = metric.gaussian_family(t=p["t"], sqdist=sq)
    run.check("gaussian_psd", fam.min_eigenvalue >= -metric.PSD_TOL, f"min eigenvalue {fam.min_eigenvalue:.3e}")
    ds = metric.gaussian_direct_sum(d, sq, L_max=p["l_max"])
    run.check("direct_sum_upper", ds.upper_violations == 0, "||F(x)-F(y)|| <= d + 1")
    run.check("direct_sum_staircase", ds.lower_violations == 0, f"M_l running max {ds.M_running}")
    metric.write_embedding_csv([ds.vectors], run.record("direct_sum.csv", "metric-lab", rank=p["rank"], level=p["level"], l_max=p["l_max"]))
    metric.profile_from_pairs(d, metric.pair_distances(ds.vectors)).write_csv(
        run.record("direct_sum_profile.csv", "metric-lab", rank=p["rank"], level=p["level"], l_max=p["l_max"]))

    # glue: a ball around vertex 0 as core, its complement as the single outer piece
    comp = metric.MetricComponent(d)
    core = np.flatnonzero(d[0] <= p["core_radius"]).tolist()
    rest = np.flatnonzero(d[0] > p["core_radius"]).tolist()
    pou = treepartition.separated_cover_partition(comp, lv.graph, core, [rest] if rest else [], p["L"])
    R = p["R"]
    locals_ = []
    eps = 0.5
    for piece in pou.pieces:
        dom = np.flatnonzero((d[list(piece)] <= R).any(axis=0))
        sub_d, sub_sq = d[np.ix_(dom, dom)], sq[np.ix_(dom, dom)]
        t = metric.gaussian_parameter(sub_sq, sub_d, eps, R)
        locals_.append((dom.tolist(), metric.gaussian_family(t=t, sqdist=sub_sq).vectors()))
    glue = metric.glue_embeddings(pou.matrix(), locals_, d, R)
    run.check("glue_bound", glue.passed, f"max {glue.max_pair:.6f} <= {glue.bound:.6f}")
    run.write_json("embed.json", "metric-lab", {
        "gaussian": {"t": p["t"], "min_eigenvalue": fam.min_eigenvalue},
        "direct_sum": {"l_max": p["l_max"], "M": ds.M, "M_running": ds.M_running, "validity": ds.validity,
                       "upper_violations": ds.upper_violations, "lower_violations": ds.lower_violations},
        "glue": {"R": R, "L": p["L"], "pieces": len(pou.pieces), "eps_partition": glue.eps_partition,
                 "eps_local": glue.eps_local, "max_pair": glue.max_pair, "bound": glue.bound, "max_norm_error": glue.max_norm_error},
    }, rank=p["rank"], level=p["level"], t=p["t"], l_max=p["l_max"], R=R, L=p["L"])


def cmd_union(run: Run, p: dict) -> None:
    tw = tower.build_tower(p["rank"], p["depth"])
    comps = [metric.MetricComponent.from_graph(lv.graph, 0, f"X{lv.level}") for lv in tw.levels]
    u = metric.coarse_union(comps)
    r = metric.check_coarse_axioms(u, p["radii"])
    run.check("axiom1", r.axiom1_violations == 0, f"{r.axiom1_checked} cross pairs")
    run.check("axiom2", all(v["violations"] == 0 for v in r.radii.values()),
              ", ".join(f"R={R}: {len(v['nonempty'])} nonempty" for R, v in r.radii.items()))
    run.write_json("union.json", "metric-lab", {
        "offsets": u.offsets, "sizes": [c.point_count for c in comps], "axiom1_checked": r.axiom1_checked,
        "axiom1_violations": r.axiom1_violations, "radii": {str(R): v for R, v in r.radii.items()},
    }, rank=p["rank"], depth=p["depth"], radii=p["radii"])


def cmd_treepartition(run: Run, p: dict) -> None:
    eps = p["eps"]
    trees = [treepartition.random_bounded_tree(p["size"], p["max_degree"], p["seed"] + i) for i in range(p["trees"])]
    try:
        cert = treepartition.equi_exact_certificate(trees, p["R"], eps)
        ok = True
    except VerificationError as exc:
        cert, ok = {"refused": str(exc)}, False
    run.check("certificate", ok, f"L = {cert.get('L')}, C = {cert.get('C')}" if ok else cert["refused"])
    run.write_json("certificate.json", "tree-partition", cert, trees=p["trees"], size=p["size"], max_degree=p["max_degree"],
                   R=p["R"], eps=str(eps), seed=p["seed"])
    if p["weights"] and ok:
        pou = treepartition.partition_of_unity(trees[0], cert["L"])
        pou.write_csv(run.record("weights.csv", "tree-partition", tree=0, L=cert["L"], seed=p["seed"]))


def cmd_extension(run: Run, p: dict) -> None:
    r = extension.extension_experiment(group_from_spec(p["a"]), group_from_spec(p["b"]), p["k"])
    for name, ok in r.to_json()["checks"].items():
        run.check(name, ok)
    r.write_json(run.record("extension.json", "metric-lab", a=p["a"], b=p["b"], k=p["k"]))


def cmd_verify(run: Run, p: dict) -> None:
    checks = list(verify.SUITE)
    if p["group_table"]:
        checks.insert(0, ("group_table", verify.group_table_check(p["group_table"])))
    results: dict[str, bool] = {}

    def out(line: str) -> None:
        status, rest = line.split(" ", 1)
        results[rest.split(":", 1)[0]] = status == "PASS"
        print(line)

    verify.run_suite(checks, p["full"], out)
    run.checks.update(results)
    run.write_json("verify.json", "cli", {"full": p["full"], "results": results}, full=p["full"])


COMMANDS = {
    "group": cmd_group, "baumslag": cmd_baumslag, "tower": cmd_tower, "bassserre": cmd_bassserre,
    "cheeger": cmd_cheeger, "embed": cmd_embed, "union": cmd_union, "treepartition": cmd_treepartition,
    "extension": cmd_extension, "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        params = resolve(args)
        run = Run(args.command, params)
        log.info("size cap %d", size_cap())
        COMMANDS[args.command](run, params)
        return run.finish()
    except CapExceeded as exc:
        print(f"error: cap exceeded: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BoxlabError as exc:
        print(f"FAIL {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
