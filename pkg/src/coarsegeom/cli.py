"""Command-line front end.

Exit status: 0 on success, 2 on a validation failure (diagnostic JSON
``{code, message, witness}`` on stderr), 1 on an internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from coarsegeom import cube_complex as cc
from coarsegeom import median_structures as ms
from coarsegeom import metric_core as mc
from coarsegeom import quasi_ruler as qr
from coarsegeom import separation as sep
from coarsegeom import tree_boundary as tb
from coarsegeom.errors import ValidationError


# --------------------------------------------------------------------------
# I/O helpers
# --------------------------------------------------------------------------


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and obj == float("inf"):
        return "inf"
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2)


def read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError("missing-file", f"no such file: {path}", path) from None
    except json.JSONDecodeError as exc:
        raise ValidationError("malformed-json", f"{path}: {exc.msg}", {"line": exc.lineno, "column": exc.colno}) from None


def write_json(path: str, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj) + "\n")


def load_complex(ref: str) -> cc.CubeSkeleton:
    """A complex JSON file, or a fixture spec such as ``grid(3,3)``."""
    if os.path.exists(ref):
        return cc.CubeSkeleton.from_json(read_json(ref))
    if "(" in ref:
        return cc.generate_fixture(ref)
    raise ValidationError("missing-file", f"no such file or fixture spec: {ref}", ref)


def load_space(ref: str) -> mc.FiniteMetricSpace:
    return mc.FiniteMetricSpace.from_json(read_json(ref))


def load_path(ref: str, space: mc.FiniteMetricSpace | None) -> mc.DiscretePath:
    """A path JSON file; ``space`` overrides an inline space."""
    data = read_json(ref)
    if isinstance(data, list):
        data = {"points": data}
    if space is None and not isinstance(data.get("space"), dict):
        raise ValidationError("bad-json", "path needs an inline space or --space", ref)
    return mc.DiscretePath.from_json(data, space)


def space_point(space: mc.FiniteMetricSpace, name: str) -> Any:
    """The point of ``space`` whose label prints as ``name``."""
    if name in space.points:
        return name
    for p in space.points:
        if str(p) == name:
            return p
    raise ValidationError("unknown-point", "no such point in the space", name)


def path_points(ref: str) -> list:
    data = read_json(ref)
    pts = data if isinstance(data, list) else data.get("points")
    if not isinstance(pts, list):
        raise ValidationError("bad-json", "path JSON needs a 'points' list", ref)
    return pts


def _table(payload: Any) -> str:
    if isinstance(payload, dict) and "matrix" in payload:
        rows = payload["matrix"]
        labels = payload.get("labels", [str(i) for i in range(len(rows))])
        width = max(len(str(x)) for x in [*labels, *[v for r in rows for v in r]])
        head = " " * width + " " + " ".join(f"{lab:>{width}}" for lab in labels)
        body = [f"{lab:>{width}} " + " ".join(f"{str(v):>{width}}" for v in r) for lab, r in zip(labels, rows)]
        return "\n".join([head, *body])
    if isinstance(payload, dict):
        return "\n".join(f"{k}\t{json.dumps(_jsonable(v), sort_keys=True)}" for k, v in sorted(payload.items()))
    return json.dumps(_jsonable(payload), sort_keys=True)


def emit(args: argparse.Namespace, payload: Any, dot: str | None = None) -> None:
    if args.format == "dot":
        if dot is None:
            raise ValidationError("bad-format", "this command has no DOT output", args.command)
        text = dot
    elif args.format == "table":
        text = _table(payload)
    else:
        text = dumps(payload)
    out = getattr(args, "output", None)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_fixture(args: argparse.Namespace) -> None:
    s = cc.generate_fixture(args.spec)
    if args.out:
        write_json(args.out, s.to_json())
    emit(args, s.to_json() if not args.out else {"vertices": len(s.vertices), "hyperplanes": len(s.hyperplanes),
                                                 "out": args.out}, cc.to_dot(s))


def cmd_hyperplanes(args: argparse.Namespace) -> None:
    s = load_complex(args.complex)
    payload = cc.side_matrix_json(s)
    payload["classes"] = {
        h.id: [[s.vertices[u], s.vertices[v]] for u, v in sorted(h.edge_class)] for h in s.hyperplanes
    }
    emit(args, payload, cc.to_dot(s))


def cmd_dist(args: argparse.Namespace) -> None:
    s = load_complex(args.complex)
    payload: dict[str, Any] = {"x": args.x, "y": args.y, "l1": cc.l1_distance(s, args.x, args.y)}
    payload["separating"] = [s.hyperplanes[h].id for h in cc.separating_hyperplanes(s, args.x, args.y).hyperplanes] \
        if args.x != args.y else []
    if args.L is not None:
        payload["L"] = args.L
        payload["dl"] = sep.dl_distance(s, args.L, args.x, args.y, args.pairwise)
        payload["dl_chain"] = sep.dl_chain(s, args.L, args.x, args.y, args.pairwise) if args.x != args.y else []
    emit(args, payload)


def cmd_median_point(args: argparse.Namespace) -> None:
    s = load_complex(args.complex)
    emit(args, {"args": [args.x, args.y, args.z], "median": cc.median(s, args.x, args.y, args.z)})


def cmd_wellsep(args: argparse.Namespace) -> None:
    s = load_complex(args.complex)
    h, k = args.pair
    rep = sep.well_separation_degree(s, h, k)
    payload = rep.to_json()
    if args.L is not None:
        payload["L"] = args.L
        payload["well_separated"] = rep.well_separated(args.L)
    emit(args, payload)


def cmd_dl(args: argparse.Namespace) -> None:
    s = load_complex(args.complex)
    dl = sep.build_dl_space(s, args.L, pairwise=args.pairwise, verify=True, jobs=args.jobs)
    if args.matrix:
        write_json(args.matrix, dl.to_json())
    payload = dict(dl.report)
    payload["L"] = args.L
    payload["convention"] = "pairwise" if args.pairwise else "consecutive"
    if args.format == "table":
        payload = {"matrix": dl.dl.tolist(), "labels": [str(v) for v in s.vertices]}
    emit(args, payload)


def cmd_delta(args: argparse.Namespace) -> None:
    if (args.space is None) == (args.complex is None):
        raise ValidationError("bad-arguments", "give exactly one of --space and --complex")
    if args.space is not None:
        space = load_space(args.space)
        source = {"space": args.space}
    else:
        s = load_complex(args.complex)
        if args.L is None:
            space = s.metric_space()
            source = {"complex": args.complex, "metric": "l1"}
        else:
            space = sep.build_dl_space(s, args.L, verify=False).metric_space()
            source = {"complex": args.complex, "metric": f"dl:{args.L}", "bound": 9 * (args.L + 2)}
    cert = mc.hyperbolicity(space, jobs=args.jobs)
    payload = {"delta": cert.delta, "witness": list(cert.witness), "points": len(space), **source}
    if "bound" in source:
        payload["within_bound"] = cert.delta <= source["bound"]
    emit(args, payload)


def cmd_profile(args: argparse.Namespace) -> None:
    s = load_complex(args.complex)
    prof = sep.chain_profile(s, path_points(args.path), args.L, mc.parse_kappa(args.kappa), args.c)
    emit(args, prof.to_json())


def _ruler_path(args: argparse.Namespace) -> mc.DiscretePath:
    space = load_space(args.space) if args.space else None
    return load_path(args.path, space)


def cmd_ruler_check(args: argparse.Namespace) -> None:
    cert = qr.check_ruler(_ruler_path(args), args.D)
    emit(args, cert.to_json())


def cmd_ruler_param(args: argparse.Namespace) -> None:
    K, C = qr.reparametrisation_constants(args.D, args.eps)
    if args.path is None:
        emit(args, {"D": mc.to_fraction(args.D), "eps": mc.to_fraction(args.eps), "K": K, "C": C})
        return
    rep = qr.reparametrise(_ruler_path(args), args.D, args.eps)
    payload = rep.to_json()
    payload.update(D=mc.to_fraction(args.D), eps=mc.to_fraction(args.eps))
    emit(args, payload)


def _load_rulers(path: str, space: mc.FiniteMetricSpace) -> dict[tuple, mc.DiscretePath]:
    data = read_json(path)
    items = data.get("rulers", data) if isinstance(data, dict) else data
    if not isinstance(items, list):
        raise ValidationError("bad-json", "rulers JSON must be a list of {pair, points}", path)
    out = {}
    for item in items:
        try:
            x, y = item["pair"]
            out[(x, y)] = mc.DiscretePath(space, tuple(item["points"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("bad-json", "each ruler needs 'pair' and 'points'", str(item)) from exc
    return out


def cmd_complete(args: argparse.Namespace) -> None:
    space = load_space(args.space)
    rulers = _load_rulers(args.rulers, space) if args.rulers else {}
    g = qr.geodesic_completion(space, rulers, args.D)
    if args.out:
        write_json(args.out, g.to_json())
    payload = {"nodes": len(g.nodes), "edges": len(g.edges), "certificate": g.certificate}
    emit(args, payload)


def cmd_bound(args: argparse.Namespace) -> None:
    space = load_space(args.space)
    gamma = load_path(args.gamma, space)
    gamma_p = load_path(args.gamma_p, space)
    delta = args.delta if args.delta is not None else mc.estimate_delta(space, jobs=args.jobs)
    rep = qr.check_product_bound(space, gamma, gamma_p, space_point(space, args.o), args.D, delta, args.xp, args.yp)
    payload = rep.to_json()
    payload["delta"] = mc.to_fraction(delta)
    emit(args, payload)


def _oracle(args: argparse.Namespace) -> ms.MedianOracle:
    if os.path.exists(args.oracle):
        data = read_json(args.oracle)
        if isinstance(data, dict) and "kind" not in data and "edges" in data:
            return ms.MedianOracle.exact_cube_median(cc.CubeSkeleton.from_json(data))
        return ms.MedianOracle.from_json(data)
    return ms.MedianOracle.exact_cube_median(load_complex(args.oracle))


def cmd_median_defect(args: argparse.Namespace) -> None:
    emit(args, ms.coarse_median_defect(_oracle(args)).to_json())


def _paths(ref: str, space: mc.FiniteMetricSpace) -> list[mc.DiscretePath]:
    data = read_json(ref)
    items = data.get("paths") if isinstance(data, dict) else data
    if not isinstance(items, list):
        raise ValidationError("bad-json", "family JSON must be a list of paths", ref)
    return [mc.DiscretePath(space, tuple(p if isinstance(p, list) else p["points"])) for p in items]


def cmd_median_converge(args: argparse.Namespace) -> None:
    mu = _oracle(args)
    family = _paths(args.family, mu.space)
    target = mc.DiscretePath(mu.space, tuple(path_points(args.target)))
    score = ms.convergence_score(space_point(mu.space, args.base), family, target, mu, args.tail)
    emit(args, score.to_json(args.r))


def cmd_median_gap(args: argparse.Namespace) -> None:
    mu = _oracle(args)
    base = space_point(mu.space, args.base) if args.base is not None else mu.space.basepoint
    payload = {"A": ms.gromov_median_gap(mu.space, mu, base), "base": base, "metric": mu.metric}
    if args.with_delta:
        payload["delta"] = mc.estimate_delta(mu.space, jobs=args.jobs)
    emit(args, payload)


def cmd_tree_gen(args: argparse.Namespace) -> None:
    fam = tb.generate_family({"levels": args.levels, "rule": args.rule, "seed": args.seed}, args.depth, args.width)
    if args.out:
        write_json(args.out, fam.to_json())
        emit(args, {"vertices": len(fam.level), "levels": fam.m, "depth": fam.depth, "out": args.out,
                    "strongly_entwined": fam.strongly_entwined, "filling": fam.filling})
    else:
        emit(args, fam.to_json())


def cmd_tree_phi(args: argparse.Namespace) -> None:
    a = tb.EntwinedFamily.from_json(read_json(args.a))
    b = tb.EntwinedFamily.from_json(read_json(args.b))
    bij = tb.build_phi(a, b)
    if args.out:
        write_json(args.out, bij.to_json())
        emit(args, {"mapped": len(bij.forward), "pairings": len(bij.pairings), "frontier": len(bij.frontier),
                    "out": args.out})
    else:
        emit(args, bij.to_json())


def cmd_tree_verify(args: argparse.Namespace) -> None:
    bij = tb.VertexBijection.from_json(read_json(args.phi))
    report = tb.verify_phi(bij)
    emit(args, report)
    if not report["ok"]:
        raise ValidationError("phi-properties-failed", "the bijection violates a required property",
                              {k: v["witness"] for k, v in report.items() if isinstance(v, dict) and not v["ok"]})


def cmd_tree_boundary(args: argparse.Namespace) -> None:
    bij = tb.VertexBijection.from_json(read_json(args.phi))
    emit(args, tb.boundary_image_identity(bij, args.v))


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every pseudo-random choice")
    common.add_argument("--jobs", type=int, default=1, help="worker threads for the heavy scans")
    common.add_argument("--format", choices=("json", "dot", "table"), default="json")
    common.add_argument("--output", help="write the main output here instead of stdout")

    parser = argparse.ArgumentParser(prog="coarsegeom", description="Exact coarse-geometry diagnostics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Any, help_: str, parent: Any = sub) -> argparse.ArgumentParser:
        p = parent.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    p = add("fixture", cmd_fixture, "generate a named fixture complex")
    p.add_argument("spec", help="e.g. 'path(5)', 'grid(3,3)', 'tree(3,4)', 'tree_x_path(tree(3,3),17)'")
    p.add_argument("--out")

    p = add("hyperplanes", cmd_hyperplanes, "hyperplanes and side matrix of a complex")
    p.add_argument("--complex", required=True, help="complex JSON file or fixture spec")

    p = add("dist", cmd_dist, "combinatorial and d_L distances")
    p.add_argument("--complex", required=True)
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("-L", type=int)
    p.add_argument("--pairwise", action="store_true")

    p = add("wellsep", cmd_wellsep, "well-separation degree of two hyperplanes")
    p.add_argument("--complex", required=True)
    p.add_argument("--pair", nargs=2, required=True)
    p.add_argument("-L", type=int)

    p = add("dl", cmd_dl, "d_L matrix with the hyperbolicity report")
    p.add_argument("--complex", required=True)
    p.add_argument("-L", type=int, required=True)
    p.add_argument("--pairwise", action="store_true")
    p.add_argument("--matrix", help="write the DLSpace JSON here")

    p = add("delta", cmd_delta, "exact four-point hyperbolicity constant")
    p.add_argument("--space")
    p.add_argument("--complex")
    p.add_argument("-L", type=int)

    p = add("profile", cmd_profile, "well-separated chain profile of a geodesic")
    p.add_argument("--complex", required=True)
    p.add_argument("--path", required=True)
    p.add_argument("-L", type=int, required=True)
    p.add_argument("--kappa", required=True, help="'const:c', 'log:a,b' or 'pow:a,p,b'")
    p.add_argument("-c", default="1")

    ruler = sub.add_parser("ruler", help="quasi-ruler checks").add_subparsers(dest="ruler_command", required=True)
    p = add("check", cmd_ruler_check, "test the quasi-ruler conditions", ruler)
    p.add_argument("--space")
    p.add_argument("--path", required=True)
    p.add_argument("-D", required=True)
    p = add("param", cmd_ruler_param, "reparametrisation constants, and times when a path is given", ruler)
    p.add_argument("--space")
    p.add_argument("--path")
    p.add_argument("-D", required=True)
    p.add_argument("--eps", required=True)
    p = add("bound", cmd_bound, "Gromov-product bounds for points on two rulers", ruler)
    p.add_argument("--space", required=True)
    p.add_argument("--gamma", required=True)
    p.add_argument("--gamma-p", dest="gamma_p", required=True)
    p.add_argument("-o", required=True)
    p.add_argument("-D", required=True)
    p.add_argument("--delta")
    p.add_argument("--xp", type=int, required=True)
    p.add_argument("--yp", type=int, required=True)

    p = add("complete", cmd_complete, "geodesic completion graph with its certificate")
    p.add_argument("--space", required=True)
    p.add_argument("--rulers")
    p.add_argument("-D", required=True)
    p.add_argument("--out")

    median = sub.add_parser("median", help="medians and coarse-median diagnostics").add_subparsers(
        dest="median_command", required=True
    )
    p = add("point", cmd_median_point, "exact median of three vertices", median)
    p.add_argument("--complex", required=True)
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("z")
    p = add("defect", cmd_median_defect, "coarse-median axiom defects", median)
    p.add_argument("--oracle", required=True, help="oracle JSON, complex JSON file or fixture spec")
    p = add("converge", cmd_median_converge, "median-topology convergence score", median)
    p.add_argument("--oracle", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("-r", default=None)
    p.add_argument("--tail", type=int)
    p = add("gap", cmd_median_gap, "median versus Gromov-product gap", median)
    p.add_argument("--oracle", required=True)
    p.add_argument("--base")
    p.add_argument("--with-delta", action="store_true")

    tree = sub.add_parser("tree", help="entwined tree families").add_subparsers(dest="tree_command", required=True)
    p = add("gen", cmd_tree_gen, "generate a strongly entwined filling family", tree)
    p.add_argument("--rule", default="regular:+1")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--width", type=int, default=None, help="per-generation width cap")
    p.add_argument("--out")
    p = add("phi", cmd_tree_phi, "build the vertex bijection between two families", tree)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p = add("verify", cmd_tree_verify, "re-verify a bijection", tree)
    p.add_argument("--phi", required=True)
    p = add("boundary", cmd_tree_boundary, "boundary-neighbourhood identity at one vertex", tree)
    p.add_argument("--phi", required=True)
    p.add_argument("-v", required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        sys.stderr.write(dumps(exc.to_json()) + "\n")
        return 2
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(dumps({"code": "internal-error", "message": f"{type(exc).__name__}: {exc}",
                                "witness": None}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
