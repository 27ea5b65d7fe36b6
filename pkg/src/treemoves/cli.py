"""Command-line front end: ``treemoves <command> ...``.

Exit status is 0 on success, 1 when the input is well formed but violates a
precondition (or a checked property fails), and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import constructions as cons
from .forest import LabelPartition, forest_to_moves, min_forest_bruteforce, validate_forest
from .moves import MoveRecord, Op, apply_move, neighbors
from .search import eccentricity_table, exact_distance, expectation_experiment, scaling_experiment
from .tree import BinaryTree, parse_newick, random_tree, to_newick


class UsageError(Exception):
    """Bad flag combination; reported with exit status 2."""


# ---------------------------------------------------------------------- #
# input / output helpers
# ---------------------------------------------------------------------- #

def _read_trees(values) -> list[BinaryTree]:
    trees = []
    for value in values or ():
        if os.path.isfile(value):
            text = Path(value).read_text()
            chunks = [c.strip() for c in text.split(";") if c.strip()]
            if not chunks:
                raise ValueError(f"{value}: no trees found")
            trees.extend(parse_newick(c + ";") for c in chunks)
        else:
            trees.append(parse_newick(value))
    return trees


def _need_trees(args, count=None, at_least=None) -> list[BinaryTree]:
    trees = _read_trees(args.tree)
    if count is not None and len(trees) != count:
        raise UsageError(f"--tree: expected {count} trees, got {len(trees)}")
    if at_least is not None and len(trees) < at_least:
        raise UsageError(f"--tree: expected at least {at_least} trees, got {len(trees)}")
    return trees


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError("--seed is required for randomized commands")
    return args.seed


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (frozenset, set)):
        return sorted(x)
    if isinstance(x, tuple):
        return list(x)
    if isinstance(x, Op):
        return str(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _dump_json(obj) -> str:
    return json.dumps(obj, default=_jsonable, sort_keys=True, indent=2) + "\n"


def _csv(rows: list[dict], columns=None) -> str:
    if not rows:
        return ""
    columns = columns or list(rows[0])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in columns})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, frozenset, set)):
        return " ".join(map(str, sorted(v) if isinstance(v, (set, frozenset)) else v))
    return v


def _emit(args, *, text: str, rows: list[dict] | None = None, obj=None, columns=None) -> None:
    fmt = args.format or args.default_format
    if fmt == "json":
        out = _dump_json(obj if obj is not None else rows)
    elif fmt == "csv" and rows is not None:
        out = _csv(rows, columns)
    else:
        out = text if text.endswith("\n") else text + "\n"
    sys.stdout.write(out)


def _out_dir(args) -> Path | None:
    if not getattr(args, "out", None):
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_reports(out: Path, stem: str, rows: list[dict], obj, columns=None) -> list[Path]:
    paths = [out / f"{stem}.csv", out / f"{stem}.json"]
    paths[0].write_text(_csv(rows, columns))
    paths[1].write_text(_dump_json(obj))
    return paths


# ---------------------------------------------------------------------- #
# commands
# ---------------------------------------------------------------------- #

def cmd_distance(args) -> int:
    a, b = _need_trees(args, count=2)
    res = exact_distance(a, b, args.op, with_path=args.path)
    obj = {"op": str(Op.parse(args.op)), "distance": res.distance, "explored": res.explored}
    if res.path is not None:
        obj["path"] = [m.to_dict() for m in res.path]
    row = {"op": obj["op"], "distance": res.distance, "explored": res.explored}
    _emit(args, text=str(res.distance), rows=[row], obj=obj)
    return 0


def cmd_neighbors(args) -> int:
    (tree,) = _need_trees(args, count=1)
    forms = sorted(f.text + ";" for f in neighbors(tree, args.op))
    _emit(args, text="\n".join(forms), rows=[{"newick": f} for f in forms], obj=forms)
    return 0


def cmd_table(args) -> int:
    ns = args.n or [2, 3, 4, 5, 6]
    table = [eccentricity_table(n) for n in ns]
    rows = [dict(zip(t.COLUMNS, t.values())) for t in table]
    text = "\n".join(t.csv() for t in table)
    obj = [dict(r, centers=t.centers) for r, t in zip(rows, table)]
    _emit(args, text=text, rows=rows, obj=obj)
    out = _out_dir(args)
    if out:
        from .plotting import plot_table
        _write_reports(out, "table", rows, obj)
        plot_table(rows, out / "table.png")
    return 0


def _load_forest(args) -> LabelPartition:
    if not args.forest:
        raise UsageError("--forest is required")
    return LabelPartition.from_text(Path(args.forest).read_text())


def cmd_forest(args) -> int:
    trees = _need_trees(args, at_least=2)
    if args.action == "validate":
        part = _load_forest(args)
        ok = validate_forest(trees, part, args.rooted)
        obj = {"valid": ok, "m": part.m, "rooted": args.rooted}
        _emit(args, text=f"{'valid' if ok else 'invalid'}, m={part.m}", rows=[obj], obj=obj)
        return 0 if ok else 1
    if args.action == "min":
        got = min_forest_bruteforce(trees, args.rooted, count_all=args.count_all)
        m, part = got[0], got[1]
        obj = {"m": m, "rooted": args.rooted, "blocks": part.to_lists()}
        if args.count_all:
            obj["count"] = got[2]
        text = f"m={m}\n" + part.to_text()
        if args.count_all:
            text = f"m={m}, minimal forests={got[2]}\n" + part.to_text()
        _emit(args, text=text, rows=[{"block": " ".join(map(str, b))} for b in part.to_lists()], obj=obj)
        return 0
    if len(trees) != 2:
        raise UsageError("--tree: to-moves needs exactly 2 trees")
    part = _load_forest(args)
    moves = forest_to_moves(trees[0], trees[1], part, args.rooted)
    records = [m.to_dict() for m in moves]
    text = "".join(m.to_json() + "\n" for m in moves)
    _emit(args, text=text or "\n", rows=[{"move": m.to_json()} for m in moves], obj=records)
    return 0


def _read_moves(path: str) -> list[MoveRecord]:
    text = Path(path).read_text().strip()
    if not text:
        return []
    if text.startswith("["):
        return [MoveRecord.from_dict(d) for d in json.loads(text)]
    return [MoveRecord.from_json(line) for line in text.splitlines() if line.strip()]


def cmd_replay(args) -> int:
    (tree,) = _need_trees(args, count=1)
    if not args.moves:
        raise UsageError("--moves is required")
    cur = tree
    trail = [to_newick(cur)]
    for move in _read_moves(args.moves):
        cur = apply_move(cur, move)
        trail.append(to_newick(cur))
    _emit(args, text=trail[-1], rows=[{"step": i, "newick": t} for i, t in enumerate(trail)],
          obj={"result": trail[-1], "steps": trail})
    return 0


def _random_trees(args, k: int) -> list[BinaryTree]:
    if args.n is None or len(args.n) != 1:
        raise UsageError("--n: give one value (or pass --tree)")
    rng = random.Random(_need_seed(args))
    return [random_tree(args.n[0], rng=rng) for _ in range(k)]


def _forest_report(args, trees, cert, stem: str) -> int:
    part = cert.partition
    info = dict(cert.info)
    obj = {"m": part.m, "blocks": part.to_lists(), "info": info,
           "valid": validate_forest(trees, part, cert.rooted)}
    text = f"m={part.m}\n" + "".join(f"{key}={info[key]}\n" for key in sorted(info) if key != "tokens")
    text += part.to_text()
    rows = [{"block": " ".join(map(str, b))} for b in part.to_lists()]
    _emit(args, text=text, rows=rows, obj=obj)
    out = _out_dir(args)
    if out:
        from .plotting import plot_blocks
        _write_reports(out, stem, rows, obj)
        plot_blocks([len(b) for b in part.blocks], out / f"{stem}.png", title=stem)
    return 0 if obj["valid"] else 1


def cmd_construct(args) -> int:
    kind = args.kind
    if kind == "caterpillar":
        if not args.n or len(args.n) != 1:
            raise UsageError("--n: give one value")
        a, b = cons.caterpillar_pair(args.n[0])
        pair = [to_newick(a), to_newick(b)]
        _emit(args, text="\n".join(pair), rows=[{"newick": t} for t in pair], obj=pair)
        return 0
    if kind == "orderings":
        if not args.n or len(args.n) != 1 or args.b is None:
            raise UsageError("orderings needs --n, --b and --k")
        fam = cons.ordering_family(args.n[0], args.b, args.k)
        bad = fam.violations() if args.check else None
        rows = [{"label": x, **{f"phi_{j + 1}": p[x] for j, p in enumerate(fam.perms)}}
                for x in range(fam.n + 1)]
        obj = {"n": fam.n, "k": fam.k, "b": fam.b, "perms": [list(p) for p in fam.perms]}
        text = "\n".join(" ".join(map(str, fam.inverse(j))) for j in range(fam.k))
        if bad is not None:
            obj["violations"] = len(bad)
            text += f"\nviolations={len(bad)}"
        _emit(args, text=text, rows=rows, obj=obj)
        return 0 if not bad else 1
    k = args.k
    if kind == "adversarial":
        shapes = _read_trees(args.tree) or _random_trees(args, k)
        trees, cert = cons.adversarial_labeling(shapes, fixed_first=args.fixed_first)
        obj = {"n": cert.n, "k": cert.k, "t": cert.t, "z": cert.z, "bound": cert.bound,
               "info": cert.info, "trees": [to_newick(t) for t in trees],
               "parts": [[sorted(l) for l in d.labels] for d in cert.decompositions]}
        rows = [{"n": cert.n, "k": cert.k, "t": cert.t, "z": cert.z, "bound": cert.bound}]
        text = cert.report() + "".join(to_newick(t) + "\n" for t in trees)
        _emit(args, text=text, rows=rows, obj=obj)
        out = _out_dir(args)
        if out:
            from .plotting import plot_part_sizes
            _write_reports(out, "adversarial", rows, obj)
            plot_part_sizes([d.leaf_counts for d in cert.decompositions], out / "adversarial.png",
                            float(cert.info["a_used"]))
        return 0
    trees = _read_trees(args.tree) or _random_trees(args, k)
    if kind == "token":
        return _forest_report(args, trees, cons.token_forest(trees), "token")
    return _forest_report(args, trees, cons.super_pair_forest(trees, args.b), "superpair")


def cmd_experiment(args) -> int:
    seed = _need_seed(args)
    ns = args.n or [512, 1024, 2048, 4096, 8192]
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if len(ns) >= 2:
        reports, fit = scaling_experiment(ns, args.trials, seed, k=args.k)
        fit = {"S_slope": fit["S_slope"], "lower_gap_slope": fit["lower_gap_slope"]}
    else:
        reports, fit = [expectation_experiment(ns[0], args.trials, seed, k=args.k)], None
    summaries = [r.summary for r in reports]
    obj = {"seed": seed, "summaries": summaries, "fit": fit}
    cols = ["n", "k", "trials", "S_mean", "S_se", "upper_gap_mean", "upper_gap_se",
            "lower_gap_mean", "lower_gap_se", "violations"]
    text = _csv(summaries, cols)
    if fit:
        text += f"S_slope={fit['S_slope']:.4f}\nlower_gap_slope={fit['lower_gap_slope']:.4f}\n"
    _emit(args, text=text, rows=summaries, obj=obj, columns=cols)
    out = _out_dir(args)
    if out:
        from .plotting import plot_scaling, plot_trials
        trial_rows = [dict(r, n=rep.n) for rep in reports for r in rep.rows]
        (out / "trials.csv").write_text(_csv(trial_rows, ["n"] + [c for c in trial_rows[0] if c != "n"]))
        _write_reports(out, "summary", summaries, obj, cols)
        for rep in reports:
            plot_trials(rep.rows, out / f"trials_n{rep.n}.png", rep.n)
        if len(ns) >= 2:
            plot_scaling(summaries, out / "scaling.png", fit)
    violations = sum(s["violations"] for s in summaries)
    return 0 if violations == 0 else 1


# ---------------------------------------------------------------------- #
# parser
# ---------------------------------------------------------------------- #

def _op(value: str) -> str:
    try:
        return Op.parse(value).value
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json", "text"), default=None)
    common.add_argument("--json", dest="format", action="store_const", const="json",
                        help="same as --format json")
    common.add_argument("--tree", action="append", metavar="NEWICK_OR_PATH",
                        help="tree as inline Newick or a file; repeat for several trees")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", metavar="DIR", help="also write CSV, JSON and PNG files here")

    p = argparse.ArgumentParser(prog="treemoves", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("distance", parents=[common], help="exact move distance of two trees")
    s.add_argument("--op", type=_op, required=True)
    s.add_argument("--no-path", dest="path", action="store_false", help="skip path reconstruction")
    s.set_defaults(func=cmd_distance, default_format="text")

    s = sub.add_parser("neighbors", parents=[common], help="trees one move away")
    s.add_argument("--op", type=_op, required=True)
    s.set_defaults(func=cmd_neighbors, default_format="text")

    s = sub.add_parser("table", parents=[common], help="radius and diameter of small tree spaces")
    s.add_argument("--n", type=int, action="append")
    s.set_defaults(func=cmd_table, default_format="csv")

    s = sub.add_parser("forest", parents=[common], help="agreement forests")
    s.add_argument("action", choices=("validate", "min", "to-moves"))
    s.add_argument("--forest", metavar="PATH", help="one block per line, labels separated by spaces")
    s.add_argument("--rooted", action="store_true")
    s.add_argument("--count-all", action="store_true", help="also count the minimal forests")
    s.set_defaults(func=cmd_forest, default_format="text")

    s = sub.add_parser("replay", parents=[common], help="apply a JSON move sequence to a tree")
    s.add_argument("--moves", metavar="PATH", help="JSON list or one JSON move per line")
    s.set_defaults(func=cmd_replay, default_format="text")

    s = sub.add_parser("construct", parents=[common], help="forest and certificate constructions")
    s.add_argument("kind", choices=("token", "adversarial", "superpair", "caterpillar", "orderings"))
    s.add_argument("--n", type=int, action="append")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--b", type=int, default=None)
    s.add_argument("--check", action="store_true", help="orderings: check every pair")
    s.add_argument("--fixed-first", action="store_true",
                   help="adversarial: keep the first tree's labels")
    s.set_defaults(func=cmd_construct, default_format="text")

    s = sub.add_parser("experiment", parents=[common], help="Monte-Carlo experiments")
    s.add_argument("kind", choices=("expectation",))
    s.add_argument("--n", type=int, action="append")
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--k", type=int, default=2)
    s.set_defaults(func=cmd_experiment, default_format="csv")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
