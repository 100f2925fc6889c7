"""Command-line entry point.

Exit codes: 0 ok, 1 bad input, 2 general-position gate rejected the
instance, 3 partition provider gave up, 4 decoded labels disagree with the
predicate.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import family_count_bound, scheme_exponent, significant, warren_region_bound
from .family import FamilyError, format_rational, parse_family, reduce_predicate, to_bilinear
from .harness import (
    GateRejected,
    InstanceSpec,
    Mismatch,
    decode_file_matrix,
    direct_adjacency,
    encode_points,
    family_text,
    gated_instance,
    general_position_gate,
    plan_family,
    read_points,
    run_roundtrip,
    run_scaling,
    write_points,
)
from .labels import LabelError, decode_blocks, dump_labels, label_stats, load_labels
from .partition import HierarchyParams, PartitionError, ProviderExhausted, check_audit
from .polyparse import FamilySyntaxError

EXIT_OK, EXIT_INPUT, EXIT_GATE, EXIT_PROVIDER, EXIT_MISMATCH = 0, 1, 2, 3, 4

log = logging.getLogger("sagl")


class _Parser(argparse.ArgumentParser):
    # usage errors must not collide with the gate-rejection exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` comments and ``[section]`` lines are ignored."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        value = value.strip("\"'")
        low = value.lower()
        if low in ("true", "false"):
            out[key.replace("-", "_")] = low == "true"
        else:
            out[key.replace("-", "_")] = value
    return out


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=Fraction, default=Fraction(2), help="load slack factor (default 2)")
    p.add_argument("--max-retries", type=int, default=32)
    p.add_argument("--strict-balance", action="store_true", help="reject splits outside the tight load window")
    p.add_argument("--json", action="store_true", help="machine-readable output")


def _add_family(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--family", choices=("unit-disk", "disk", "dot-product"))
    g.add_argument("--spec", help="family-spec document")
    p.add_argument("--q", type=int, help="dimension of the dot-product family")
    p.add_argument("--t", type=int, default=0, help="dot-product threshold")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="sagl", description="Adjacency labels for semi-algebraic graphs.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", help="key = value file supplying option defaults")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("lift", help="reduce a family to its diagonal form")
    _add_family(p)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("gen", help="generate a general-position instance")
    _add_family(p)
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--side", type=Fraction)
    p.add_argument("--no-resample", action="store_true")
    p.add_argument("-o", "--output", help="points CSV (default stdout)")

    p = sub.add_parser("encode", help="encode a points file into a label file")
    _add_family(p)
    _add_common(p)
    p.add_argument("--points", required=True)
    p.add_argument("-o", "--output", required=True, help="label file")
    p.add_argument("--audit", help="write the hierarchy audit JSON here")
    p.add_argument("--no-resample", action="store_true", help="accepted for symmetry; files are never resampled")

    p = sub.add_parser("decode", help="answer adjacency queries from a label file alone")
    p.add_argument("labels")
    p.add_argument("pairs", nargs="*", type=int, help="vertex ids, taken two at a time")
    p.add_argument("--all", action="store_true", help="print the full adjacency matrix")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("verify", help="round-trip check, or re-check an audit dump")
    _add_family(p)
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--side", type=Fraction)
    p.add_argument("--no-resample", action="store_true")
    p.add_argument("--points", help="with --labels or --audit: the instance they were built from")
    p.add_argument("--labels", help="label file to check against --points")
    p.add_argument("--audit", help="audit JSON to re-verify against --points")

    p = sub.add_parser("bench", help="scaling run with a fitted log-log slope")
    _add_family(p)
    _add_common(p)
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--csv", help="write the table here")

    p = sub.add_parser("bounds", help="counting bounds and exponents")
    p.add_argument("--exponent", type=int, metavar="Q")
    p.add_argument("--warren", type=int, nargs=3, metavar=("K", "L", "D"))
    p.add_argument("--family-count", type=int, nargs=4, metavar=("N", "DIMS", "P", "D"))
    p.add_argument("--json", action="store_true")
    return ap


def parse_args(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    ap = build_parser()
    if known.config:
        cfg = read_config(known.config)
        # subcommand options live on the subparsers
        for action in ap._subparsers._group_actions:
            for sp in action.choices.values():
                valid = {a.dest for a in sp._actions}
                sp.set_defaults(**{k: v for k, v in cfg.items() if k in valid})
    return ap.parse_args(argv)


# ---------------------------------------------------------------------------


def _family(args):
    if args.spec:
        return parse_family(Path(args.spec).read_text())
    return parse_family(family_text(args.family, args.q, args.t))


def _spec(args, n):
    text = Path(args.spec).read_text() if args.spec else None
    return InstanceSpec(args.family or "custom", n, args.seed, args.q, args.t, getattr(args, "side", None),
                        spec_text=text)


def _params(args) -> HierarchyParams:
    return HierarchyParams(seed=args.seed, beta=Fraction(args.beta), max_retries=args.max_retries,
                           strict_balance=bool(args.strict_balance))


def _emit(args, obj, text=None):
    if getattr(args, "json", False) or text is None:
        print(json.dumps(obj, indent=2, default=str))
    else:
        print(text)


def _table(pairs) -> str:
    w = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k:<{w}}  {v}" for k, v in pairs)


def cmd_lift(args) -> int:
    fam = _family(args)
    out = []
    for c in fam.constraints:
        g, comp = c.encoding_form()
        form = reduce_predicate(g)
        out.append({
            "predicate": c.to_json(),
            "complement": comp,
            "lift_dim": to_bilinear(g).dim,
            "Q": form.reduced_dim,
            "signature": list(form.signature),
            "diagonal": [format_rational(v) for v in form.diagonal],
        })
    text = "\n\n".join(
        _table([("constraint", i + 1), ("lift dim", o["lift_dim"]), ("Q", o["Q"]),
                ("signature", tuple(o["signature"])), ("diagonal", " ".join(o["diagonal"])),
                ("complement", o["complement"])])
        for i, o in enumerate(out)
    )
    _emit(args, out, text)
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = _spec(args, args.n)
    pts, _, attempts = gated_instance(spec, plan_family(spec.family_obj()), resample=not args.no_resample)
    text = write_points(pts)
    if args.output:
        Path(args.output).write_text(text)
        log.info("wrote %d points (%d resamples)", len(pts), attempts)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_encode(args) -> int:
    fam = _family(args)
    pts = read_points(Path(args.points).read_text())
    if pts and len(pts[0]) != fam.q:
        raise ValueError(f"points have {len(pts[0])} coordinates, family needs {fam.q}")
    enc = encode_points(pts, fam, _params(args))
    Path(args.output).write_bytes(dump_labels(enc.blocks))
    if args.audit:
        audits = [h.audit() for h in enc.hierarchies]
        Path(args.audit).write_text(json.dumps(audits if len(audits) > 1 else audits[0]))
    stats = [label_stats(b, args.beta) for b in enc.blocks]
    _emit(args, stats, "\n\n".join(_table(list(s.items())) for s in stats))
    return EXIT_OK


def cmd_decode(args) -> int:
    data = Path(args.labels).read_bytes()
    if args.all:
        M = decode_file_matrix(data).astype(int)
        if args.json:
            print(json.dumps(M.tolist()))
        else:
            for row in M:
                print("".join(map(str, row)))
        return EXIT_OK
    if not args.pairs or len(args.pairs) % 2:
        raise ValueError("give vertex ids in pairs, or --all")
    blocks = load_labels(data)
    by_vertex = [{lab.vertex: lab for lab in b} for b in blocks]
    answers = []
    for i, j in zip(args.pairs[::2], args.pairs[1::2]):
        answers.append(decode_blocks([b[i] for b in by_vertex], [b[j] for b in by_vertex]))
    if args.json:
        print(json.dumps([{"pair": [i, j], "edge": a} for i, j, a in zip(args.pairs[::2], args.pairs[1::2], answers)]))
    else:
        for i, j, a in zip(args.pairs[::2], args.pairs[1::2], answers):
            print(f"{i} {j} {a}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.audit or args.labels:
        if not args.points:
            raise ValueError("--points is required with --audit/--labels")
        fam = _family(args)
        pts = read_points(Path(args.points).read_text())
        problems = []
        if args.audit:
            audits = json.loads(Path(args.audit).read_text())
            audits = audits if isinstance(audits, list) else [audits]
            plans = plan_family(fam)
            gate = general_position_gate(pts, plans)
            for audit, S in zip(audits, gate.signs):
                problems += check_audit(audit, S.adjacency)
        if args.labels:
            M = decode_file_matrix(Path(args.labels).read_bytes())
            truth = direct_adjacency(pts, fam)
            iu = np.triu_indices(len(pts), 1)
            bad = int((M[iu] != truth[iu]).sum())
            if bad:
                problems.append(f"{bad} of {len(iu[0])} pairs decode wrongly")
        _emit(args, {"problems": problems}, "\n".join(problems) or "ok")
        return EXIT_MISMATCH if problems else EXIT_OK
    if not args.n:
        raise ValueError("--n is required for a round-trip run")
    report = run_roundtrip(_spec(args, args.n), _params(args), resample=not args.no_resample)
    _emit(args, report.to_json(), report.text())
    return EXIT_MISMATCH if report.mismatches or report.orientation_disagreements else EXIT_OK


def cmd_bench(args) -> int:
    res = run_scaling(_spec(args, args.n[0]), args.n, _params(args))
    if args.csv:
        Path(args.csv).write_text(res.csv())
    obj = {"slope": res.slope, "target": res.target, "rows": [r.to_json() for r in res.rows]}
    target = "n/a" if res.target is None else f"{res.target:.6f}"
    _emit(args, obj, res.csv() + f"\nfitted slope {res.slope:.4f}  (asymptotic exponent {target})")
    return EXIT_OK


def cmd_bounds(args) -> int:
    out = {}
    if args.exponent is not None:
        out["exponent"] = round(scheme_exponent(args.exponent), 6)
    if args.warren:
        out["warren"] = significant(warren_region_bound(*args.warren))
    if args.family_count:
        fc = family_count_bound(*args.family_count)
        out["family_count"] = significant(fc.value)
        out["c"] = fc.c
        if fc.warren is not None:
            out["warren_at_family"] = significant(fc.warren)
    if not out:
        raise ValueError("choose at least one of --exponent, --warren, --family-count")
    _emit(args, out, _table(list(out.items())))
    return EXIT_OK


COMMANDS = {
    "lift": cmd_lift, "gen": cmd_gen, "encode": cmd_encode, "decode": cmd_decode,
    "verify": cmd_verify, "bench": cmd_bench, "bounds": cmd_bounds,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except GateRejected as exc:
        print(f"gate rejected the instance: {exc}", file=sys.stderr)
        return EXIT_GATE
    except ProviderExhausted as exc:
        print(f"partition provider exhausted: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except Mismatch as exc:
        print(f"mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (FamilySyntaxError, FamilyError, LabelError, PartitionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
