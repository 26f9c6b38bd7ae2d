"""Command-line front end.

One subcommand per operation group; randomized commands require --seed.
Options can come from a config file (``key = value`` lines, ``#``
comments); explicit flags override file values.  Every run of an
experiment command writes a JSON manifest echoing the fully resolved
configuration, and re-running from that manifest reproduces the CSV
output byte for byte.

Exit codes: 0 success, 2 validation error, 3 numeric failure (boundary).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import density, experiments, iet, induction, rauzy, zippered
from .errors import BoundaryError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def parse_lambda(text: str) -> np.ndarray:
    try:
        vals = np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError as exc:
        raise ValueError(f"bad length vector {text!r}") from exc
    return vals


def read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {raw.rstrip()}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def _apply_config_defaults(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill argparse values from --config, keeping explicit flags dominant."""
    if not getattr(args, "config", None):
        return
    file_vals = read_config_file(args.config)
    known = {a.dest: a for a in parser._actions}
    for key, val in file_vals.items():
        dest = key.replace("-", "_")
        if dest in ("config", "command"):
            continue
        if dest not in known:
            raise ValueError(f"unknown config key: {key}")
        if getattr(args, dest) == known[dest].default:
            action = known[dest]
            if action.type is not None:
                setattr(args, dest, action.type(val))
            elif isinstance(action.default, bool) or action.const is True:
                setattr(args, dest, val.lower() in ("1", "true", "yes", "on"))
            else:
                setattr(args, dest, val)


def write_manifest(result: experiments.RunResult, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(result.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise ValueError(f"missing required option --{name.replace('_', '-')}")


def cmd_rauzy_class(args):
    _require(args, "perm")
    perm = rauzy.parse_perm(args.perm)
    cls = sorted(rauzy.perm_str(p) for p in rauzy.rauzy_class(perm))
    for p in cls:
        print(p)
    print(f"# {len(cls)} permutations")
    return EXIT_OK


def cmd_rauzy_graph(args):
    _require(args, "perm")
    perm = rauzy.parse_perm(args.perm)
    graph = rauzy.rauzy_graph(perm)
    dot = graph.to_dot()
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(dot)
        print(f"wrote {args.dot}: {len(graph.vertices)} nodes, {len(graph.edges)} edges")
    else:
        sys.stdout.write(dot)
    return EXIT_OK


def cmd_orbit(args):
    _require(args, "perm", "lam")
    state = iet.new_iet(parse_lambda(args.lam), rauzy.parse_perm(args.perm))
    pts = iet.orbit(state, args.x, args.steps)
    if args.out:
        write_csv(args.out, ["t", "x"], ((t, fmt(x)) for t, x in enumerate(pts)))
        print(f"wrote {args.out}")
    else:
        for x in pts:
            print(fmt(x))
    if args.report_density:
        rep = iet.keane_density_report(state, args.steps, args.eps)
        print(f"max_gap={fmt(rep['max_gap'])} eps_dense={rep['eps_dense']}")
    return EXIT_OK


def cmd_induce(args):
    _require(args, "perm", "lam")
    state = iet.new_iet(parse_lambda(args.lam), rauzy.parse_perm(args.perm))
    for _ in range(args.steps):
        state, op, _ = induction.rauzy_step(state, normalized=not args.unnormalized)
    lam = ",".join(fmt(x) for x in state.lengths)
    print(f"({lam}) perm={rauzy.perm_str(state.perm)} op={op}")
    return EXIT_OK


def cmd_zorich(args):
    _require(args, "perm", "lam")
    state = iet.new_iet(parse_lambda(args.lam), rauzy.parse_perm(args.perm))
    letters = []
    for _ in range(args.steps):
        state, letter = induction.zorich_step(state)
        letters.append(letter)
    lam = ",".join(fmt(x) for x in state.lengths)
    print(f"({lam}) letter={induction.word_str(tuple(letters))}")
    return EXIT_OK


def cmd_cylinder(args):
    _require(args, "word")
    word = induction.parse_word(args.word)
    cyl = induction.cylinder(word)
    print(f"word={induction.word_str(word)}")
    print(f"matrix={json.dumps([list(r) for r in cyl.matrix])}")
    print(f"min_coordinate={fmt(cyl.min_coordinate())}")
    for v in cyl.vertex_images:
        print("vertex " + ",".join(fmt(x) for x in v))
    if args.member:
        state = iet.new_iet(parse_lambda(args.member), cyl.target_perm)
        print(f"member={induction.member(cyl, state)}")
    return EXIT_OK


def cmd_density(args):
    _require(args, "perm")
    perm = rauzy.parse_perm(args.perm)
    if args.lam:
        lam = parse_lambda(args.lam)
        print(f"r={fmt(density.r(lam, perm))}")
        print(f"r_plus={fmt(density.r_plus(lam, perm))}")
        print(f"r_minus={fmt(density.r_minus(lam, perm))}")
        return EXIT_OK
    if len(perm) != 2:
        raise ValueError("grid export needs --lambda for m != 2")
    xs = np.linspace(0.0, 1.0, args.grid + 2)[1:-1]
    lambdas = [np.array([x, 1.0 - x]) for x in xs]
    out = args.out or "density.csv"
    density.export_density_csv(perm, lambdas, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_zr_validate(args):
    with open(args.json_in) as fh:
        zr = zippered.from_json(fh.read())
    ok, violations = zippered.validate(zr)
    print(f"valid={ok}")
    for v in violations:
        print(f"violation: {v}")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_zr_flow(args):
    with open(args.json_in) as fh:
        zr = zippered.from_json(fh.read())
    if args.t is not None:
        zr = zippered.flow(zr, args.t)
    for _ in range(args.f_steps):
        zr, _ = zippered.zorich_lift_f(zr)
    out = zippered.to_json(zr)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
        print(f"wrote {args.out}")
    else:
        print(out)
    return EXIT_OK


def _require_seed(args):
    if args.seed is None:
        raise ValueError("--seed is required for randomized commands")


def cmd_invariant_hist(args):
    _require(args, "perm")
    _require_seed(args)
    result = experiments.sample_invariant(
        rauzy.parse_perm(args.perm), args.burn_in, args.n, args.bins, args.seed
    )
    payload = result.payload
    rows = []
    for i in range(args.bins):
        row = [i, payload["counts"][i], fmt(payload["masses"][i])]
        if "expected" in payload:
            row.append(fmt(payload["expected"][i]))
        rows.append(row)
    header = ["bin", "count", "mass"] + (["expected"] if "expected" in payload else [])
    write_csv(args.out, header, rows)
    write_manifest(result, args.manifest)
    if "sup_rel_deviation" in payload:
        print(f"sup_rel_deviation={fmt(payload['sup_rel_deviation'])}")
    print(f"wrote {args.out} and {args.manifest}")
    return EXIT_OK


def cmd_correlation(args):
    _require(args, "perm")
    _require_seed(args)
    phi = experiments.OBSERVABLES[args.phi]
    psi = experiments.OBSERVABLES[args.psi]
    result = experiments.correlation_decay(
        phi, psi, rauzy.parse_perm(args.perm), args.n_max, args.n,
        args.seed, replicas=args.replicas, burn_in=args.burn_in, threads=args.threads,
    )
    payload = result.payload
    write_csv(
        args.out,
        ["n", "estimate", "stderr"],
        (
            (n, fmt(e), fmt(s))
            for n, e, s in zip(payload["n"], payload["estimate"], payload["stderr"])
        ),
    )
    write_manifest(result, args.manifest)
    print(f"wrote {args.out} and {args.manifest}")
    return EXIT_OK


def cmd_return_times(args):
    _require(args, "perm", "q")
    _require_seed(args)
    word = induction.parse_word(args.q)
    result = experiments.return_time_tail(
        word, rauzy.parse_perm(args.perm), args.n_max, args.n, args.seed, burn_in=args.burn_in
    )
    payload = result.payload
    write_csv(
        args.out,
        ["n", "survival"],
        ((n, fmt(s)) for n, s in zip(payload["n"], payload["survival"])),
    )
    write_manifest(result, args.manifest)
    fit = experiments.sqrt_tail_fit(payload["n"], payload["survival"], 4, args.n_max)
    print(f"sqrt-fit slope={fmt(fit['slope'])} r_squared={fmt(fit['r_squared'])}")
    print(f"wrote {args.out} and {args.manifest}")
    return EXIT_OK


def cmd_clt(args):
    _require(args, "perm")
    _require_seed(args)
    result = experiments.clt_flow(
        args.observable, rauzy.parse_perm(args.perm), args.horizon, args.n, args.seed,
        burn_in=args.burn_in,
    )
    payload = result.payload
    write_csv(
        args.out,
        ["sample_index", "value"],
        ((i, fmt(v)) for i, v in enumerate(payload["samples"])),
    )
    write_manifest(result, args.manifest)
    print(f"ks_statistic={fmt(payload['ks_statistic'])} sigma_hat={fmt(payload['sigma_hat'])}"
          f" degenerate={payload['degenerate']}")
    print(f"wrote {args.out} and {args.manifest}")
    return EXIT_OK


def cmd_good_words(args):
    _require(args, "word", "q", "k", "r")
    q = induction.parse_word(args.q)
    params = experiments.GoodWordParams(q, args.k, args.theta, args.r)
    word = induction.parse_word(args.word)
    good, diag = experiments.classify_good(word, params)
    print(f"good={good}")
    for i, w in enumerate(diag["windows"]):
        print(
            f"window {i}: min_coordinate={fmt(w['min_coordinate'])} "
            f"thin_ok={w['thin_ok']} occurrences={w['occurrences']} "
            f"needed={fmt(w['occurrences_needed'])}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ietflow",
        description="Interval exchange renormalization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn, _parser=p)
        p.add_argument("--config", help="config file with key = value lines; flags override")
        return p

    p = add("rauzy-class", cmd_rauzy_class, help="enumerate the Rauzy class")
    p.add_argument("--perm")

    p = add("rauzy-graph", cmd_rauzy_graph, help="emit the labelled Rauzy graph as DOT")
    p.add_argument("--perm")
    p.add_argument("--dot", help="output path (stdout if omitted)")

    p = add("orbit", cmd_orbit, help="iterate the interval exchange")
    p.add_argument("--perm")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--report-density", action="store_true")
    p.add_argument("--out")

    p = add("induce", cmd_induce, help="one or more Rauzy induction steps")
    p.add_argument("--perm")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--unnormalized", action="store_true")

    p = add("zorich", cmd_zorich, help="accelerated induction steps")
    p.add_argument("--perm")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--steps", type=int, default=1)

    p = add("cylinder", cmd_cylinder, help="cylinder data of a word")
    p.add_argument("--word", help="letters like a:2@21/b:1@21")
    p.add_argument("--member", help="length vector to test for membership")

    p = add("density", cmd_density, help="cone-volume densities")
    p.add_argument("--perm")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--grid", type=int, default=99)
    p.add_argument("--out")

    p = add("zr-validate", cmd_zr_validate, help="validate a zippered rectangle JSON record")
    p.add_argument("json_in")

    p = add("zr-flow", cmd_zr_flow, help="flow / lifted induction on a zippered rectangle")
    p.add_argument("json_in")
    p.add_argument("--t", type=float, default=None, help="flow time")
    p.add_argument("--f-steps", type=int, default=0, help="accelerated lift steps")
    p.add_argument("--out")

    p = add("invariant-hist", cmd_invariant_hist, help="invariant measure histogram")
    p.add_argument("--perm")
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="invariant_hist.csv")
    p.add_argument("--manifest", default="invariant_hist.manifest.json")

    p = add("correlation", cmd_correlation, help="correlation decay under the squared map")
    p.add_argument("--perm")
    p.add_argument("--phi", default="coord1", choices=sorted(experiments.OBSERVABLES))
    p.add_argument("--psi", default="coord1", choices=sorted(experiments.OBSERVABLES))
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--replicas", type=int, default=32)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="correlation.csv")
    p.add_argument("--manifest", default="correlation.manifest.json")

    p = add("return-times", cmd_return_times, help="survival curve of cylinder visits")
    p.add_argument("--perm")
    p.add_argument("--q", help="anchor word, e.g. a:1@21/b:1@21")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--burn-in", type=int, default=256)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="return_times.csv")
    p.add_argument("--manifest", default="return_times.manifest.json")

    p = add("clt", cmd_clt, help="empirical CLT for the suspension flow")
    p.add_argument("--perm")
    p.add_argument("--observable", default="flow-coord1",
                   choices=["flow-coord1", "flow-height1", "zero"])
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--burn-in", type=int, default=64)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="clt.csv")
    p.add_argument("--manifest", default="clt.manifest.json")

    p = add("good-words", cmd_good_words, help="good-word classification")
    p.add_argument("--word")
    p.add_argument("--q")
    p.add_argument("--k", type=int)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--r", type=int)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_defaults(args, args._parser)
        return args.fn(args)
    except BoundaryError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        if getattr(exc, "partial", None):
            print(f"partial word: {induction.word_str(exc.partial)}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
