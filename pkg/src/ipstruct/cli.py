"""Command-line interface: ``ipstruct analyze | verify | generate | fixtures``.

Exit codes: 0 success (or verification pass), 1 verification fail, 2 parse
error, 3 validation error, 4 structural error, 5 numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from .channel import make_planted
from .codes import analyze, is_correctable, is_noiseless, is_preserved, is_unitarily_noiseless
from .errors import (
    ContractError,
    DimensionError,
    IPSError,
    NumericError,
    ParameterError,
    StructuralError,
)
from .matcore import Tolerance
from .serialize import (
    ParseError,
    channel_to_dict,
    digest,
    load_channel,
    load_code,
    report_to_dict,
    save_json,
)

EXIT_PASS, EXIT_FAIL, EXIT_PARSE, EXIT_VALIDATION, EXIT_STRUCTURAL, EXIT_NUMERIC = range(6)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ParseError, DimensionError)):
        return EXIT_PARSE
    if isinstance(exc, (ContractError, ParameterError)):
        return EXIT_VALIDATION
    if isinstance(exc, StructuralError):
        return EXIT_STRUCTURAL
    return EXIT_NUMERIC


def _fail(exc: BaseException, where: str = "") -> int:
    stage = getattr(exc, "stage", "internal")
    prefix = f"{where}: " if where else ""
    print(f"error [{stage}] {prefix}{exc}", file=sys.stderr)
    return exit_code_for(exc)


def _tolerance(args) -> Tolerance:
    return Tolerance(eig_cluster=args.tol_eig, rank_cutoff=args.tol_rank, verify=args.tol_verify)


def _mode(name: str) -> str:
    return name.replace("-", "_")


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def _emit(payload: dict, out: Path | None, summary: str) -> None:
    if out is None:
        print(json.dumps(payload, indent=2, sort_keys=True))
        print(summary, file=sys.stderr)
    else:
        save_json(payload, out)
        print(summary)


def _analyze_one(path: Path, out: Path | None, args, tol: Tolerance) -> int:
    try:
        channel, raw = load_channel(path, tol)
        rep = analyze(channel, _mode(args.mode), tol, seed=args.seed)
        payload = report_to_dict(rep, tol, digest(raw),
                                 None if args.no_timestamp else _now())
    except Exception as exc:  # noqa: BLE001 - every failure maps to an exit code
        return _fail(exc, str(path))
    _emit(payload, out, rep.summary())
    return EXIT_PASS


def cmd_analyze(args) -> int:
    tol = _tolerance(args)
    src = Path(args.input)
    if src.is_dir():
        if args.out is None:
            print("error [input] --out must name a directory when the input is a directory",
                  file=sys.stderr)
            return EXIT_PARSE
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        status = EXIT_PASS
        for path in sorted(src.glob("*.json")):
            code = _analyze_one(path, out_dir / f"{path.stem}.report.json", args, tol)
            status = max(status, code)
        return status
    return _analyze_one(src, None if args.out is None else Path(args.out), args, tol)


def cmd_verify(args) -> int:
    tol = _tolerance(args)
    mode = _mode(args.mode)
    try:
        channel, raw = load_channel(args.input, tol)
        code = load_code(args.code, tol)
        if code.dim != channel.dim:
            raise ParseError(f"code dimension {code.dim} does not match channel "
                             f"dimension {channel.dim}")
        if mode == "preserved":
            rep = is_preserved(channel, code, tol, args.trials, args.seed)
        elif mode == "noiseless":
            rep = is_noiseless(channel, code, None, tol, args.trials, args.seed)
        elif mode == "unitarily_noiseless":
            rep = is_unitarily_noiseless(channel, code, None, tol, args.trials, args.seed)
        else:
            rep = is_correctable(channel, code, tol, args.trials, args.seed)
    except Exception as exc:  # noqa: BLE001
        return _fail(exc)
    payload = rep.to_dict()
    payload.update({"tolerances": tol.as_dict(), "input_digest": digest(raw),
                    "code_digest": digest(Path(args.code).read_bytes())})
    if not args.no_timestamp:
        payload["generated_at"] = _now()
    summary = (f"verdict={'pass' if rep.verdict else 'fail'} mode={rep.mode} "
               f"worst_pair_deviation={rep.worst_pair_deviation:.3e}")
    _emit(payload, None if args.out is None else Path(args.out), summary)
    return EXIT_PASS if rep.verdict else EXIT_FAIL


def parse_shape(spec: str) -> list[tuple[int, int]]:
    """Parse ``"2:2,1:1"`` into ``[(2, 2), (1, 1)]``."""
    shape = []
    try:
        for part in spec.split(","):
            a, b = part.split(":")
            shape.append((int(a), int(b)))
    except ValueError as exc:
        raise ParseError(f"shape {spec!r} is not a comma-separated list of d:n pairs") from exc
    return shape


def cmd_generate(args) -> int:
    try:
        shape = parse_shape(args.shape)
        channel, truth = make_planted(shape, args.leak, args.seed)
    except Exception as exc:  # noqa: BLE001
        return _fail(exc)
    out = Path(args.out)
    save_json(channel_to_dict(channel), out)
    sidecar = out.with_name(out.stem + ".truth.json")
    save_json({"shape": [list(s) for s in truth.shape], "support_rank": truth.support_rank,
               "extra_dim": truth.extra_dim, "seed": args.seed,
               "spectral_gap_bound": truth.gap}, sidecar)
    print(f"wrote {out} (dim={channel.dim}) and {sidecar}")
    return EXIT_PASS


def fixtures_dir() -> Path:
    return Path(str(resources.files("ipstruct") / "fixtures"))


def cmd_fixtures(args) -> int:
    for path in sorted(fixtures_dir().glob("*.json")):
        print(path)
    return EXIT_PASS


def _add_numeric_flags(p: argparse.ArgumentParser) -> None:
    d = Tolerance()
    p.add_argument("--tol-eig", type=float, default=d.eig_cluster,
                   help="clustering radius for eigenvalues at 1 / on the unit circle")
    p.add_argument("--tol-rank", type=float, default=d.rank_cutoff,
                   help="relative rank cutoff for supports and null spaces")
    p.add_argument("--tol-verify", type=float, default=d.verify,
                   help="threshold for verification predicates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (JSON goes to stdout if omitted)")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit generated_at so reports are byte-identical across runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipstruct",
        description="Find the noiseless and unitarily noiseless structure of a quantum channel.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="compute shape, support and cofactor states")
    p.add_argument("input", help="channel JSON file, or a directory of them")
    p.add_argument("--mode", choices=["noiseless", "unitarily-noiseless"], default="noiseless")
    _add_numeric_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="check a code against a channel")
    p.add_argument("input", help="channel JSON file")
    p.add_argument("code", help="code JSON file")
    p.add_argument("--mode", required=True,
                   choices=["preserved", "noiseless", "unitarily-noiseless", "correctable"])
    p.add_argument("--trials", type=int, default=8, help="random state pairs per check")
    _add_numeric_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a random channel with a planted structure")
    p.add_argument("shape", help='blocks as "d:n" pairs, e.g. "2:2,1:1"')
    p.add_argument("--leak", type=int, default=0, help="dimension of the leaking subspace")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fixtures", help="list the bundled example files")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if hasattr(args, "tol_eig"):
            _tolerance(args)
    except IPSError as exc:
        return _fail(exc)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
