"""
Command-line entry point

    python -m app.cli bounds --p 0.01 --out bounds.csv
    python -m app.cli simulate --n 8 12 16 --rate 0.1 --p 0.05 --trials 20000 --seed 7
    python -m app.cli verify
    python -m app.cli codebook generate --n 16 --m 8 --seed 1 --out cb.txt
    python -m app.cli codebook inspect --in cb.txt
    python -m app.cli serve

Exit codes: 0 success, 1 failed check or runtime failure, 2 usage error.
"""
import argparse
import contextlib
import logging
import sys
from typing import Optional, Sequence, TextIO

from pydantic import ValidationError

from app.core import exponents as ex
from app.core.codebook import (
    derive_m,
    format_rows,
    generate_rce,
    generate_trc,
    load_codebook,
    save_codebook,
    summarize,
)
from app.core.config import configure_logging, get_settings
from app.core.errors import BeeIdError, InsufficientDataError
from app.models.schemas import ChannelParam, DecoderName, Ensemble, ExperimentConfig
from app.services.montecarlo import entropy_seed, estimate_exponent, get_montecarlo_service
from app.services.reporting import SimulationCsvWriter, fit_summary, format_number, write_bounds_csv
from app.services.verification import VerificationService, default_p_grid


logger = logging.getLogger("app.cli")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Flags that parse but do not describe a valid request"""


def fresh_seed() -> int:
    """Entropy-derived seed, reported so the run can be repeated"""
    seed = entropy_seed()
    print(f"seed: {seed}", file=sys.stderr)
    return seed


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="ascii", newline="") as handle:
            yield handle


def _channel(p: float) -> ChannelParam:
    try:
        return ChannelParam(p=p)
    except ValidationError as exc:
        raise UsageError(f"--p must satisfy 0 < p < 0.5, got {p}") from exc


# ==================== Subcommands ====================

def cmd_bounds(args: argparse.Namespace) -> int:
    ch = _channel(args.p)
    try:
        curve = ex.bound_curve(ch, args.rmin, args.rmax, args.steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    profile = ex.bound_profile(ch)

    with _output(args.out) as stream:
        write_bounds_csv(curve, stream)

    # constants go to stderr when the table itself is on stdout
    report: TextIO = sys.stderr if args.out in (None, "-") else sys.stdout
    for name in ("alpha_p", "r0", "r1", "r_cr", "r_trc", "lambda_p"):
        print(f"{name} = {format_number(getattr(profile, name))}", file=report)
    return EXIT_OK


def _experiment(args: argparse.Namespace, seed: int) -> ExperimentConfig:
    try:
        return ExperimentConfig(
            n_list=args.n,
            rate=args.rate,
            p=args.p,
            ensemble=args.ensemble,
            epsilon=args.epsilon,
            decoder=args.decoder,
            trials=args.trials,
            base_seed=seed,
            fresh_codebook_per_trial=not args.fixed_codebook,
            gmd_threshold=args.threshold,
            fix_identity=args.fix_identity,
            tolerance=args.tolerance,
            workers=args.workers,
        )
    except ValidationError as exc:
        raise UsageError("; ".join(err["msg"] for err in exc.errors())) from exc


def cmd_simulate(args: argparse.Namespace) -> int:
    _channel(args.p)
    seed = args.seed if args.seed is not None else fresh_seed()
    cfg = _experiment(args, seed)
    service = get_montecarlo_service()

    cells = []
    with _output(args.out) as stream:
        writer = SimulationCsvWriter(stream, with_tolerance=cfg.tolerance is not None)
        for cell in service.run(cfg):
            writer.write(cell)
            cells.append(cell)

    try:
        fit = estimate_exponent(cells)
    except InsufficientDataError as exc:
        logger.info("%s", exc)
        fit = None
    print(fit_summary(fit), file=sys.stderr)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    settings = get_settings()
    p_grid = args.grid if args.grid else default_p_grid(args.points or settings.verify_grid_points)
    service = VerificationService(r1_offset=args.r1_offset)

    def show(check) -> None:
        status = "PASS" if check.passed else "FAIL"
        line = f"{status}  {check.name}"
        if check.detail:
            line += f"  ({check.detail})"
        if check.violation:
            where = ", ".join(f"{k}={format_number(v)}" for k, v in check.violation.items())
            line += f"  violated at {where}"
        print(line)

    report = service.run(
        p_grid=p_grid,
        rates_per_p=args.rates,
        oracle_instances=args.oracle_instances,
        progress=show,
    )
    failed = sum(not c.passed for c in report.checks)
    print(f"{len(report.checks) - failed}/{len(report.checks)} checks passed")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_codebook_generate(args: argparse.Namespace) -> int:
    if (args.m is None) == (args.rate is None):
        raise UsageError("give exactly one of --m or --rate")
    m = args.m if args.m is not None else derive_m(args.n, args.rate)
    seed = args.seed if args.seed is not None else fresh_seed()
    try:
        if args.ensemble == Ensemble.TRC:
            codebook = generate_trc(args.n, m, args.epsilon, seed)
        elif args.ensemble == Ensemble.RCE:
            codebook = generate_rce(args.n, m, seed)
        else:
            raise UsageError("generate supports the RCE and TRC ensembles")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    if args.out in (None, "-"):
        sys.stdout.write(f"{codebook.m} {codebook.n}\n")
        sys.stdout.write("\n".join(format_rows(codebook.bits)) + "\n")
    else:
        save_codebook(codebook, args.out)
        logger.info("wrote %dx%d %s codebook to %s", codebook.m, codebook.n, codebook.ensemble.value, args.out)
    return EXIT_OK


def cmd_codebook_inspect(args: argparse.Namespace) -> int:
    codebook = load_codebook(args.input)
    summary = summarize(codebook, args.epsilon)
    print(f"m = {summary.m}")
    print(f"n = {summary.n}")
    print(f"rate = {format_number(summary.rate)}")
    if summary.min_distance is not None:
        print(f"min distance = {summary.min_distance} (rows {summary.min_pair[0]}, {summary.min_pair[1]})")
        print(f"max distance = {summary.max_distance}")
    if summary.trc_band is not None:
        low, high = summary.trc_band
        verdict = "inside" if summary.in_trc_band else "outside"
        print(f"TRC band = ({format_number(low)}, {format_number(high)}): {verdict}")
    if summary.pair_set is not None:
        pairs = summary.pair_set
        print(f"greedy pair set = {len(pairs.pairs)} pairs")
        for (i, j), d in zip(pairs.pairs, pairs.source_distances):
            print(f"  ({i}, {j}) d = {d}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    settings = get_settings()
    uvicorn.run(
        "app.main:app",
        host=args.host or settings.api_host,
        port=args.port or settings.api_port,
        log_level=args.log_level.lower(),
    )
    return EXIT_OK


# ==================== Parser ====================

def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="beeid",
        description="Bee-identification error exponents: bound tables, simulation and verification",
    )
    parser.add_argument("--log-level", default=settings.log_level,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], type=str.upper)
    sub = parser.add_subparsers(dest="command", required=True)

    bounds = sub.add_parser("bounds", help="Tabulate the five exponent bounds against rate")
    bounds.add_argument("--p", type=float, default=settings.default_p, help="Crossover probability (default: %(default)s)")
    bounds.add_argument("--rmin", type=float, default=0.0, help="First rate (default: %(default)s)")
    bounds.add_argument("--rmax", type=float, default=0.6, help="Last rate (default: %(default)s)")
    bounds.add_argument("--steps", type=int, default=200, help="Grid points (default: %(default)s)")
    bounds.add_argument("--out", help="CSV path (default: stdout)")
    bounds.set_defaults(handler=cmd_bounds)

    simulate = sub.add_parser("simulate", help="Monte Carlo estimate of the error probability")
    simulate.add_argument("--n", type=int, nargs="+", required=True, help="Blocklengths")
    simulate.add_argument("--rate", type=float, required=True, help="Design rate in bits")
    simulate.add_argument("--p", type=float, default=settings.default_p, help="Crossover probability (default: %(default)s)")
    simulate.add_argument("--trials", type=int, default=settings.default_trials, help="Trials per blocklength (default: %(default)s)")
    simulate.add_argument("--seed", type=int, default=settings.default_seed, help="Base seed (default: fresh entropy)")
    simulate.add_argument("--decoder", type=DecoderName, choices=list(DecoderName), default=DecoderName.JOINT,
                          metavar="{" + ",".join(d.value for d in DecoderName) + "}")
    simulate.add_argument("--ensemble", type=Ensemble, choices=[Ensemble.RCE, Ensemble.TRC], default=Ensemble.RCE,
                          metavar="{RCE,TRC}")
    simulate.add_argument("--epsilon", type=float, help="TRC band slack (default: min(0.02, delta_GV(2R)/4))")
    simulate.add_argument("--threshold", type=int, help="GMD erasure threshold (default: derived from n, p, R)")
    simulate.add_argument("--tolerance", type=float, help="Also count trials misidentifying more than this fraction")
    simulate.add_argument("--fix-identity", action="store_true", help="Send rows in order (pi = identity)")
    simulate.add_argument("--fixed-codebook", action="store_true", help="One codebook per blocklength instead of per trial")
    simulate.add_argument("--workers", type=int, default=settings.workers, help="Worker threads (default: %(default)s)")
    simulate.add_argument("--out", help="CSV path (default: stdout)")
    simulate.set_defaults(handler=cmd_simulate)

    verify = sub.add_parser("verify", help="Run the analytical and decoder verification suite")
    verify.add_argument("--grid", type=float, nargs="+", help="Explicit crossover probabilities to check")
    verify.add_argument("--points", type=int, help="Size of the default p grid on (0.001, 0.499)")
    verify.add_argument("--rates", type=int, help="Rates per channel (default from settings)")
    verify.add_argument("--oracle-instances", type=int, help="Random instances for the joint-ML oracle")
    verify.add_argument("--r1-offset", type=float, default=0.0, help=argparse.SUPPRESS)
    verify.set_defaults(handler=cmd_verify)

    codebook = sub.add_parser("codebook", help="Generate or inspect codebooks")
    actions = codebook.add_subparsers(dest="action", required=True)

    generate = actions.add_parser("generate", help="Draw an RCE or TRC codebook")
    generate.add_argument("--n", type=int, required=True, help="Blocklength")
    generate.add_argument("--m", type=int, help="Number of codewords")
    generate.add_argument("--rate", type=float, help="Design rate; m = max(2, round(2^(nR)))")
    generate.add_argument("--ensemble", type=Ensemble, choices=[Ensemble.RCE, Ensemble.TRC], default=Ensemble.RCE,
                          metavar="{RCE,TRC}")
    generate.add_argument("--epsilon", type=float, help="TRC band slack")
    generate.add_argument("--seed", type=int, default=settings.default_seed)
    generate.add_argument("--out", help="Codebook path (default: stdout)")
    generate.set_defaults(handler=cmd_codebook_generate)

    inspect = actions.add_parser("inspect", help="Distance profile and pair set of a codebook file")
    inspect.add_argument("--in", dest="input", required=True, help="Codebook file")
    inspect.add_argument("--epsilon", type=float, help="TRC band slack for the band check")
    inspect.set_defaults(handler=cmd_codebook_inspect)

    serve = sub.add_parser("serve", help="Run the HTTP API")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BeeIdError, OSError) as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
