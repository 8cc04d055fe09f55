"""Command-line front end: ``dynbiharm {spectrum,evolve,verify,mms,positivity-scan}``.

Exit codes: 0 success, 1 usage/config/I-O error, 2 scientific-invariant
failure, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, data, kernels, mms, properties
from .assembly import Discretization, LayoutError, StateVector, read_state_csv, write_state_csv
from .evolution import ForcingSpec, NumericalAbort, SchemeError, duhamel_evolve, write_snapshots
from .geometry import ConfigError, DomainConfig, load_config
from .grid import EvaluationGrid
from .spectral import InvariantViolation, global_spectrum, kernel_vector_error, mode_eigenvector_state, write_spectrum_csv

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT, EXIT_ABORT = 0, 1, 2, 3

EVOLVE_DEFAULTS = {"T": 1.0, "dt": 1e-2, "theta": 0.5, "initial": "bump", "forcing": "zero", "record_every": 1, "snapshot_every": 0, "startup": 2}


class UsageError(Exception):
    """Bad command-line input or unreadable/unwritable files."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    config_path: str
    out_dir: str
    seed: int | None
    version: str = __version__
    backend: str = kernels.BACKEND
    options: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    status: str = "ok"
    exit_code: int = EXIT_OK

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - start, 6)

    def output(self, path: Path) -> Path:
        self.outputs.append(path.name)
        return path

    def write(self) -> None:
        path = Path(self.out_dir) / "manifest.json"
        body = {k: v for k, v in self.__dict__.items()}
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _prepare(args) -> tuple[DomainConfig, dict, Path]:
    config, evolution = load_config(args.config)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return config, evolution, out


def _manifest(args, config: DomainConfig, evolution: dict, out: Path, **options) -> RunManifest:
    resolved = config.as_dict()
    resolved.update(evolution)
    return RunManifest(
        subcommand=args.command,
        config=resolved,
        config_path=str(Path(args.config).resolve()),
        out_dir=str(out.resolve()),
        seed=getattr(args, "seed", None),
        options=options,
    )


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(args) -> int:
    config, evolution, out = _prepare(args)
    man = _manifest(args, config, evolution, out, k_per_mode=args.k_per_mode)
    code = EXIT_OK
    with man.phase("spectrum"):
        try:
            dec = global_spectrum(config, args.k_per_mode)
        except InvariantViolation as exc:
            print(f"invariant violation: {exc}", file=sys.stderr)
            man.status, code = f"invariant violation: {exc}", EXIT_INVARIANT
            dec = None
    if dec is not None:
        with man.phase("write"):
            write_spectrum_csv(man.output(out / "spectrum.csv"), dec)
            lam = dec.eigenvalues
            kernel_err = kernel_vector_error(dec) if dec.complete else math.nan
            summary = [
                ("lambda_1", _fmt(lam[0])),
                ("lambda_2", _fmt(dec.gap)),
                ("kernel_count", str(dec.kernel_count())),
                ("kernel_vector_error", _fmt(kernel_err)),
                ("n_eigenvalues", str(lam.size)),
            ]
            with open(man.output(out / "gap_summary.csv"), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(("quantity", "value"))
                writer.writerows(summary)
        print(f"lambda_2 = {dec.gap:.12g}, kernel dimension {dec.kernel_count()}")
    man.exit_code = code
    man.write()
    return code


def _initial_state(spec: str, dec, seed: int, pair) -> StateVector:
    disc = dec.disc
    kind, _, arg = spec.partition(":")
    if kind == "ones":
        return disc.ones()
    if kind == "zero":
        return disc.zeros()
    if kind == "bump":
        return data.clipped_bump(disc)
    if kind == "mms":
        return pair.initial
    if kind == "eigen":
        try:
            n = int(arg)
        except ValueError:
            raise UsageError(f"eigen:N needs an integer index, got {arg!r}") from None
        if not 1 <= n <= len(dec.entries):
            raise UsageError(f"eigen index {n} outside 1..{len(dec.entries)}")
        return mode_eigenvector_state(dec, dec.entries[n - 1])
    if kind == "file":
        try:
            return read_state_csv(arg, disc)
        except OSError as exc:
            raise UsageError(f"cannot read initial state {arg}: {exc}") from exc
    raise UsageError(f"unknown initial spec {spec!r} (ones, zero, bump, eigen:N, mms, file:PATH)")


def _forcing(spec: str, disc: Discretization, pair) -> ForcingSpec:
    if spec == "zero":
        return ForcingSpec.zero()
    if spec == "ones":
        return ForcingSpec.constant(disc.ones())
    if spec == "mms":
        return pair.forcing
    raise UsageError(f"unknown forcing spec {spec!r} (zero, ones, mms)")


def cmd_evolve(args) -> int:
    config, evolution, out = _prepare(args)
    settings = dict(EVOLVE_DEFAULTS)
    settings.update(evolution)
    for key in ("T", "dt", "theta", "initial", "forcing", "startup"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    if not settings["T"] > 0 or not settings["dt"] > 0:
        raise UsageError(f"T and dt must be positive, got T={settings['T']}, dt={settings['dt']}")
    man = _manifest(args, config, evolution, out, **settings)
    with man.phase("spectrum"):
        dec = global_spectrum(config)
    disc = dec.disc
    uses_mms = "mms" in (settings["initial"], settings["forcing"])
    pair = mms.mms_pair(disc, mms.builtin_solutions(config)) if uses_mms else None
    u0 = _initial_state(settings["initial"], dec, args.seed, pair)
    forcing = _forcing(settings["forcing"], disc, pair)
    grid = EvaluationGrid(disc)
    track_error = settings["initial"] == "mms" and settings["forcing"] == "mms"
    try:
        with man.phase("evolve"):
            traj = duhamel_evolve(
                dec,
                u0,
                forcing,
                settings["T"],
                settings["dt"],
                settings["theta"],
                record_every=int(settings["record_every"]),
                snapshot_every=int(settings["snapshot_every"]),
                keep_states=track_error,
                grid=grid,
                startup=int(settings["startup"]),
            )
    except NumericalAbort as exc:
        print(f"numerical abort: non-finite state at t = {exc.time:.17g}", file=sys.stderr)
        man.status, man.exit_code = f"numerical abort at t = {exc.time:.17g}", EXIT_ABORT
        man.write()
        return EXIT_ABORT
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    with man.phase("write"):
        path = man.output(out / "trajectory.csv")
        if track_error:
            errors = [mms.l2_error(disc, u, pair, t) for t, u in zip(traj.times, traj.states)]
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(("t", "m_norm", "mu_mass", "min_value", "energy", "error_l2"))
                for row in zip(traj.times, traj.m_norm, traj.mu_mass, traj.min_value, traj.energy, errors):
                    writer.writerow([_fmt(v) for v in row])
        else:
            traj.write_csv(path)
        if traj.snapshots:
            write_snapshots(man.output(out / "snapshots_field.csv"), man.output(out / "snapshots_surface.csv"), grid, traj.snapshots)
            write_state_csv(man.output(out / "final_state.csv"), traj.snapshots[-1][1])
    man.write()
    print(f"{len(traj.times)} records to t = {traj.times[-1]:.6g}; mass drift {traj.mass_drift():.3e}")
    return EXIT_OK


def cmd_verify(args) -> int:
    config, evolution, out = _prepare(args)
    man = _manifest(args, config, evolution, out, family_size=args.family_size)
    with man.phase("verify"):
        report, artefacts = properties.run_all(config, args.seed, args.family_size)
    with man.phase("write"):
        (out / "report.txt").write_text(report.to_text())
        man.output(out / "report.txt")
        report.write_csv(man.output(out / "report.csv"))
        if "oracle" in artefacts:
            with open(man.output(out / "oracle.csv"), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(("mode", "lambda_galerkin", "lambda_oracle", "rel_diff"))
                for m, *values in artefacts["oracle"]:
                    writer.writerow((m, *(_fmt(v) for v in values)))
        if "ladders" in artefacts:
            mms.write_ladders_csv(man.output(out / "mms_orders.csv"), artefacts["ladders"])
        if "scan" in artefacts:
            artefacts["scan"].write_csv(man.output(out / "positivity.csv"))
    print(report.to_text(), end="")
    code = EXIT_OK if report.passed else EXIT_INVARIANT
    man.status = "ok" if code == EXIT_OK else "failed: " + ", ".join(c.claim_id for c in report.failures())
    man.exit_code = code
    man.write()
    return code


def cmd_mms(args) -> int:
    config, evolution, out = _prepare(args)
    man = _manifest(args, config, evolution, out)
    with man.phase("space"):
        space = mms.spatial_ladder(config)
    with man.phase("time"):
        time_cn = mms.temporal_ladder(config, theta=0.5)
    with man.phase("time_euler"):
        time_ie = mms.temporal_ladder(config, theta=1.0)
        time_ie.kind = "time_theta1"
    with man.phase("write"):
        mms.write_ladders_csv(man.output(out / "mms_orders.csv"), [space, time_cn, time_ie])
    p_space, p_time = min(space.orders), min(time_cn.orders)
    ok = p_space >= 3.5 and all(1.9 <= p <= 2.1 for p in time_cn.orders)
    print(f"space order {p_space:.4f}, time order (theta=1/2) {p_time:.4f}, theta=1 order {min(time_ie.orders):.4f}")
    code = EXIT_OK if ok else EXIT_INVARIANT
    man.status = "ok" if ok else "order regression"
    man.exit_code = code
    man.write()
    return code


def cmd_positivity_scan(args) -> int:
    config, evolution, out = _prepare(args)
    if args.family_size < 1:
        raise UsageError(f"family size must be >= 1, got {args.family_size}")
    man = _manifest(args, config, evolution, out, family_size=args.family_size, family=args.family, t_max=args.t_max)
    with man.phase("spectrum"):
        dec = global_spectrum(config)
    disc = dec.disc
    if args.family == "ones":
        family = [(None, disc.ones()) for _ in range(args.family_size)]
    else:
        family = data.bump_family(disc, args.family_size, args.seed)
    t_max = args.t_max if args.t_max is not None else 10.0 / dec.gap
    if not t_max > 0:
        raise UsageError(f"t_max must be positive, got {t_max}")
    with man.phase("scan"):
        scan = properties.eventual_positivity_scan(dec, family, t_max)
    with man.phase("write"):
        scan.write_csv(man.output(out / "positivity.csv"))
        with open(man.output(out / "positivity_summary.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("quantity", "value"))
            writer.writerow(("t_max", _fmt(t_max)))
            writer.writerow(("t0_star", _fmt(scan.t0_star)))
            writer.writerow(("linf_star", _fmt(scan.linf_star)))
            writer.writerow(("members_with_violation", sum(math.isfinite(m.first_negative) for m in scan.members)))
            writer.writerow(("status", "recovered" if math.isfinite(scan.t0_star) else "not recovered within horizon"))
    man.write()
    status = f"t0* = {scan.t0_star:.6g}" if math.isfinite(scan.t0_star) else "not recovered within horizon"
    print(f"{len(family)} members scanned to t = {t_max:.6g}: {status}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="key = value configuration file")
    common.add_argument("--out", required=True, help="output directory (created if missing)")
    common.add_argument("--seed", type=int, default=42, help="seed for randomized data (default 42)")

    parser = _Parser(prog="dynbiharm", description="Biharmonic heat flow with dynamic boundary conditions on an annulus.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spectrum", parents=[common], help="merged eigenvalues and spectral gap")
    p.add_argument("--k-per-mode", type=int, default=None, help="eigenpairs per Fourier mode (default: all)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("evolve", parents=[common], help="theta-scheme trajectory with diagnostics")
    p.add_argument("--initial", default=None, help="ones | zero | bump | eigen:N | mms | file:PATH")
    p.add_argument("--forcing", default=None, help="zero | ones | mms")
    p.add_argument("--T", dest="T", type=float, default=None, help="final time")
    p.add_argument("--dt", type=float, default=None, help="time step; T must be a multiple of it")
    p.add_argument("--theta", type=float, default=None, help="scheme parameter in [1/2, 1]")
    p.add_argument("--startup", type=int, default=None, help="implicit Euler substeps replacing the first step (default 2, 0 disables)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("verify", parents=[common], help="run every property check and write a report")
    p.add_argument("--family-size", type=_positive_int, default=20)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("mms", parents=[common], help="manufactured-solution convergence ladders")
    p.set_defaults(func=cmd_mms)

    p = sub.add_parser("positivity-scan", parents=[common], help="eventual positivity of a nonnegative family")
    p.add_argument("--family-size", type=int, default=20)
    p.add_argument("--family", choices=("bumps", "ones"), default="bumps")
    p.add_argument("--t-max", type=float, default=None, help="scan horizon (default 10 / lambda_2)")
    p.set_defaults(func=cmd_positivity_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, UsageError, LayoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NumericalAbort as exc:
        print(f"numerical abort: non-finite state at t = {exc.time:.17g}", file=sys.stderr)
        return EXIT_ABORT
    except SchemeError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
