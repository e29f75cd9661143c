"""Command-line entry point: ``micromacro run | verify | converge``.

Exit codes:

===  ==========================================
0    success
1    a verification suite failed
2    invalid command-line usage
3    scenario could not be parsed or validated
4    time step violated the CFL restriction
5    a state invariant was breached
6    a file could not be read or written
===  ==========================================
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .errors import CFLError, InvariantError, MicroMacroError, ScenarioError
from .scenario_io import load_scenario, write_outputs
from .simulate import simulate
from .speed_law import SpeedLaw

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CFL = 4
EXIT_INVARIANT = 5
EXIT_IO = 6

CONVERGENCE_CASES = {
    "shock": (0.2, 0.8),
    "rarefaction": (1.0, 0.0),
    "constant": (0.5, 0.5),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario: Optional[str] = None
    dx: Optional[float] = None
    cfl: Optional[float] = None
    t_end: Optional[float] = None
    output_every: Optional[float] = None
    out: Path = Path("out")
    suites: tuple = ()
    levels: int = 4
    cases: tuple = tuple(CONVERGENCE_CASES)
    plots: bool = True
    seed: Optional[int] = None

    def __post_init__(self):
        for name in ("dx", "cfl", "t_end", "output_every"):
            value = getattr(self, name)
            if value is not None and not value > 0 and not (name == "t_end" and value == 0):
                raise ValueError(f"--{name.replace('_', '-')} must be positive, got {value}")
        if self.levels < 2:
            raise ValueError(f"--levels must be at least 2, got {self.levels}")


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _nonnegative(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="micromacro", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write CSV outputs and figures")
    run.add_argument("--scenario", required=True, help="bundled scenario name or path to a TOML file")
    run.add_argument("--dx", type=_positive)
    run.add_argument("--cfl", type=_positive)
    run.add_argument("--t-end", type=_nonnegative)
    run.add_argument("--output-every", type=_positive)
    run.add_argument("--out", type=Path, default=Path("out"))
    run.add_argument("--no-plots", dest="plots", action="store_false", help="skip the PNG figures")

    ver = sub.add_parser("verify", help="run the property suites")
    ver.add_argument("--suite", dest="suites", action="append", default=[], help="restrict to a suite (repeatable)")
    ver.add_argument("--cfl", type=_positive, help="CFL factor of the grid suites (default 0.9)")
    ver.add_argument("--seed", type=int)

    conv = sub.add_parser("converge", help="L1 errors against exact Riemann solutions")
    conv.add_argument("--levels", type=int, default=4)
    conv.add_argument("--dx", type=_positive, help="coarsest mesh size (default 0.01)")
    conv.add_argument("--cfl", type=_positive)
    conv.add_argument("--t-end", type=_positive)
    conv.add_argument("--case", dest="cases", action="append", choices=sorted(CONVERGENCE_CASES), default=[])
    conv.add_argument("--out", type=Path, default=Path("out"))
    conv.add_argument("--no-plots", dest="plots", action="store_false")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kw = {k: v for k, v in vars(ns).items() if v is not None}
    for key in ("suites", "cases"):
        if key in kw:
            kw[key] = tuple(kw[key]) or RunConfig.__dataclass_fields__[key].default
    return RunConfig(**kw)


def cmd_run(cfg: RunConfig) -> int:
    scenario = load_scenario(cfg.scenario)
    result = simulate(scenario, dx=cfg.dx, cfl=cfg.cfl, t_end=cfg.t_end, output_every=cfg.output_every)
    paths = write_outputs(result.history, cfg.out, result.law)
    if cfg.plots:
        from .plotting import plot_density, plot_leader_speeds

        plot_density(result.history, cfg.out / "density.png", title=str(cfg.scenario))
        plot_leader_speeds(result.log, cfg.out / "leader_speed.png")
    final = result.history[-1][1]
    print(f"t = {final.t:.6g}: {len(result.log.t)} steps, mass {final.total_mass:.12g}, "
          f"min spacing {final.min_spacing:.6g}")
    for path in paths.values():
        print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    from .verification import VerifyConfig, run_suites

    kw = {}
    if cfg.cfl is not None:
        kw["cfl"] = cfg.cfl
    if cfg.seed is not None:
        kw["seed"] = cfg.seed
    results = run_suites(cfg.suites or None, VerifyConfig(**kw))
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} suites passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def cmd_converge(cfg: RunConfig) -> int:
    from .verification import convergence_study, fitted_order

    law = SpeedLaw.greenshields(1.0)
    kw = {"levels": cfg.levels}
    for name, key in (("dx", "dx0"), ("cfl", "cfl"), ("t_end", "t_end")):
        if getattr(cfg, name) is not None:
            kw[key] = getattr(cfg, name)
    studies = {case: convergence_study(law, *CONVERGENCE_CASES[case], **kw) for case in cfg.cases}

    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / "convergence.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case", "rho_l", "rho_r", "level", "dx", "l1_error", "order", "fitted_order"])
        for case, rows in studies.items():
            rl, rr = CONVERGENCE_CASES[case]
            fit = f"{fitted_order(rows):.17g}"
            for k, row in enumerate(rows):
                writer.writerow([case, rl, rr, k, f"{row.dx:.17g}", f"{row.error:.17g}", f"{row.order:.17g}", fit])
    print(path.read_text(), end="")
    if cfg.plots:
        from .plotting import plot_convergence

        plot_convergence(studies, cfg.out / "convergence.png")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "converge": cmd_converge}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        return COMMANDS[cfg.command](cfg)
    except ScenarioError as exc:
        print(f"error: scenario: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CFLError as exc:
        print(f"error: CFL: {exc}", file=sys.stderr)
        return EXIT_CFL
    except OSError as exc:
        print(f"error: I/O: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvariantError, MicroMacroError) as exc:
        print(f"error: invariant: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
