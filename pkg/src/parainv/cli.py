"""Command-line front end: ``parainv {parabolicity,check,simulate,falsify} --config FILE``.

Exit codes::

    0  parabolic / Invariant or SufficientHolds / simulation done / witness found
    1  malformed config, invalid geometry, failed precondition, or the two
       verdict paths disagree (flagged as an internal error in the report)
    2  not parabolic / NotInvariant or NecessaryViolated
    3  Inconclusive
    4  stability gate rejected the time step (report suggests one)
    5  falsifier budget exhausted without a witness
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from pathlib import Path
from typing import Optional

from .config import ProblemConfig, load_config
from .criterion import Status, check_theorem, cross_validate
from .errors import GeometryError, InputError, NumericError, StabilityError
from .parabolicity import petrovskii_margin
from .schemas import validate_report
from .simulate.export import write_field, write_trace_csv
from .simulate.falsify import falsify
from .simulate.monitor import run_monitored

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2
EXIT_INCONCLUSIVE = 3
EXIT_UNSTABLE = 4
EXIT_EXHAUSTED = 5

STATUS_EXIT = {
    Status.INVARIANT: EXIT_OK,
    Status.SUFFICIENT_HOLDS: EXIT_OK,
    Status.NOT_INVARIANT: EXIT_NEGATIVE,
    Status.NECESSARY_VIOLATED: EXIT_NEGATIVE,
    Status.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


class _Failure(Exception):
    """Carries an error-report payload and exit code out of a command."""

    def __init__(self, code, error, **extra):
        super().__init__(error["message"])
        self.code = code
        self.error = error
        self.extra = extra


def _margin(cfg: ProblemConfig):
    return petrovskii_margin(cfg.system, cfg.samples, resolution=cfg.sigma_resolution)


def cmd_parabolicity(cfg: ProblemConfig, out: Path):
    rep = _margin(cfg)
    code = EXIT_OK if rep.parabolic else EXIT_NEGATIVE
    return "parabolicity-report", code, {"parabolicity": rep.to_dict()}


def cmd_check(cfg: ProblemConfig, out: Path):
    body = cfg.require_body()
    par = _margin(cfg)
    cc = cross_validate(cfg.system, body, cfg.samples, cfg.tol, cfg.smooth_samples, check_parabolicity=False)
    payload = {
        "verdict": cc.generic.to_dict(),
        "structural": cc.structural.to_dict() if cc.structural is not None else None,
        "agree": cc.agree,
        "internal_error": not cc.agree,
        "parabolicity": par.to_dict(),
    }
    if not par.parabolic:
        payload["warnings"] = [f"system is not Petrovskii-parabolic on the samples (margin {par.margin:.3g})"]
    code = STATUS_EXIT[cc.generic.status] if cc.agree else EXIT_ERROR
    return "check-report", code, payload


def cmd_simulate(cfg: ProblemConfig, out: Path):
    body = cfg.require_body()
    psi = cfg.initial_field()
    res = run_monitored(cfg.system, psi, body, cfg.sim)
    trace = write_trace_csv(out / "trace.csv", res.times, res.max_violation)
    payload = {
        "simulation": res.to_dict(),
        "within_tolerance": bool(res.summary <= res.tolerance),
        "trace": str(trace),
    }
    return "simulate-report", EXIT_OK, payload


def cmd_falsify(cfg: ProblemConfig, out: Path):
    body = cfg.require_body()
    verdict = check_theorem(cfg.system, body, cfg.samples, cfg.tol, cfg.smooth_samples, check_parabolicity=False)
    if verdict.status not in (Status.NOT_INVARIANT, Status.NECESSARY_VIOLATED):
        raise _Failure(EXIT_ERROR, {"type": "PreconditionError",
                                    "message": f"falsify needs a NotInvariant/NecessaryViolated verdict, "
                                               f"got {verdict.status.value}"},
                       verdict=verdict.to_dict())
    w = falsify(cfg.system, body, cfg.sim, budget=cfg.budget, seed=cfg.seed, verdict=verdict,
                samples=cfg.samples, smooth_samples=cfg.smooth_samples)
    payload = {"verdict": verdict.to_dict(), "found": w is not None, "budget": cfg.budget}
    if w is None:
        return "falsify-report", EXIT_EXHAUSTED, payload
    grid = cfg.sim.grid(cfg.n)
    bin_path, json_path = write_field(out / "witness", w.psi, n=cfg.n, m=cfg.m, dx=grid.dx, dt=w.result.dt,
                                      t=0.0, extra={"L": list(grid.L)})
    trace = write_trace_csv(out / "trace.csv", w.result.times, w.result.max_violation)
    payload["witness"] = w.to_dict()
    payload["files"] = {"field": str(bin_path), "header": str(json_path), "trace": str(trace)}
    return "falsify-report", EXIT_OK, payload


COMMANDS = {
    "parabolicity": cmd_parabolicity,
    "check": cmd_check,
    "simulate": cmd_simulate,
    "falsify": cmd_falsify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parainv", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", required=True, help="problem description (JSON)")
        p.add_argument("--out", default=".", help="output directory (default: current directory)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--tol", type=float, default=None, help="override the alignment tolerance")
    return parser


def _write(report: dict, out: Path) -> None:
    validate_report(report)
    text = json.dumps(report, indent=2)
    (out / "report.json").write_text(text + "\n")
    print(text)


def run(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    started = time.perf_counter()
    raw = ""
    seed = args.seed if args.seed is not None else 0
    tol = args.tol

    def base(schema, code):
        return {
            "schema": f"parainv/{schema}",
            "command": args.command,
            "exit_code": code,
            "config": raw,
            "config_sha256": hashlib.sha256(raw.encode("utf-8")).hexdigest(),
            "seed": seed,
            **({"tolerance": tol} if tol is not None else {}),
            "runtime_seconds": time.perf_counter() - started,
        }

    try:
        out.mkdir(parents=True, exist_ok=True)
        try:
            raw = Path(args.config).read_text(encoding="utf-8")
        except OSError:
            pass
        cfg = load_config(args.config, seed=args.seed, tol=args.tol)
        seed, tol = cfg.seed, cfg.tol
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            schema, code, payload = COMMANDS[args.command](cfg, out)
        notes = sorted({str(w.message) for w in caught if issubclass(w.category, RuntimeWarning)})
        if notes:
            payload["warnings"] = payload.get("warnings", []) + notes
    except StabilityError as exc:
        err = {"type": "StabilityError", "message": str(exc), "dt": exc.dt, "dt_max": exc.dt_max,
               "suggested_dt": 0.9 * exc.dt_max}
        print(f"parainv: {exc}", file=sys.stderr)
        _write({**base("error-report", EXIT_UNSTABLE), "error": err}, out)
        return EXIT_UNSTABLE
    except _Failure as exc:
        print(f"parainv: {exc}", file=sys.stderr)
        _write({**base("error-report", exc.code), "error": exc.error, **exc.extra}, out)
        return exc.code
    except (InputError, GeometryError, NumericError) as exc:
        print(f"parainv: {type(exc).__name__}: {exc}", file=sys.stderr)
        if out.is_dir():
            _write({**base("error-report", EXIT_ERROR), "error": {"type": type(exc).__name__,
                                                                 "message": str(exc)}}, out)
        return EXIT_ERROR

    if payload.get("internal_error"):
        print("parainv: internal error: generic and structural verdicts disagree", file=sys.stderr)
    _write({**base(schema, code), **payload}, out)
    return code


def main(argv: Optional[list] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
