"""Command-line front end: ``run``, ``compare`` and ``validate``.

Exit codes: 0 success, 2 configuration error, 3 numerical blowup, 4 I/O failure.
``SMRAC_LOG`` sets the log level (e.g. ``INFO``, ``DEBUG``); default ``WARNING``.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import compare_runs, convergence_report
from .engine import run_scenario
from .exceptions import ConfigError, NumericalBlowup, RankDeficient
from .scenario import load_scenario
from .svgplot import comparison_svg, trace_svg
from .system_model import solve_matching

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_IO = 4

log = logging.getLogger("smrac")


class _OutputError(Exception):
    pass


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever ``sys.stderr`` is at emit time."""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


_handler = _StderrHandler()
_handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))


def _configure_logging():
    name = os.environ.get("SMRAC_LOG", "WARNING").strip().upper()
    level = int(name) if name.isdigit() else logging.getLevelName(name)
    if not isinstance(level, int):
        level = logging.WARNING
    log.setLevel(level)
    if _handler not in log.handlers:
        log.addHandler(_handler)


def _fmt_matrix(K):
    rows = ["; ".join(f"{v:.10g}" for v in row) for row in np.atleast_2d(K)]
    return "[" + " | ".join(rows) + "]"


def _fmt_column(K):
    """``n x 1`` gains print as ``[a; b]``; wider ones row by row."""
    K = np.atleast_2d(K)
    if K.shape[1] == 1:
        return "[" + "; ".join(f"{v:.10g}" for v in K[:, 0]) + "]"
    return _fmt_matrix(K)


def _prepare_dir(path):
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _OutputError(f"cannot create output directory {path}: {exc.strerror}") from None


def _write(path, writer):
    try:
        writer(path)
    except OSError as exc:
        raise _OutputError(f"cannot write {path}: {exc.strerror}") from None


def _write_text(text):
    return lambda p: Path(p).write_text(text)


def emit_outputs(result, report, out_dir, decimate=1):
    """Write ``trace.csv``, ``report.json`` and ``plot.svg`` into ``out_dir``."""
    out_dir = Path(out_dir)
    _prepare_dir(out_dir)
    trace = result.trace.decimate(decimate)
    _write(out_dir / "trace.csv", trace.write_csv)
    _write(out_dir / "report.json", _write_text(json.dumps(report, indent=2) + "\n"))
    svg = trace_svg(trace, result.config.schedule.instants, title=f"mode: {result.config.mode}")
    _write(out_dir / "plot.svg", _write_text(svg))
    return out_dir


def run_report(result, source):
    rep = convergence_report(result).to_dict()
    return {
        "scenario": str(source),
        "mode": result.config.mode,
        "s": result.iie.s.tolist(),
        "switches": [
            {"t": ev.t, "from": ev.outgoing, "to": ev.incoming, "V_before": ev.V_before, "V_after": ev.V_after}
            for ev in result.events
        ],
        **rep,
    }


def cmd_run(args):
    cfg = load_scenario(args.scenario)
    if args.decimate < 1:
        raise ConfigError("--decimate must be a positive integer")
    log.info("running %s (%d steps)", args.scenario, cfg.steps)
    result = run_scenario(cfg)
    out = emit_outputs(result, run_report(result, args.scenario), args.out, args.decimate)
    s = result.iie.s.tolist()
    print(f"wrote {out}/trace.csv, report.json, plot.svg; s = {s}; final |e| = {result.trace.e_norm[-1]:.3e}")
    return EXIT_OK


def cmd_compare(args):
    cfg = load_scenario(args.scenario)
    memory = run_scenario(cfg.replace(mode="memory"))
    baseline = run_scenario(cfg.replace(mode="baseline"))
    cmp = compare_runs(memory, baseline)
    out = Path(args.out)
    _prepare_dir(out)
    payload = {"scenario": str(args.scenario), **cmp.to_dict()}
    _write(out / "comparison.json", _write_text(json.dumps(payload, indent=2) + "\n"))
    svg = comparison_svg(memory.trace, baseline.trace, cfg.schedule.instants)
    _write(out / "comparison.svg", _write_text(svg))
    print(
        f"final sum |phi_tilde|: memory {cmp.final_sum_memory:.3e}, baseline {cmp.final_sum_baseline:.3e}; "
        f"wrote {out}/comparison.json, comparison.svg"
    )
    return EXIT_OK


def cmd_validate(args):
    cfg = load_scenario(args.scenario, validate=False)
    for k, sub in enumerate(cfg.subsystems, start=1):
        try:
            g = solve_matching(sub, cfg.reference)
        except (RankDeficient, ConfigError):
            print(f"subsystem {k}: no matching gains")
            continue
        print(f"K_x{k} = {_fmt_column(g.K_x)}  K_r{k} = {_fmt_matrix(g.K_r)}")
    problems = cfg.problems()
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    print("ok")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="smrac", description="Switched MRAC with memory: simulation and checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write trace, report and plot")
    p.add_argument("scenario", help="scenario file, or 'default' for the bundled one")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--decimate", type=int, default=1, metavar="N", help="keep every N-th trace row")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run memory and baseline estimators side by side")
    p.add_argument("scenario")
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="check assumptions and print matching gains")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowup as exc:
        print(f"error: numerical blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except _OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
