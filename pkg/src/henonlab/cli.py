"""Batch front end: ``henonlab COMMAND [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 1 failed self-check, 2 invalid configuration,
3 regime refusal, 4 solver or sweep failure, 5 I/O error.
"""
from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .errors import ConfigError, DomainError, NotConverged, NotFound, RegimeRefusal, RescaleFailed
from .experiments import (
    _plain,
    henon_source,
    scaling_diagnostic,
    stability_sweep,
    stampacchia_diagnostic,
    strauss_check,
    write_csv,
)
from .kernel import build_kernel_table
from .mesh import DiscreteField, RadialMesh
from .problem import ProblemSpec, classify_regime
from .selftest import run_all
from .solver import SolverOptions, minimize_rayleigh
from .symmetry import CSV_COLUMNS, find_alpha_star

log = logging.getLogger("henonlab")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_REGIME, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3, 4, 5

COMMANDS = ("classify", "solve", "symmetry", "stability", "scaling", "stampacchia", "check")


def _floats(text):
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


# section -> key -> (parser, default)
SCHEMA = {
    "problem": {
        "n": (int, 3),
        "s": (float, 0.5),
        "p": (float, 2.0),
        "q": (float, 4.0),
        "alpha": (float, 1.0),
        "beta": (float, 0.5),
        "normalization": (str, "bbm"),
    },
    "mesh": {"M": (int, 256), "grading": (float, 2.0)},
    "solver": {
        "tol": (float, 1e-8),
        "max_iter": (int, 3000),
        "seed": (int, 0),
        "mode": (str, "convex"),
    },
    "symmetry": {
        "alpha_min": (float, 0.0),
        "alpha_max": (float, 50.0),
        "tol": (float, 1e-3),
        "grid": (_floats, None),
    },
    "stability": {"s_values": (_floats, [0.5, 0.7, 0.9, 0.99])},
    "scaling": {"lambdas": (_floats, [1.0, 2.0, 4.0, 8.0]), "profile": (str, "parabola")},
    "stampacchia": {"r_exp": (float, 2.0), "delta": (float, None), "K": (int, 20)},
    "output": {"dir": (str, "henonlab_out")},
    "run": {"deterministic": (lambda t: t.strip().lower() in ("1", "true", "yes", "on"), False), "threads": (int, 1)},
}


@dataclass
class RunConfig:
    spec: ProblemSpec
    values: dict
    echo: dict = field(default_factory=dict)

    def get(self, section, key):
        return self.values[section][key]


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Read an INI file, reject unknown sections/keys, validate the problem."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if path:
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"unparseable config: {exc}") from exc
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    echo = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        echo[sec] = {}
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            conv = SCHEMA[sec][key][0]
            try:
                values[sec][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key} = {raw!r}: {exc}") from exc
            echo[sec][key] = raw
    for (sec, key), val in (overrides or {}).items():
        values[sec][key] = val
    if values["solver"]["mode"] not in ("convex", "additive"):
        raise ConfigError("solver mode must be convex or additive")
    try:
        spec = ProblemSpec(**values["problem"])
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"invalid problem: {exc}") from exc
    return RunConfig(spec, values, echo)


class Outputs:
    """Tracks written files for the manifest."""

    def __init__(self, root: Path, tag: str):
        self.root = root
        self.tag = tag
        self.files: list[Path] = []

    def path(self, stem: str, ext: str) -> Path:
        p = self.root / f"{stem}_{self.tag}.{ext}"
        self.files.append(p)
        return p

    def json(self, stem: str, payload) -> Path:
        p = self.path(stem, "json")
        p.write_text(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n")
        return p

    def csv(self, stem: str, header, rows) -> Path:
        p = self.path(stem, "csv")
        write_csv(p, header, rows)
        return p

    def text(self, stem: str, content: str, ext="txt") -> Path:
        p = self.path(stem, ext)
        p.write_text(content)
        return p


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _solver_opts(cfg: RunConfig, override: bool) -> SolverOptions:
    s = cfg.values["solver"]
    return SolverOptions(tol=s["tol"], max_iter=s["max_iter"], seed=s["seed"], mode=s["mode"], override_critical=override)


def _mesh(cfg: RunConfig) -> RadialMesh:
    m = cfg.values["mesh"]
    return RadialMesh(m["M"], cfg.spec.n, m["grading"])


# ---------------------------------------------------------------------------
# commands


def cmd_classify(cfg, out, args):
    rep = classify_regime(cfg.spec)
    for k, v in rep.as_dict().items():
        print(f"{k} = {v:.17g}" if isinstance(v, float) else f"{k} = {v}")
    out.json("classify", {"spec": cfg.spec.as_dict(), "report": rep.as_dict()})
    return EXIT_OK


def _solve(cfg, args, spec=None):
    spec = spec or cfg.spec
    kt = build_kernel_table(spec, _mesh(cfg))
    gs = minimize_rayleigh(spec, kt, None, _solver_opts(cfg, args.override_critical))
    return gs, kt


def cmd_solve(cfg, out, args):
    try:
        gs, kt = _solve(cfg, args)
    except NotConverged as exc:
        if exc.state is not None:
            out.csv("trace", ("iteration", "R", "residual", "step"), exc.state.history)
            out.json("solve", {"spec": cfg.spec.as_dict(), "ground_state": exc.state.summary()})
        raise
    out.csv("trace", ("iteration", "R", "residual", "step"), gs.history)
    out.text("field", gs.field.to_text())
    out.text("solution", gs.solution.to_text())
    out.csv("solution", ("r", "u_normalized", "u_solution"),
            zip(gs.field.mesh.nodes, gs.field.values, gs.solution.values))
    decay = strauss_check(gs.solution, cfg.spec, kt)
    out.json("solve", {
        "spec": cfg.spec.as_dict(),
        "regime": classify_regime(cfg.spec).as_dict(),
        "ground_state": gs.summary(),
        "strauss": decay.as_dict(),
    })
    print(f"R = {gs.R:.12g}  residual_rel = {gs.residual_rel:.3e}  iterations = {gs.iterations}")
    return EXIT_OK


def cmd_symmetry(cfg, out, args):
    sym = cfg.values["symmetry"]
    try:
        sweep = find_alpha_star(
            cfg.spec,
            (sym["alpha_min"], sym["alpha_max"]),
            tol=sym["tol"],
            grid=sym["grid"],
            M=cfg.values["mesh"]["M"],
            grading=cfg.values["mesh"]["grading"],
            opts=_solver_opts(cfg, args.override_critical),
            threads=args.threads,
        )
    except NotFound as exc:
        if exc.sweep is not None:
            out.csv("symmetry", CSV_COLUMNS, exc.sweep.rows())
            out.json("symmetry", exc.sweep.as_dict())
        raise
    out.csv("symmetry", CSV_COLUMNS, sweep.rows())
    out.json("symmetry", sweep.as_dict())
    print(f"alpha_star_gap = {sweep.alpha_star_gap:.6g}  bracket = {sweep.bracket}")
    return EXIT_OK


def cmd_stability(cfg, out, args):
    rep = stability_sweep(
        cfg.spec,
        cfg.values["stability"]["s_values"],
        M=cfg.values["mesh"]["M"],
        grading=cfg.values["mesh"]["grading"],
        opts=_solver_opts(cfg, args.override_critical),
        threads=args.threads,
    )
    out.csv("stability", rep.header, rep.rows())
    out.json("stability", {"spec": cfg.spec.as_dict(), "report": rep.as_dict()})
    for s, d in zip(rep.s_values, rep.distances):
        print(f"s = {s:g}  distance = {d:.6g}")
    return EXIT_OK


def cmd_scaling(cfg, out, args):
    sc = cfg.values["scaling"]
    kt = build_kernel_table(cfg.spec, _mesh(cfg))
    if sc["profile"] == "parabola":
        u = DiscreteField.from_function(kt.mesh, lambda r: 1.0 - r * r)
    else:
        u = DiscreteField.from_text(Path(sc["profile"]).read_text())
        if not u.mesh.same_as(kt.mesh):
            raise ConfigError("profile field lives on a different mesh than [mesh]")
    rep = scaling_diagnostic(u, cfg.spec, kt, sc["lambdas"], cfg.values["solver"]["mode"])
    out.csv("scaling", rep.header, rep.rows())
    out.json("scaling", {"spec": cfg.spec.as_dict(), "report": rep.as_dict()})
    print(f"fitted_slope = {rep.fitted_slope:.6g}  analytic_slope = {rep.analytic_slope:.6g}")
    return EXIT_OK


def cmd_stampacchia(cfg, out, args):
    st = cfg.values["stampacchia"]
    gs, kt = _solve(cfg, args)
    u = gs.solution
    rep = stampacchia_diagnostic(u, henon_source(u, cfg.spec), cfg.spec, st["r_exp"], st["delta"], st["K"])
    out.csv("stampacchia", rep.header, rep.rows())
    out.json("stampacchia", {"spec": cfg.spec.as_dict(), "report": rep.as_dict()})
    print(f"gamma_fit = {rep.gamma_fit:.6g}  bound_holds = {rep.bound_holds}")
    return EXIT_OK


def cmd_check(cfg, out, args):
    results = run_all()
    for r in results:
        print(r.line())
    out.json("check", [{"name": r.name, "value": r.value, "tolerance": r.tolerance, "passed": r.passed} for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


HANDLERS = {
    "classify": cmd_classify,
    "solve": cmd_solve,
    "symmetry": cmd_symmetry,
    "stability": cmd_stability,
    "scaling": cmd_scaling,
    "stampacchia": cmd_stampacchia,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output directory (overrides [output] dir)")
    common.add_argument("--override-critical", action="store_true", help="solve outside the existence regime")
    common.add_argument("--deterministic", action="store_true", help="single-threaded, fixed evaluation order")
    common.add_argument("--threads", type=int, default=None, help="worker threads for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="henonlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"henonlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    run_opts = cfg.values["run"]
    args.deterministic = args.deterministic or run_opts["deterministic"]
    threads = args.threads if args.threads is not None else run_opts["threads"]
    args.threads = 1 if args.deterministic else max(1, threads)

    root = Path(args.out or cfg.values["output"]["dir"])
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = Outputs(root, cfg.spec.spec_hash())

    status = EXIT_OK
    error = None
    try:
        status = HANDLERS[args.command](cfg, out, args)
    except RegimeRefusal as exc:
        status, error = EXIT_REGIME, str(exc)
    except (NotConverged, RescaleFailed, NotFound) as exc:
        status, error = EXIT_SOLVER, f"{type(exc).__name__}: {exc}"
    except (ConfigError, DomainError) as exc:
        status, error = EXIT_CONFIG, f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        status, error = EXIT_IO, str(exc)
    if error:
        print(error, file=sys.stderr)

    manifest = {
        "command": args.command,
        "config_file": args.config,
        "config": {sec: {k: _plain(v) for k, v in vals.items()} for sec, vals in cfg.values.items()},
        "config_echo": cfg.echo,
        "spec_hash": cfg.spec.spec_hash(),
        "versions": {
            "henonlab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "deterministic": args.deterministic,
        "threads": args.threads,
        "override_critical": args.override_critical,
        "exit_status": status,
        "error": error,
        "wall_time_s": time.perf_counter() - t0,
        "files": [{"path": p.name, "sha256": _sha256(p)} for p in out.files if p.exists()],
    }
    try:
        (root / f"manifest_{args.command}_{out.tag}.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
