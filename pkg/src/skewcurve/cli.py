"""Command line: ``skewcurve {check,simulate,verify} --config FILE``.

Config grammar, one assignment per line::

    # comment
    section.key = value

Sections and keys:

    model.sigma, model.delta, model.b, model.p
    curve.kind            constant | linear | piecewise | exp
    curve.value           constant level
    curve.intercept, curve.slope
    curve.knots           "t:v, t:v, ..." (first t must be 0)
    curve.a, curve.c, curve.k     exp: a + (c - a) exp(-k t)
    curve.t_max           domain end (default: max of sim.T and check.horizon)
    sim.dt, sim.T, sim.n_paths, sim.seed, sim.band_eps, sim.r0,
    sim.truncation_level, sim.threads, sim.dump_paths
    check.horizon
    verify.experiments    comma separated subset of the lab suite
    verify.controls       true | false

Exit codes: 0 ok, 1 usage, 2 invalid input, 3 numerical failure,
4 experiment failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace
from typing import Optional

from . import criterion, lab
from .engine import DEFAULT_SEED, DEFAULT_TRUNCATION, SimConfig, simulate
from .errors import NumericalFailure, SkewCurveError
from .model import Curve, ModelParams

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC, EXIT_EXPERIMENT = 0, 1, 2, 3, 4

KEYS = {
    "model": ("sigma", "delta", "b", "p"),
    "curve": ("kind", "value", "intercept", "slope", "knots", "a", "c", "k", "t_max"),
    "sim": ("dt", "T", "n_paths", "seed", "band_eps", "r0", "truncation_level", "threads", "dump_paths"),
    "check": ("horizon",),
    "verify": ("experiments", "controls"),
}
CURVE_KEYS = {
    "constant": ("value",),
    "linear": ("intercept", "slope"),
    "piecewise": ("knots",),
    "exp": ("a", "c", "k"),
}


class UsageError(Exception):
    pass


def _num(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SkewCurveError(f"{key}: not a number: {text!r}") from None


def _int(text: str, key: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise SkewCurveError(f"{key}: not an integer: {text!r}") from None


def _bool(text: str, key: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise SkewCurveError(f"{key}: not a boolean: {text!r}")


def _r(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class RunConfig:
    params: Optional[ModelParams] = None
    curve: Optional[Curve] = None
    sim: Optional[SimConfig] = None
    horizon: Optional[float] = None
    experiments: Optional[tuple] = None
    controls: bool = True
    threads: Optional[int] = None
    dump_paths: int = 0

    # -- parsing ------------------------------------------------------------
    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"line {lineno}: expected 'section.key = value'")
            lhs, value = (s.strip() for s in line.split("=", 1))
            if "." not in lhs:
                raise UsageError(f"line {lineno}: key {lhs!r} has no section")
            section, key = lhs.split(".", 1)
            if section not in KEYS:
                raise UsageError(f"line {lineno}: unknown section {section!r}")
            if key not in KEYS[section]:
                raise UsageError(f"line {lineno}: unknown key {lhs!r}")
            if (section, key) in raw:
                raise UsageError(f"line {lineno}: duplicate key {lhs!r}")
            raw[(section, key)] = value
        return cls._build(raw)

    @classmethod
    def _build(cls, raw: dict) -> "RunConfig":
        sections = {s for s, _ in raw}
        get = lambda s, k: raw.get((s, k))  # noqa: E731
        params = None
        if "model" in sections:
            missing = [k for k in KEYS["model"] if get("model", k) is None]
            if missing:
                raise UsageError(f"model section lacks {', '.join(missing)}")
            params = ModelParams(*(_num(get("model", k), f"model.{k}") for k in KEYS["model"]))
        sim = None
        threads = dump = None
        if "sim" in sections:
            for k in ("dt", "T", "n_paths"):
                if get("sim", k) is None:
                    raise UsageError(f"sim section lacks {k}")
            opt = {}
            if get("sim", "seed") is not None:
                opt["seed"] = _int(get("sim", "seed"), "sim.seed")
            for k in ("band_eps", "r0", "truncation_level"):
                if get("sim", k) is not None:
                    opt[k] = _num(get("sim", k), f"sim.{k}")
            sim = SimConfig(
                _num(get("sim", "dt"), "sim.dt"), _num(get("sim", "T"), "sim.T"), _int(get("sim", "n_paths"), "sim.n_paths"), **opt
            )
            if get("sim", "threads") is not None:
                threads = _int(get("sim", "threads"), "sim.threads")
                if threads < 1:
                    raise SkewCurveError(f"sim.threads must be positive, got {threads}")
            if get("sim", "dump_paths") is not None:
                dump = _int(get("sim", "dump_paths"), "sim.dump_paths")
                if dump < 0:
                    raise SkewCurveError(f"sim.dump_paths must be nonnegative, got {dump}")
        horizon = None
        if get("check", "horizon") is not None:
            horizon = _num(get("check", "horizon"), "check.horizon")
        curve = None
        if "curve" in sections:
            curve = cls._curve(get, sim, horizon)
        experiments = None
        if get("verify", "experiments") is not None:
            experiments = tuple(e.strip() for e in get("verify", "experiments").split(",") if e.strip())
            unknown = [e for e in experiments if e not in lab.EXPERIMENTS]
            if unknown:
                raise UsageError(f"unknown experiments: {', '.join(unknown)}")
        controls = True
        if get("verify", "controls") is not None:
            controls = _bool(get("verify", "controls"), "verify.controls")
        return cls(params, curve, sim, horizon, experiments, controls, threads, dump or 0)

    @staticmethod
    def _curve(get, sim, horizon) -> Curve:
        kind = get("curve", "kind")
        if kind is None:
            raise UsageError("curve section lacks kind")
        if kind not in CURVE_KEYS:
            raise SkewCurveError(f"curve.kind must be one of {', '.join(CURVE_KEYS)}, got {kind!r}")
        missing = [k for k in CURVE_KEYS[kind] if get("curve", k) is None]
        if missing:
            raise UsageError(f"{kind} curve lacks {', '.join(missing)}")
        if kind == "piecewise":
            knots = []
            for item in get("curve", "knots").split(","):
                if ":" not in item:
                    raise SkewCurveError(f"curve.knots: expected t:v, got {item.strip()!r}")
                t, v = item.split(":", 1)
                knots.append((_num(t, "curve.knots"), _num(v, "curve.knots")))
            return Curve.piecewise(knots)
        t_max = get("curve", "t_max")
        if t_max is not None:
            end = _num(t_max, "curve.t_max")
        else:
            ends = [x for x in (sim.T if sim else None, horizon) if x is not None]
            if not ends:
                raise UsageError("curve.t_max is required when neither sim.T nor check.horizon is given")
            end = max(ends)
        num = lambda k: _num(get("curve", k), f"curve.{k}")  # noqa: E731
        if kind == "constant":
            return Curve.constant(num("value"), end)
        if kind == "linear":
            return Curve.linear(num("intercept"), num("slope"), end)
        return Curve.exp_relaxation(num("a"), num("c"), num("k"), end)

    # -- serialising ----------------------------------------------------------
    def to_text(self) -> str:
        out = []
        if self.params is not None:
            for k in KEYS["model"]:
                out.append(f"model.{k} = {_r(getattr(self.params, k))}")
        c = self.curve
        if c is not None:
            out.append(f"curve.kind = {c.kind}")
            if c.kind == "constant":
                out.append(f"curve.value = {_r(c.value)}")
            elif c.kind == "linear":
                out += [f"curve.intercept = {_r(c.value)}", f"curve.slope = {_r(c.slope)}"]
            elif c.kind == "exp":
                out += [f"curve.a = {_r(c.a)}", f"curve.c = {_r(c.c)}", f"curve.k = {_r(c.k)}"]
            if c.kind == "piecewise":
                out.append("curve.knots = " + ", ".join(f"{_r(t)}:{_r(v)}" for t, v in c.knots))
            else:
                out.append(f"curve.t_max = {_r(c.domain_end)}")
        s = self.sim
        if s is not None:
            out += [f"sim.dt = {_r(s.dt)}", f"sim.T = {_r(s.T)}", f"sim.n_paths = {s.n_paths}", f"sim.seed = {s.seed}"]
            if s.band_eps is not None:
                out.append(f"sim.band_eps = {_r(s.band_eps)}")
            out += [f"sim.r0 = {_r(s.r0)}", f"sim.truncation_level = {_r(s.truncation_level)}"]
            if self.threads is not None:
                out.append(f"sim.threads = {self.threads}")
            out.append(f"sim.dump_paths = {self.dump_paths}")
        if self.horizon is not None:
            out.append(f"check.horizon = {_r(self.horizon)}")
        if self.experiments is not None:
            out.append("verify.experiments = " + ", ".join(self.experiments))
        out.append(f"verify.controls = {'true' if self.controls else 'false'}")
        return "\n".join(out) + "\n"


DEFAULT_CONFIG = f"""\
# pathwise-uniqueness guaranteed example: p > 1/2 and dlam2/dt <= sigma^2 delta / 4
model.sigma = 2
model.delta = 2
model.b = 0
model.p = 0.75
curve.kind = linear
curve.intercept = 1
curve.slope = 1.5
curve.t_max = 1
sim.dt = 0.001
sim.T = 1
sim.n_paths = 10000
sim.seed = {DEFAULT_SEED}
sim.r0 = 1
sim.truncation_level = {DEFAULT_TRUNCATION:g}
check.horizon = 1
"""


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _need(cfg: RunConfig, *parts):
    names = {"params": "model", "curve": "curve", "sim": "sim"}
    missing = [names[p] for p in parts if getattr(cfg, p) is None]
    if missing:
        raise UsageError(f"config lacks section(s): {', '.join(missing)}")


def _write(out: Optional[str], name: str, text: str):
    if out is None:
        return
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_check(cfg: RunConfig, out: Optional[str] = None) -> int:
    _need(cfg, "params", "curve")
    horizon = cfg.horizon if cfg.horizon is not None else cfg.curve.domain_end
    report = criterion.check_corollary(cfg.params, cfg.curve, horizon)
    text = report.to_text()
    sys.stdout.write(text)
    _write(out, "run.meta", cfg.to_text())
    _write(out, "check.txt", text)
    _write(out, "check.csv", criterion.CriterionReport.CSV_HEADER + "\n" + report.to_csv_row() + "\n")
    return EXIT_OK


def _g(x) -> str:
    return format(float(x), ".17g")


def cmd_simulate(cfg: RunConfig, out: Optional[str] = None) -> int:
    _need(cfg, "params", "curve", "sim")
    batch = simulate(cfg.params, cfg.curve, cfg.sim, workers=cfg.threads)
    _write(out, "run.meta", cfg.to_text())
    _write(out, "summary.csv", batch.summary_csv())
    for i in range(min(cfg.dump_paths, cfg.sim.n_paths)):
        _write(os.path.join(out, "paths") if out else None, f"path_{i:06d}.csv", batch.trajectory(i).to_csv())
    lines = [f"paths={cfg.sim.n_paths}", f"aborted={batch.n_aborted}"]
    for name, values in (("R_T", batch.terminal), ("ell0", batch.ell0), ("ell0_plus", batch.ell0_plus), ("ell0_minus", batch.ell0_minus)):
        mean, se = batch.mean_stderr(values)
        lines.append(f"{name}.mean={_g(mean)} {name}.stderr={_g(se)}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Optional[str] = None) -> int:
    _need(cfg, "params", "curve", "sim")
    experiments = lab.EXPERIMENTS if cfg.experiments is None else cfg.experiments
    if not experiments:
        raise UsageError("verify.experiments is empty")
    reports = lab.run_suite(cfg.params, cfg.curve, cfg.sim, experiments, controls=cfg.controls, workers=cfg.threads)
    _write(out, "run.meta", cfg.to_text())
    _write(out, "suite.csv", lab.suite_csv(reports))
    _write(out, "reports.txt", "\n".join(r.to_text() for r in reports))
    for r in reports:
        sys.stdout.write(f"{r.name}: {r.status}\n")
    return EXIT_OK if lab.suite_passed(reports) else EXIT_EXPERIMENT


COMMANDS = {"check": cmd_check, "simulate": cmd_simulate, "verify": cmd_verify}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skewcurve", description="Skew-reflected CIR simulator and uniqueness checker.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="line-oriented section.key = value file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", help="override sim.seed")
        p.add_argument("--threads", help="worker count (default: machine parallelism)")
    sub.add_parser("default-config", help="print the built-in example config")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        if cfg.sim is None:
            raise UsageError("--seed needs a sim section")
        cfg = replace(cfg, sim=replace(cfg.sim, seed=_int(args.seed, "--seed")))
    if args.threads is not None:
        threads = _int(args.threads, "--threads")
        if threads < 1:
            raise SkewCurveError(f"--threads must be positive, got {threads}")
        cfg = replace(cfg, threads=threads)
    return cfg


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "default-config":
            sys.stdout.write(DEFAULT_CONFIG)
            return EXIT_OK
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        cfg = _apply_overrides(RunConfig.parse(text), args)
        return COMMANDS[args.command](cfg, args.out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SkewCurveError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # keep the exit-code contract total
        print(f"engine failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
