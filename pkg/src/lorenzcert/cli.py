"""Command-line front end.

Every subcommand writes its artifacts into the output directory (``--out``,
else ``$LORENZCERT_OUT``, else ``./lorenzcert-out``).  JSON is written with
sorted keys and no timestamps, so identical inputs give identical bytes.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError, LorenzError
from .model import DEFAULT_PRECISION, LorenzModel, ModelParams

OUT_ENV = "LORENZCERT_OUT"
DEFAULT_OUT = "lorenzcert-out"

# keys accepted in a --config file, with the range checks applied to them
CONFIG_KEYS = {
    "model": str, "command": str, "k": int, "m": int, "q": int, "steps": int,
    "eps": str, "tol": str, "out": str, "seed": int, "threads": int,
    "depth": int, "smax": str, "ms": int, "phi": str, "start": str, "T": str,
    "field": str, "point": str, "precision": int, "on": str,
}
RANGES = {
    "k": (1, 8), "m": (1, 16), "q": (3, 16), "steps": (0, 1000), "threads": (1, 256),
    "depth": (1, 20), "ms": (0, 8), "precision": (32, 512), "seed": (0, 2**32 - 1),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _dyadic_text(text: str, name: str, positive: bool = True) -> Fraction:
    try:
        if "^" in text:
            base, exp = text.split("^")
            val = Fraction(base) ** int(exp)
        else:
            val = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{name}: cannot parse {text!r}") from None
    if val.denominator & (val.denominator - 1):
        raise ConfigError(f"{name}: {text} is not a dyadic rational")
    if positive and val <= 0:
        raise ConfigError(f"{name} must be positive")
    return val


def _vector(text: str, n: int, name: str) -> tuple:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != n:
        raise ConfigError(f"{name} needs {n} comma-separated numbers")
    try:
        return tuple(Fraction(p.strip()) for p in parts)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--model", help="JSON file with model parameters")
    common.add_argument("--config", help="JSON run configuration; unknown keys are rejected")
    common.add_argument("--threads", type=int, help="worker threads (never changes outputs)")
    common.add_argument("--precision", type=int, help="working precision in bits")
    common.add_argument("--seed", type=int, help="seed recorded in outputs (no randomness is used)")

    parser = _Parser(prog="lorenzcert", description="Certified computations for the geometric Lorenz model.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check the model hypotheses")
    p.add_argument("--depth", type=int)

    p = sub.add_parser("attractor", parents=[common], help="certified cover of the section attractor")
    p.add_argument("--k", type=int)

    p = sub.add_parser("suspension", parents=[common], help="tube cover of the suspended attractor")
    p.add_argument("--k", type=int)
    p.add_argument("--smax")
    p.add_argument("--ms", type=int)

    p = sub.add_parser("return-time", parents=[common], help="first return time of a testbed field")
    p.add_argument("--field")
    p.add_argument("--point", help="x,y,z for 'circle'; x,y,s for 'model-suspension'")
    p.add_argument("--eps")

    p = sub.add_parser("acim", parents=[common], help="Ulam approximation of the invariant density of f")
    p.add_argument("--q", type=int)
    p.add_argument("--tol")

    p = sub.add_parser("measure", parents=[common], help="section measure and suspension measure")
    p.add_argument("--k", type=int)
    p.add_argument("--ms", type=int)

    p = sub.add_parser("integrate", parents=[common], help="integrate an observable")
    p.add_argument("--phi")
    p.add_argument("--k", type=int)
    p.add_argument("--on", choices=["physical", "section"])

    p = sub.add_parser("birkhoff", parents=[common], help="time average along the suspension flow")
    p.add_argument("--start", help="x,y,s")
    p.add_argument("--T")
    p.add_argument("--phi")
    return parser


DEFAULTS = {
    "depth": 12, "k": 4, "smax": "20", "ms": 2, "field": "circle", "point": "0.5,20,27",
    "eps": "2^-10", "q": 10, "tol": "2^-20", "phi": "one", "on": "physical",
    "start": "0.3,5,0", "T": "1000", "threads": 1, "seed": 0, "precision": DEFAULT_PRECISION,
}


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and command-line flags (flags win)."""
    cfg = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - set(CONFIG_KEYS))
        if unknown:
            raise ConfigError(f"unknown config key(s): {unknown}")
        for key, val in data.items():
            want = CONFIG_KEYS[key]
            if want is str and isinstance(val, (int, float)) and not isinstance(val, bool):
                val = str(val)
            if not isinstance(val, want) or isinstance(val, bool):
                raise ConfigError(f"config key {key!r} must be {want.__name__}")
            cfg[key] = val
        if "command" in cfg and cfg["command"] != args.command:
            raise ConfigError(f"config is for command {cfg['command']!r}, not {args.command!r}")
    for key, val in vars(args).items():
        if key in ("config", "command") or val is None:
            continue
        cfg[key] = val
    merged = dict(DEFAULTS)
    merged.update(cfg)
    for key, (lo, hi) in RANGES.items():
        if key in merged and not lo <= int(merged[key]) <= hi:
            raise ConfigError(f"{key}={merged[key]} outside [{lo}, {hi}]")
    merged["command"] = args.command
    merged["out"] = merged.get("out") or os.environ.get(OUT_ENV) or DEFAULT_OUT
    return merged


def load_model(cfg: dict) -> LorenzModel:
    params = ModelParams()
    if cfg.get("model"):
        params = ModelParams.from_json(cfg["model"])
    return LorenzModel(params, int(cfg["precision"]))


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


class _Writer:
    def __init__(self, out: str):
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written = []

    def text(self, name: str, content: str):
        (self.dir / name).write_text(content)
        self.written.append(name)

    def data(self, name: str, content: bytes):
        (self.dir / name).write_bytes(content)
        self.written.append(name)

    def json(self, name: str, obj):
        self.text(name, _dump(obj))


# -- subcommands ------------------------------------------------------------------


def cmd_validate(cfg, model, w):
    from .model import validate
    from .errors import CertificateError

    report = validate(model.params, int(cfg["depth"]), model.precision)
    w.json("validation.json", report.to_json())
    if not report.passed:
        names = report.failed()
        raise CertificateError(f"validation failed: {names}")
    return {"passed": True}


def cmd_attractor(cfg, model, w):
    from .attractor import compute_attractor

    cert = compute_attractor(int(cfg["k"]), model, int(cfg["threads"]))
    w.json("certificate.json", cert.to_json())
    w.data("attractor.pgm", cert.outer.to_pgm())
    w.text("attractor.csv", cert.outer.to_csv())
    lines = ["x,y"] + [f"{x!r},{y!r}" for x, y in (tuple(map(float, p)) for p in cert.inner)]
    w.text("inner_samples.csv", "\n".join(lines) + "\n")
    return {"cells": len(cert.outer), "n": cert.n_iters, "m": cert.m}


def cmd_suspension(cfg, model, w):
    from .attractor import compute_attractor
    from .flow import suspension_cover

    cert = compute_attractor(int(cfg["k"]), model, int(cfg["threads"]))
    cover = suspension_cover(cert, int(cfg["ms"]), _dyadic_text(str(cfg["smax"]), "smax"))
    w.text("tube.csv", cover.to_csv())
    w.data("tube.ppm", cover.to_ppm())
    w.json("tube.json", cover.summary())
    return cover.summary()


def cmd_return_time(cfg, model, w):
    from .flow import field_by_name, return_time_details

    fld = field_by_name(cfg["field"], model=model)
    point = _vector(cfg["point"], 3, "point")
    eps = _dyadic_text(str(cfg["eps"]), "eps")
    res = return_time_details(fld, point, eps)
    out = {"field": cfg["field"], "point": [str(v) for v in point], **res.to_json()}
    w.json("return_time.json", out)
    return {"time": res.time.to_decimal()}


def cmd_acim(cfg, model, w):
    from .measure import ulam_acim

    dens = ulam_acim(model, int(cfg["q"]), _dyadic_text(str(cfg["tol"]), "tol"))
    w.text("acim.csv", dens.to_csv())
    w.json("acim.json", dens.to_json())
    return {"iterations": dens.iterations}


def cmd_measure(cfg, model, w):
    from .measure import physical_measure

    pm = physical_measure(int(cfg["k"]), model, m_s=int(cfg["ms"]))
    w.text("section_measure.csv", pm.section.to_csv())
    w.data("section_measure.pgm", pm.section.to_pgm())
    w.text("physical_measure.csv", pm.to_csv())
    w.json("measure.json", pm.to_json())
    return {"normalization": pm.normalization().to_json()}


def cmd_integrate(cfg, model, w):
    from .measure import integrate_observable, physical_measure

    pm = physical_measure(int(cfg["k"]), model, m_s=int(cfg["ms"]))
    target = pm if cfg["on"] == "physical" else pm.section
    val = integrate_observable(target, cfg["phi"], model)
    out = {"phi": cfg["phi"], "k": int(cfg["k"]), "on": cfg["on"], "interval": val.to_json(),
           "lo": float(val.lo), "hi": float(val.hi)}
    w.json("integral.json", out)
    return out


def cmd_birkhoff(cfg, model, w):
    from .measure import birkhoff_average

    # decimal starts are rounded to the nearest double, which is dyadic
    start = tuple(Fraction(float(v)) for v in _vector(cfg["start"], 3, "start"))
    T = _dyadic_text(str(cfg["T"]), "T")
    val = birkhoff_average(start, T, cfg["phi"], model)
    out = {"phi": cfg["phi"], "start": [str(v) for v in start], "T": str(T), "average": val}
    w.json("birkhoff.json", out)
    return out


COMMANDS = {
    "validate": cmd_validate, "attractor": cmd_attractor, "suspension": cmd_suspension,
    "return-time": cmd_return_time, "acim": cmd_acim, "measure": cmd_measure,
    "integrate": cmd_integrate, "birkhoff": cmd_birkhoff,
}


def _write_error(out: str, exc: LorenzError):
    try:
        w = _Writer(out)
        w.json("error.json", {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code})
    except OSError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    out = os.environ.get(OUT_ENV) or DEFAULT_OUT
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            raise ConfigError("no subcommand given")
        if args.out:
            out = args.out
        cfg = resolve_config(args)
        out = cfg["out"]
        model = load_model(cfg)
        w = _Writer(out)
        summary = COMMANDS[args.command](cfg, model, w)
    except LorenzError as exc:
        _write_error(out, exc)
        print(f"lorenzcert: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # anything unexpected still leaves a machine-readable trace
        err = LorenzError(f"{type(exc).__name__}: {exc}")
        _write_error(out, err)
        print(f"lorenzcert: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return err.exit_code
    print(json.dumps({"command": args.command, "files": sorted(w.written), "result": summary}, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
