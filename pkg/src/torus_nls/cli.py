"""Batch front end: ``torus-nls <subcommand> [F] [options]``.

Exit status: 0 pass, 2 fail, 3 inconclusive, 1 error (I/O, parse,
precondition). Every run writes under ``--out`` and indexes its files in
``<out>/manifest.json``.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import jsonschema

from . import experiments as ex
from .classifier import decide
from .nonlin_poly import ComplexPolynomial4, GaussianRational
from .spectral import GridFunction, make_rough_data
from .solver import SolverConfig, evolve

log = logging.getLogger("torus_nls")

EXIT_PASS, EXIT_ERROR, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3
STATUS_EXIT = {ex.PASS: EXIT_PASS, ex.FAIL: EXIT_FAIL, ex.INCONCLUSIVE: EXIT_INCONCLUSIVE}
SUBCOMMANDS = ("classify", "solve", "gauge-check", "energy", "eps-converge", "bona-smith", "smooth-probe", "ineq-probe")


# -- nonlinearity parser -----------------------------------------------------

class ParseError(ValueError):
    def __init__(self, message: str, token_index: int, column: int, expected: str = ""):
        self.token_index = token_index
        self.column = column
        self.expected = expected
        detail = f"syntax error at token {token_index} (column {column}): {message}"
        if expected:
            detail += f"; expected {expected}"
        super().__init__(detail)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?i?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)
VARIABLES = {"u": 0, "ux": 1, "uc": 2, "uxc": 3}


@dataclass
class _Tok:
    kind: str
    text: str
    column: int
    index: int


def _tokenize(src: str) -> List[_Tok]:
    toks, pos = [], 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            col = pos + len(src[pos:]) - len(src[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {src[col - 1]!r}", len(toks) + 1, col)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind) + 1, len(toks) + 1))
        pos = m.end()
    toks.append(_Tok("end", "", len(src) + 1, len(toks) + 1))
    return toks


class _Parser:
    def __init__(self, src: str):
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, msg, expected=""):
        t = self.tok
        raise ParseError(msg if t.kind != "end" else "unexpected end of input", t.index, t.column, expected)

    def accept(self, *ops) -> Optional[str]:
        if self.tok.kind == "op" and self.tok.text in ops:
            self.i += 1
            return self.toks[self.i - 1].text
        return None

    def parse(self) -> ComplexPolynomial4:
        p = self.expr()
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}", "operator or end of input")
        return p

    def expr(self):
        self.accept("+")
        p = self.term()
        while True:
            op = self.accept("+", "-")
            if op is None:
                return p
            q = self.term()
            p = p + q if op == "+" else p - q

    def term(self):
        p = self.unary()
        while True:
            op = self.accept("*", "/")
            if op is None:
                return p
            if op == "*":
                p = p * self.unary()
            else:
                d = self.unary()
                if d.degree() > 0 or d.is_zero():
                    self.toks_back_fail("division only by a nonzero constant")
                p = p.scale(GaussianRational(1) / d.constant_term())

    def toks_back_fail(self, msg):
        t = self.toks[self.i - 1]
        raise ParseError(msg, t.index, t.column)

    def unary(self):
        # only minus may be repeated; "u + + ux" stays a syntax error
        if self.accept("-"):
            return -self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.accept("^", "**"):
            t = self.tok
            if t.kind != "num" or not t.text.isdigit():
                self.fail(f"unexpected {t.text!r}", "non-negative integer exponent")
            self.i += 1
            return base ** int(t.text)
        return base

    def atom(self) -> ComplexPolynomial4:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return ComplexPolynomial4.constant(_literal(t))
        if t.kind == "name":
            self.i += 1
            if t.text in VARIABLES:
                return ComplexPolynomial4.var(VARIABLES[t.text])
            if t.text == "i":
                return ComplexPolynomial4.constant(GaussianRational(0, 1))
            raise ParseError(f"unknown name {t.text!r}", t.index, t.column, "u, ux, uc, uxc, i or a rational literal")
        if self.accept("("):
            p = self.expr()
            if not self.accept(")"):
                self.fail(f"unexpected {self.tok.text!r}", "')'")
            return p
        self.fail(f"unexpected {t.text!r}", "operand")


def _literal(t: _Tok) -> GaussianRational:
    text = t.text
    imag = text.endswith("i")
    body = text[:-1] if imag else text
    if "e" in body.lower():
        raise ParseError(f"non-rational literal {text!r}", t.index, t.column, "integer or finite decimal")
    q = Fraction(body)
    return GaussianRational(0, q) if imag else GaussianRational(q)


def parse_nonlinearity(src: str) -> ComplexPolynomial4:
    """Parse e.g. ``"i*(2*u*uc*ux + u^2*uxc)"`` into an exact polynomial."""
    if not isinstance(src, str):
        raise TypeError("nonlinearity must be a string")
    return _Parser(src).parse()


# -- run configuration -------------------------------------------------------

def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low not in ("true", "false"):
        raise ValueError(f"expected true or false, got {text!r}")
    return low == "true"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ",".join(repr(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# key -> (parser, description); keys absent from a config take DEFAULTS or SUBCOMMAND_DEFAULTS
CONFIG_SCHEMA = {
    "subcommand": (str, "one of " + ", ".join(SUBCOMMANDS)),
    "nonlinearity": (str, "F in u, ux, uc, uxc"),
    "data": (str, "smooth | rough | decay | modes"),
    "modes": (str, "k:value pairs for data=modes, e.g. 0:1,1:0.1+0.2j"),
    "rough_s": (float, "rough data regularity"),
    "rough_delta": (float, "extra decay of the rough tail"),
    "rough_side": (str, "plus | minus | both"),
    "rough_amplitude": (float, "rough tail amplitude"),
    "decay_excess": (float, "data=decay: phi_hat ~ <k>^(-s-1/2-excess)"),
    "grid": (int, "grid size n (power of two)"),
    "eps": (_floats, "viscosity list (first entry used by single-run commands)"),
    "dt": (float, "time step; 0 selects the stability-guard step"),
    "T_end": (float, "final time"),
    "stride": (int, "snapshot stride"),
    "s": (float, "Sobolev index"),
    "s0": (float, "lower Sobolev index (bona-smith)"),
    "r": (float, "second Sobolev index"),
    "N_list": (_ints, "truncation levels (bona-smith)"),
    "n_list": (_ints, "grid sizes (energy, ineq-probe)"),
    "frequencies": (_ints, "probe frequencies (gauge-check)"),
    "inequality": (str, "ineq-probe target: " + ", ".join(ex.INEQUALITIES)),
    "samples": (int, "samples per grid (ineq-probe)"),
    "control": (_bool, "smooth-probe control mode"),
    "use_gauge": (_bool, "gauge-check: apply the gauge"),
    "seed": (int, "random seed"),
    "out": (str, "output directory"),
}

DEFAULTS = {
    "data": "smooth",
    "modes": "",
    "rough_s": 2.6,
    "rough_delta": 0.25,
    "rough_side": "both",
    "rough_amplitude": 1.0,
    "decay_excess": 0.08,
    "dt": 0.0,
    "stride": 1,
    "s": 2.6,
    "s0": 2.55,
    "r": 1.6,
    "N_list": [8, 16, 32, 64],
    "frequencies": [16, 32, 64],
    "inequality": "commutator_2_5",
    "samples": 500,
    "control": False,
    "use_gauge": True,
    "seed": 0,
    "out": "runs",
}

SUBCOMMAND_DEFAULTS = {
    "classify": {},
    "solve": {"nonlinearity": "2*uc*uxc", "grid": 64, "eps": [1e-3], "T_end": 0.1},
    "gauge-check": {"nonlinearity": "2*u*uc*ux + u^2*uxc", "grid": 512, "eps": [0.0]},
    "energy": {"nonlinearity": "2*u*uc*ux + u^2*uxc", "data": "rough", "rough_amplitude": 0.3, "modes": "0:1,1:0.1",
               "n_list": [128, 256], "eps": [1e-4], "T_end": 0.02, "r": 2.6},
    "eps-converge": {"nonlinearity": "2*uc*uxc", "grid": 256, "T_end": 0.1,
                     "eps": [1e-2, 10 ** -2.5, 1e-3, 10 ** -3.5], "modes": "1:0.2,2:0.1", "data": "modes"},
    "bona-smith": {"nonlinearity": "2*uc*uxc", "data": "decay", "grid": 512, "T_end": 0.1, "eps": [0.0]},
    "smooth-probe": {"nonlinearity": "i*(2*u*uc*ux + u^2*uxc)", "data": "rough", "grid": 1024,
                     "eps": [1e-3], "T_end": 0.03, "stride": 4},
    "ineq-probe": {"n_list": [64, 128, 256]},
}


@dataclass
class RunConfig:
    values: Dict[str, object] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def to_text(self) -> str:
        """Canonical ``key = value`` text; parse_config(to_text()) round-trips."""
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in sorted(self.values.items()))

    def resolved(self) -> "RunConfig":
        sub = self.values.get("subcommand")
        if sub not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {sub!r}")
        merged = dict(DEFAULTS)
        merged.update(SUBCOMMAND_DEFAULTS[sub])
        merged.update(self.values)
        return RunConfig(merged)


def parse_value(key: str, text: str):
    if key not in CONFIG_SCHEMA:
        raise ValueError(f"unknown config key {key!r}")
    try:
        return CONFIG_SCHEMA[key][0](text.strip())
    except ValueError as exc:
        raise ValueError(f"bad value for {key}: {exc}") from None


def parse_config(text: str) -> RunConfig:
    """Flat ``key = value`` lines; '#' starts a comment; unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        values[key] = parse_value(key, val)
    return RunConfig(values)


def parse_modes(n: int, text: str) -> GridFunction:
    modes = {}
    for item in filter(None, (x.strip() for x in text.split(","))):
        k, _, v = item.partition(":")
        modes[int(k)] = complex(v.replace(" ", ""))
    return GridFunction.from_modes(n, modes)


def build_data(cfg: RunConfig, n: int) -> GridFunction:
    kind = cfg["data"]
    if kind == "smooth":
        return GridFunction.from_modes(n, {1: 0.2, 2: 0.1})
    if kind == "modes":
        return parse_modes(n, cfg["modes"])
    if kind == "rough":
        base = parse_modes(n, cfg["modes"]) if cfg["modes"] else GridFunction.constant(n, 1.0)
        return make_rough_data(cfg["rough_s"], cfg["rough_delta"], cfg["rough_side"], base, cfg["rough_amplitude"])
    if kind == "decay":
        return ex.synthetic_decay_data(n, cfg["s"], cfg["decay_excess"], amplitude=0.1)
    raise ValueError(f"unknown data kind {kind!r}")


# -- schemas and output ------------------------------------------------------

def load_schema(name: str) -> dict:
    return json.loads(resources.files("torus_nls").joinpath("schemas", f"{name}.schema.json").read_text())


def validate(doc: dict, name: str) -> None:
    jsonschema.validate(doc, load_schema(name))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _update_manifest(out: Path, run_name: str, entry: dict) -> None:
    mpath = out / "manifest.json"
    manifest = json.loads(mpath.read_text()) if mpath.exists() else {"schema": "torus_nls.manifest/1", "runs": {}}
    manifest["runs"][run_name] = entry
    validate(manifest, "manifest")
    _write(mpath, json.dumps(manifest, indent=2, sort_keys=True))


def write_report(report: ex.ExperimentReport, out: Path, run_name: str, cfg: RunConfig) -> List[str]:
    doc = report.to_dict()
    validate(doc, "report")
    d = out / run_name
    _write(d / "report.json", report.to_json())
    _write(d / "series.csv", ex.series_csv(report))
    _write(d / "plot.csv", ex.plot_data_csv(report))
    _write(d / "config.txt", cfg.to_text())
    return [f"{run_name}/report.json", f"{run_name}/series.csv", f"{run_name}/plot.csv", f"{run_name}/config.txt"]


# -- dispatch ----------------------------------------------------------------

def _eps1(cfg) -> float:
    return float(cfg["eps"][0])


def run(cfg: RunConfig, quiet: bool = False) -> int:
    cfg = cfg.resolved()
    sub = cfg["subcommand"]
    out = Path(cfg["out"])
    seed = cfg["seed"]
    F = None
    if sub != "ineq-probe":
        if "nonlinearity" not in cfg.values:
            raise ValueError(f"{sub} needs a nonlinearity")
        F = parse_nonlinearity(cfg["nonlinearity"])
    run_name = sub
    say = (lambda *a: None) if quiet else print

    if sub == "classify":
        verdict = decide(F, seed=seed)
        doc = verdict.to_dict()
        validate(doc, "verdict")
        _write(out / run_name / "verdict.json", json.dumps(doc, indent=2, sort_keys=True))
        _write(out / run_name / "config.txt", cfg.to_text())
        _update_manifest(out, run_name, {"kind": "verdict", "status": verdict.status,
                                         "files": [f"{run_name}/verdict.json", f"{run_name}/config.txt"]})
        say(f"{verdict.status}: " + (json.dumps(doc["witness"]) if doc["witness"] else "exact potential found"))
        return EXIT_PASS

    if sub == "solve":
        n = cfg["grid"]
        phi = build_data(cfg, n)
        dt = cfg["dt"] or ex.auto_dt(F, phi, cfg["T_end"])
        sc = SolverConfig(n=n, eps=_eps1(cfg), dt=dt, T_end=cfg["T_end"], snapshot_stride=cfg["stride"],
                          seed=seed, diag_s=(cfg["s"],))
        traj = evolve(F, phi, sc)
        traj.save(out / run_name)
        _write(out / run_name / "config.txt", cfg.to_text())
        status = ex.INCONCLUSIVE if traj.overflowed else ex.PASS
        _update_manifest(out, run_name, {"kind": "trajectory", "status": status,
                                         "files": [f"{run_name}/manifest.json", f"{run_name}/config.txt"]})
        say(f"solve: {len(traj)} snapshots to t={traj.times[-1]:g}" + (" (overflowed)" if traj.overflowed else ""))
        return STATUS_EXIT[status]

    if sub == "gauge-check":
        report = ex.gauge_check_study(F, n=cfg["grid"], frequencies=cfg["frequencies"], eps=_eps1(cfg),
                                      use_gauge=cfg["use_gauge"], amplitude_exponent=cfg["s"], seed=seed)
    elif sub == "energy":
        report = ex.energy_study(F, lambda n: build_data(cfg, n), n_list=cfg["n_list"], s=cfg["s"], r=cfg["r"],
                                 eps=_eps1(cfg), T_end=cfg["T_end"], seed=seed)
    elif sub == "eps-converge":
        n = cfg["grid"]
        report = ex.eps_convergence_study(F, build_data(cfg, n), cfg["eps"], s=cfg["s"], T_end=cfg["T_end"],
                                          dt=cfg["dt"] or None, seed=seed)
    elif sub == "bona-smith":
        n = cfg["grid"]
        report = ex.bona_smith_study(F, build_data(cfg, n), cfg["N_list"], s=cfg["s"], s0=cfg["s0"], r=cfg["r"],
                                     T_end=cfg["T_end"], eps=_eps1(cfg), dt=cfg["dt"] or None, seed=seed)
    elif sub == "smooth-probe":
        n = cfg["grid"]
        report = ex.smoothing_probe(F, build_data(cfg, n), eps=_eps1(cfg), s=cfg["rough_s"], delta=cfg["rough_delta"],
                                    T_end=cfg["T_end"], snapshot_stride=cfg["stride"], control=cfg["control"], seed=seed)
    else:
        report = ex.inequality_probe(cfg["inequality"], sample_count=cfg["samples"], n_list=cfg["n_list"], seed=seed)
    files = write_report(report, out, run_name, cfg)
    _update_manifest(out, run_name, {"kind": "report", "status": report.status, "files": files})
    say(f"{sub}: {report.status}  {json.dumps(ex._plain(report.fits), sort_keys=True)}")
    return STATUS_EXIT[report.status]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="torus-nls", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("nonlinearity", nargs="?", help='e.g. "i*(2*u*uc*ux + u^2*uxc)"')
    p.add_argument("--config", type=Path, help="flat key = value file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str)
    p.add_argument("--grid", type=int)
    p.add_argument("--eps", type=str, help="comma-separated viscosities")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    p.add_argument("--quiet", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config is not None:
        values.update(parse_config(args.config.read_text()).values)
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = parse_value(key.strip(), val)
    values["subcommand"] = args.subcommand
    if args.nonlinearity is not None:
        values["nonlinearity"] = args.nonlinearity
    for key, raw in (("seed", args.seed), ("out", args.out), ("grid", args.grid)):
        if raw is not None:
            values[key] = raw
    if args.eps is not None:
        values["eps"] = parse_value("eps", args.eps)
    return RunConfig(values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return run(config_from_args(args), quiet=args.quiet)
    except (ValueError, OSError, ArithmeticError, jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
