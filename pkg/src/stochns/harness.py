"""Experiment configuration, registry and artifact emission.

Configs are INI files::

    [experiment]
    name = smoothing-grid
    output = out/smoothing

    [model]
    backend = torus
    n = 64

    [noise]
    kind = power
    gamma = 0.5

    [solver]
    dt = 0.001
    T = 1.0

    [mc]
    M = 1000
    seed = 7

Only ``experiment.name`` is required; every other field falls back to the
registered experiment's defaults.  Unknown sections or keys are errors.
"""

import configparser
import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .ergodicity import MCConfig, _jsonable
from .noise import make_coloring
from .rng import Streams
from .solver import BlowUpError, Cutoff, SolverConfig
from .spectral import build_spectrum

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class Experiment:
    name: str
    anchor: str
    runtime: str
    run: object
    defaults: dict = field(default_factory=dict)


_POWER_HALF = {"kind": "power", "gamma": 0.5, "amplitude": 0.5}

REGISTRY = {e.name: e for e in (
    Experiment("smoothing-grid", ex.SMOOTHING, "seconds", ex.smoothing_grid, {"n": 256}),
    Experiment("interpolation", ex.INTERPOLATION, "seconds", ex.interpolation, {"n": 64}),
    Experiment("trilinear-algebra", ex.TRILINEAR, "seconds", ex.trilinear_algebra, {"n": 32}),
    Experiment("ou-law", ex.OU, "minute", ex.ou_law,
               {"n": 16, "coloring": {"kind": "power", "gamma": 0.5}, "dt": 0.01, "T": 1.0,
                "M": 10_000}),
    Experiment("mild-residual", ex.MILD, "seconds", ex.mild_residual_orders,
               {"n": 32, "coloring": {"kind": "power", "gamma": 0.5}, "dt": 1e-3, "T": 1.0}),
    Experiment("apriori-uniformity", ex.APRIORI, "seconds", ex.apriori_uniformity,
               {"n": 64, "coloring": {"kind": "power", "gamma": 0.5}, "dt": 1e-3, "T": 1.0}),
    Experiment("galerkin-convergence", ex.GALERKIN, "seconds", ex.galerkin_convergence,
               {"n": 128, "coloring": {"kind": "power", "gamma": 0.5}, "dt": 1e-3, "T": 1.0}),
    Experiment("regularization", ex.REGULARIZATION, "seconds", ex.regularization,
               {"n": 256, "coloring": {"kind": "power", "gamma": 0.5, "amplitude": 0.1},
                "dt": 1e-3, "T": 1.0}),
    Experiment("control-reachability", ex.CONTROL, "seconds", ex.control_reachability,
               {"n": 32, "coloring": {"kind": "power", "gamma": 0.5}, "dt": 1e-3, "T": 1.0,
                "M": 200}),
    Experiment("derivative-flow", ex.DERIVATIVE, "seconds", ex.derivative_flow,
               {"n": 32, "coloring": _POWER_HALF, "dt": 0.01, "T": 1.0}),
    Experiment("bismut-vs-fd", ex.BISMUT, "minutes", ex.bismut_vs_fd,
               {"n": 16, "coloring": _POWER_HALF, "dt": 0.01, "T": 1.0, "M": 10_000}),
    Experiment("ergodicity-mixing", ex.ERGODIC, "minute", ex.ergodicity_mixing,
               {"n": 16, "coloring": _POWER_HALF, "dt": 0.01, "T": 4.0, "M": 2000,
                "burn_in": 10.0}),
)}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    backend: str = "torus"
    n: int = 32
    coloring: dict = field(default_factory=lambda: {"kind": "power", "gamma": 0.5})
    dt: float = 1e-3
    T: float = 1.0
    integrator: str = "exp-euler"
    M: int = 1000
    burn_in: float = 10.0
    seed: int = 0
    cutoff_radius: float = 5.0
    output: str = "out"

    def describe(self):
        d = asdict(self)
        d.pop("output")
        return d

    def hash(self):
        blob = json.dumps(_jsonable(self.describe()), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_(self, **kw):
        return replace(self, **kw)


# (section, key) -> (config field, parser)
_FIELDS = {
    ("experiment", "name"): ("name", str),
    ("experiment", "output"): ("output", str),
    ("model", "backend"): ("backend", str),
    ("model", "n"): ("n", int),
    ("model", "cutoff_radius"): ("cutoff_radius", float),
    ("solver", "dt"): ("dt", float),
    ("solver", "t"): ("T", float),
    ("solver", "integrator"): ("integrator", str),
    ("mc", "m"): ("M", int),
    ("mc", "burn_in"): ("burn_in", float),
    ("mc", "seed"): ("seed", int),
}
_NOISE_KEYS = {"kind": str, "gamma": float, "eps": float, "amplitude": float,
               "sigma_exponent": float, "sigma_scale": float, "a": float, "b": float}


def _parse(section, key, raw, kind):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}", f"expected {kind.__name__}, got {raw!r}") from None


def parse_config(text, base_dir="."):
    """Parse INI text into an :class:`ExperimentConfig` (validated)."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc).splitlines()[0]) from None
    known = {"experiment", "model", "noise", "solver", "mc"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(sec, "unknown section")
    if not cp.has_option("experiment", "name"):
        raise ConfigError("experiment.name", "required")
    name = cp.get("experiment", "name").strip()
    if name not in REGISTRY:
        raise ConfigError("experiment.name", f"unknown experiment {name!r}")
    values = dict(REGISTRY[name].defaults)
    for sec in cp.sections():
        for key, raw in cp.items(sec):
            if sec == "noise":
                if key not in _NOISE_KEYS:
                    raise ConfigError(f"noise.{key}", "unknown key")
                continue
            if (sec, key) not in _FIELDS:
                raise ConfigError(f"{sec}.{key}", "unknown key")
            fname, kind = _FIELDS[sec, key]
            values[fname] = _parse(sec, key, raw.strip(), kind)
    if cp.has_section("noise"):
        noise = {k: _parse("noise", k, v.strip(), _NOISE_KEYS[k]) for k, v in cp.items("noise")}
        values["coloring"] = noise
    if "output" in values and not Path(values["output"]).is_absolute():
        values["output"] = str(Path(base_dir) / values["output"])
    values["name"] = name
    cfg = ExperimentConfig(**values)
    validate_config(cfg)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)


def _coloring_descriptor(noise, s):
    noise = dict(noise)
    if noise.get("kind") == "sigma":
        exp_ = noise.pop("sigma_exponent", 0.5)
        scale = noise.pop("sigma_scale", 1.0)
        noise["sigma"] = (scale * np.arange(1, s.n + 1) ** exp_).tolist()
    return noise


def validate_config(cfg):
    """Re-check every module invariant the experiment relies on."""
    if cfg.backend not in ("torus", "synthetic"):
        raise ConfigError("model.backend", f"must be 'torus' or 'synthetic', got {cfg.backend!r}")
    if cfg.n < 8:
        raise ConfigError("model.n", f"must be >= 8, got {cfg.n}")
    if not cfg.cutoff_radius >= 0:
        raise ConfigError("model.cutoff_radius", "must be nonnegative")
    if not cfg.dt > 0:
        raise ConfigError("solver.dt", f"must be positive, got {cfg.dt}")
    if not cfg.T > 0:
        raise ConfigError("solver.T", f"must be positive, got {cfg.T}")
    if cfg.seed < 0:
        raise ConfigError("mc.seed", "must be nonnegative")
    try:
        SolverConfig(cfg.n, cfg.dt, cfg.T, cfg.integrator)
    except ValueError as exc:
        raise ConfigError("solver", str(exc)) from None
    try:
        MCConfig(M=cfg.M, t=max(cfg.T, cfg.burn_in + cfg.dt), burn_in=cfg.burn_in, seed=cfg.seed)
    except ValueError as exc:
        raise ConfigError("mc", str(exc)) from None
    s = build_spectrum(cfg.backend, cfg.n)
    try:
        make_coloring(_coloring_descriptor(cfg.coloring, s), s)
    except (ValueError, KeyError) as exc:
        raise ConfigError("noise", str(exc)) from None
    Cutoff(cfg.cutoff_radius)
    return cfg


def list_experiments():
    """``(name, anchor, runtime class)`` in registration order."""
    return [(e.name, e.anchor, e.runtime) for e in REGISTRY.values()]


def _csv(columns, rows):
    def cell(v):
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        return str(v)
    lines = [",".join(columns)] + [",".join(cell(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _dump(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_artifacts(report, cfg, outdir):
    """Write tables, records, summary and manifest; returns the manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, (cols, rows) in sorted(report.tables.items()):
        files[f"{name}.csv"] = _csv(cols, rows)
    files["records.json"] = _dump(report.records)
    files["summary.json"] = _dump({
        "experiment": report.experiment,
        "anchor": REGISTRY[report.experiment].anchor,
        "passed": report.passed,
        "checks": report.checks,
        "config": cfg.describe(),
        "config_hash": cfg.hash(),
    })
    for fname, text in files.items():
        (outdir / fname).write_text(text)
    manifest = {
        "experiment": report.experiment,
        "config_hash": cfg.hash(),
        "rng": Streams(cfg.seed).describe(),
        "files": {f: hashlib.sha256(t.encode()).hexdigest() for f, t in sorted(files.items())},
    }
    (outdir / "manifest.json").write_text(_dump(manifest))
    return manifest


def execute(cfg):
    """Run a validated config and return its :class:`~stochns.experiments.Report`."""
    entry = REGISTRY[cfg.name]
    run_cfg = cfg.with_(coloring=_coloring_descriptor(cfg.coloring,
                                                      build_spectrum(cfg.backend, cfg.n)))
    return entry.run(run_cfg)


def run_experiment(path, out=None):
    """Run one config file; returns the process exit status."""
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        print(f"config error: {exc}")
        return EXIT_CONFIG
    outdir = Path(out) if out else Path(cfg.output)
    start = time.perf_counter()
    try:
        report = execute(cfg)
    except BlowUpError as exc:
        print(f"numerical blow-up: {exc}")
        (outdir).mkdir(parents=True, exist_ok=True)
        (outdir / "summary.json").write_text(_dump({
            "experiment": cfg.name, "anchor": REGISTRY[cfg.name].anchor, "passed": False,
            "blowup": {"step": exc.step, "norms": exc.norms}, "config_hash": cfg.hash()}))
        return EXIT_BLOWUP
    write_artifacts(report, cfg, outdir)
    elapsed = time.perf_counter() - start
    for c in report.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  [{c['anchor']}]")
    print(f"{cfg.name}: {'pass' if report.passed else 'fail'} in {elapsed:.1f}s -> {outdir}")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED
