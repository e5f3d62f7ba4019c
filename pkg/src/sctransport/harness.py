"""Experiment configuration, dispatch, data emission and run manifests.

Configs are INI files with one section per experiment kind; values given on
the command line override the file.  Every experiment writes CSVs, one
generated plotting script per figure-like output, and ``manifest.json``.
"""

from __future__ import annotations

import configparser
import datetime as _dt
import json
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .io import fmt, sha256, write_csv

KINDS = ("trajectory", "escape-scan", "horn", "circles", "spo-branch", "normal-form")

TWO_PI = 2.0 * math.pi
GOLDEN = TWO_PI * (math.sqrt(5.0) - 1.0) / 2.0

# Defaults follow the figure captions they reproduce.
DEFAULTS: dict[str, dict[str, Any]] = {
    "trajectory": {
        "nx": 160,
        "ny": 84,
        "x_lo": 0.0,
        "x_hi": TWO_PI,
        "y_lo": -0.3,
        "y_hi": 0.3,
        "gamma": 3e-6,
        "kappa0": 1e-4,
        "theta0": 0.0,
        "omega": 0.0,
        "n_steps": 1000,
        "snapshots": [2, 6, 12, 20, 66],
    },
    "escape-scan": {
        "kappa_bar": [0.6, 0.8],
        "delta_kappa": [0.3, 0.2, 0.1, 0.05],
        "nx": 100,
        "ny": 100,
        "y_m": math.pi / 5,
        "ell": 1,
        "max_iters": 100_000,
    },
    "horn": {
        "kappa1": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        "nx": 100,
        "ny": 100,
        "y_m": 3 * math.pi / 5,
        "ell": 1,
        "max_iters": 500_000,
        "tol": 1e-3,
        "kappa2_max": 1.2,
        "prescan": 5,
        "diagonal": True,
    },
    "circles": {
        "kappa1": 0.7,
        "kappa2": 0.8,
        "omega": GOLDEN,
        "J": 256,
        "tol": 1e-11,
        "nx": 1024,
        "witness_iters": 10_000,
    },
    "spo-branch": {
        "p": 1,
        "q": 3,
        "alpha": 0.01,
        "kappa0": [0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.25, 0.3],
        "kinds": ["elliptic", "hyperbolic"],
        "theta0": 0.0,
        "tol": 1e-12,
        "nf_order": 6,
    },
    "normal-form": {
        "p": 1,
        "q": 3,
        "order": 6,
    },
}


class ConfigError(ValueError):
    pass


class ExperimentError(RuntimeError):
    def __init__(self, kind: str, cause: BaseException):
        super().__init__(f"{kind}: {type(cause).__name__}: {cause}")
        self.kind = kind
        self.cause = cause


def _coerce(raw: str, like: Any) -> Any:
    raw = raw.strip()
    if isinstance(like, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"not a boolean: {raw!r}")
    if isinstance(like, list):
        elem = like[0] if like else 0.0
        return [_coerce(v, elem) for v in raw.split(",") if v.strip()]
    if isinstance(like, int):
        v = float(raw)
        if v != int(v):
            raise ConfigError(f"not an integer: {raw!r}")
        return int(v)
    if isinstance(like, float):
        return float(raw)
    return raw


@dataclass
class ExperimentConfig:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    out_dir: Path = Path("out")
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        merged = dict(DEFAULTS[self.kind])
        for k, v in self.params.items():
            if k not in merged:
                raise ConfigError(f"unknown parameter {k!r} for kind {self.kind}")
            merged[k] = _coerce(v, DEFAULTS[self.kind][k]) if isinstance(v, str) else v
        self.params = merged
        self.out_dir = Path(self.out_dir)

    @classmethod
    def from_sources(
        cls,
        kind: str,
        config_path: str | Path | None = None,
        overrides: dict[str, str] | None = None,
        out_dir: str | Path | None = None,
        workers: int | None = None,
    ) -> "ExperimentConfig":
        """File values first, then command-line overrides."""
        params: dict[str, Any] = {}
        run_out, run_workers = "out", 1
        if config_path is not None:
            cp = configparser.ConfigParser()
            if not cp.read(config_path):
                raise ConfigError(f"cannot read config file {config_path}")
            if cp.has_section(kind):
                params.update(dict(cp.items(kind)))
            if cp.has_section("run"):
                run_out = cp.get("run", "out", fallback=run_out)
                run_workers = cp.getint("run", "workers", fallback=run_workers)
        params.update(overrides or {})
        return cls(
            kind,
            params,
            Path(out_dir if out_dir is not None else run_out),
            int(workers if workers is not None else run_workers),
        )

    def echo(self) -> dict:
        return {"kind": self.kind, "params": self.params, "out_dir": str(self.out_dir), "workers": self.workers}

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp[self.kind] = {k: ",".join(fmt(x) for x in v) if isinstance(v, list) else fmt(v) for k, v in self.params.items()}
        cp["run"] = {"out": str(self.out_dir), "workers": str(self.workers)}
        import io as _io

        buf = _io.StringIO()
        cp.write(buf)
        return buf.getvalue()


# --------------------------------------------------------------------------
# validation


def validate(cfg: ExperimentConfig) -> list[str]:
    """Empty list iff the parameters satisfy the owning module's preconditions."""
    P = cfg.params
    v: list[str] = []

    def need(cond: bool, msg: str):
        if not cond:
            v.append(msg)

    need(cfg.workers >= 1, "workers must be >= 1")
    for key in ("nx", "ny"):
        if key in P:
            need(P[key] >= 1, f"{key} must be >= 1")
    if "max_iters" in P:
        need(P["max_iters"] >= 0, "max_iters must be >= 0")
    if "ell" in P:
        need(P["ell"] >= 1, "ell must be >= 1")
    k = cfg.kind
    if k == "trajectory":
        need(P["x_lo"] < P["x_hi"] and P["y_lo"] < P["y_hi"], "grid ranges must satisfy lo < hi")
        need(P["n_steps"] >= 1, "n_steps must be >= 1")
        need(P["kappa0"] >= 0, "kappa0 must be >= 0")
        need(all(0 <= s <= P["n_steps"] for s in P["snapshots"]), "snapshots must lie in [0, n_steps]")
    elif k == "escape-scan":
        need(P["y_m"] > 0, "y_m must be > 0")
        for kb in P["kappa_bar"]:
            for dk in P["delta_kappa"]:
                need(kb - dk / 2 >= 0, f"kappa1 = kappa_bar - delta/2 < 0 at ({kb}, {dk})")
        need(all(d >= 0 for d in P["delta_kappa"]), "delta_kappa must be >= 0")
    elif k == "horn":
        need(all(0 <= x <= 0.971635406 for x in P["kappa1"]), "kappa1 values must lie in [0, kappa_c]")
        need(P["tol"] > 0, "tol must be > 0")
        need(P["kappa2_max"] > max(P["kappa1"], default=0.0), "kappa2_max must exceed every kappa1")
        need(P["y_m"] > 0, "y_m must be > 0")
        need(P["prescan"] == 0 or P["prescan"] >= 2, "prescan must be 0 or >= 2")
    elif k == "circles":
        need(P["J"] >= 4, "J must be >= 4")
        need(P["tol"] > 0, "tol must be > 0")
        need(P["kappa1"] >= 0 and P["kappa2"] >= 0, "kappa values must be >= 0")
        need(P["nx"] >= 8, "nx must be >= 8")
        need(P["witness_iters"] >= 0, "witness_iters must be >= 0")
    elif k == "spo-branch":
        need(P["q"] >= 1, "q must be >= 1")
        need(P["q"] >= 1 and P["p"] >= 0 and math.gcd(P["p"], P["q"]) == 1, "p and q must be coprime")
        need(all(x > 0 for x in P["kappa0"]), "kappa0 values must be > 0")
        need(all(x in ("elliptic", "hyperbolic") for x in P["kinds"]), "kinds must be elliptic or hyperbolic")
        need(P["tol"] > 0, "tol must be > 0")
        need(P["q"] in (2, 3, 4, 6) and P["nf_order"] >= P["q"], "nf_order must be >= q, with q in (2, 3, 4, 6) for the overlay")
    elif k == "normal-form":
        need(P["q"] in (2, 3, 4, 6), "q must be one of 2, 3, 4, 6")
        need(P["q"] >= 1 and math.gcd(P["p"], P["q"]) == 1, "p and q must be coprime")
        need(P["q"] <= P["order"] <= 8, "order must satisfy q <= order <= 8")
    return v


# --------------------------------------------------------------------------
# ordered worker pool


def pool_map(fn: Callable, items: Sequence, workers: int) -> list:
    """Results in input order regardless of completion order."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------------------
# plot scripts

_PLOT_HEAD = '''"""Generated plotting script: reads only the CSV files next to it."""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def load(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    return {h: [r[i] for r in body] for i, h in enumerate(head)}


def num(col):
    return [float(v) for v in col]

'''


def _plot_script(body: str) -> str:
    return _PLOT_HEAD + body.strip() + "\n"


# --------------------------------------------------------------------------
# experiments


def _traj(cfg: ExperimentConfig, out: Path) -> list[Path]:
    from .core import Grid2D, SCParams, run_trajectory, uniform_state

    P = cfg.params
    g = Grid2D((P["x_lo"], P["x_hi"]), (P["y_lo"], P["y_hi"]), P["nx"], P["ny"])
    s0 = uniform_state(g, P["kappa0"], P["theta0"])
    par = SCParams.uniform(P["gamma"], g.size, P["omega"])
    tr = run_trajectory(s0, par, P["n_steps"], snapshot_at=P["snapshots"])
    files = [write_csv(out / "trace.csv", ["n", "kappa", "dtheta"], zip(tr.n, tr.kappa, tr.dtheta))]
    y0 = s0.y
    rows = []
    for n in sorted(tr.snapshots):
        s = tr.snapshots[n]
        rows.extend((n, k, s.x[k], s.y[k], y0[k]) for k in range(s.N))
    files.append(write_csv(out / "snapshots.csv", ["n", "k", "x", "y", "y0"], rows))
    files.append(_write(out / "plot_snapshots.py", _plot_script('''
d = load("snapshots.csv")
ns = sorted(set(int(v) for v in d["n"]))
fig, axes = plt.subplots(1, len(ns), figsize=(3 * len(ns), 3), squeeze=False)
for ax, n in zip(axes[0], ns):
    idx = [i for i, v in enumerate(d["n"]) if int(v) == n]
    ax.scatter([float(d["x"][i]) for i in idx], [float(d["y"][i]) for i in idx],
               c=[float(d["y0"][i]) for i in idx], s=0.2, cmap="coolwarm")
    ax.set_title(f"n = {n}")
    ax.set_xlabel("x")
axes[0][0].set_ylabel("y")
fig.tight_layout()
fig.savefig(HERE / "snapshots.png", dpi=150)
''')))
    files.append(_write(out / "plot_trace.py", _plot_script('''
d = load("trace.csv")
fig, (a, b) = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
a.semilogy(num(d["n"]), num(d["kappa"]))
a.set_ylabel("kappa")
b.plot(num(d["n"])[1:], num(d["dtheta"])[1:], lw=0.6)
b.set_ylabel("theta increment")
b.set_xlabel("n")
fig.tight_layout()
fig.savefig(HERE / "trace.png", dpi=150)
''')))
    return files


def _escape_cell(args):
    from .core import Grid2D
    from .transport import AltParams, EscapeCriterion, escape_fraction

    kb, dk, P = args
    g = Grid2D((0.0, TWO_PI), (0.0, P["y_m"]), P["nx"], P["ny"])
    c = EscapeCriterion(P["y_m"], P["ell"], P["max_iters"])
    return escape_fraction(AltParams.from_mean_delta(kb, dk), g, c)


def _escape(cfg: ExperimentConfig, out: Path) -> list[Path]:
    P = cfg.params
    cells = [(kb, dk, P) for kb in P["kappa_bar"] for dk in P["delta_kappa"]]
    res = pool_map(_escape_cell, cells, cfg.workers)
    rows = [(kb, dk, r) for (kb, dk, _), r in zip(cells, res)]
    files = [write_csv(out / "escape.csv", ["kappa_bar", "delta_kappa", "percent"], rows)]
    files.append(_write(out / "plot_escape.py", _plot_script('''
d = load("escape.csv")
fig, ax = plt.subplots(figsize=(5, 4))
for kb in sorted(set(d["kappa_bar"]), key=float):
    idx = sorted((i for i, v in enumerate(d["kappa_bar"]) if v == kb), key=lambda i: float(d["delta_kappa"][i]))
    ax.plot([float(d["delta_kappa"][i]) for i in idx], [float(d["percent"][i]) for i in idx], "o-", label=f"kappa_bar={float(kb):g}")
ax.set_xlabel("delta kappa")
ax.set_ylabel("escaping seeds (%)")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "escape.png", dpi=150)
''')))
    return files


def _horn_cell(args):
    from .core import Grid2D
    from .transport import EscapeCriterion, diagonal_onset, horn_boundary

    k1, P = args
    g = Grid2D((0.0, TWO_PI), (0.0, P["y_m"]), P["nx"], P["ny"])
    c = EscapeCriterion(P["y_m"], P["ell"], P["max_iters"])
    if k1 is None:
        return diagonal_onset(c, g, P["tol"], (0.9, min(P["kappa2_max"], 1.1)), max(P["prescan"], 2))
    return horn_boundary([k1], c, g, P["tol"], P["kappa2_max"], P["prescan"])[0]


def _horn(cfg: ExperimentConfig, out: Path) -> list[Path]:
    P = cfg.params
    cells: list = [(k1, P) for k1 in P["kappa1"]]
    if P["diagonal"]:
        cells.append((None, P))
    res = pool_map(_horn_cell, cells, cfg.workers)
    rows = []
    for (k1, _), r in zip(cells, res):
        kk1 = r.kappa2_min if k1 is None else k1
        rows.append((kk1, r.kappa2_min, P["ell"], P["max_iters"], r.lo, r.hi, int(k1 is None), r.censored or "", int(r.monotone)))
    files = [
        write_csv(
            out / "horn.csv",
            ["kappa1", "kappa2_min", "ell", "iters", "bracket_lo", "bracket_hi", "diagonal", "censored", "monotone"],
            rows,
        )
    ]
    files.append(_write(out / "plot_horn.py", _plot_script('''
d = load("horn.csv")
ok = [i for i, c in enumerate(d["censored"]) if not c]
k1 = [float(d["kappa1"][i]) for i in ok]
k2 = [float(d["kappa2_min"][i]) for i in ok]
fig, ax = plt.subplots(figsize=(5, 5))
ax.plot(k1, k2, "o", color="tab:red", label="boundary")
ax.plot(k2, k1, "o", color="tab:red", mfc="none", label="exchange-symmetric copy")
ax.plot([0, 1.2], [0, 1.2], "k:", lw=0.5)
ax.set_xlabel("kappa1")
ax.set_ylabel("kappa2")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "horn.png", dpi=150)
''')))
    return files


def _circles(cfg: ExperimentConfig, out: Path) -> list[Path]:
    from .circles import crossing_witness, solve_circle, turnstile_band

    P = cfg.params
    c1 = solve_circle(P["kappa1"], P["omega"], P["J"], P["tol"])
    c2 = solve_circle(P["kappa2"], P["omega"], P["J"], P["tol"], seed=c1)
    files = []
    M = 2048
    th = TWO_PI * np.arange(M) / M
    for name, c in (("circle1", c1), ("circle2", c2)):
        x, y = c.embed(th)
        files.append(write_csv(out / f"{name}.csv", ["theta", "x", "y"], zip(th, x, y)))
        files.append(write_csv(out / f"{name}_coeffs.csv", ["j", "re", "im"], ((j, v.real, v.imag) for j, v in enumerate(c.coeffs))))
    band = turnstile_band(P["kappa1"], P["kappa2"], P["omega"], P["nx"], circles=(c1, c2))
    files.append(write_csv(out / "band.csv", ["x", "y_lower", "y_upper"], zip(band.x, band.y_lower, band.y_upper)))
    w = crossing_witness(P["kappa1"], P["kappa2"], P["omega"], P["witness_iters"], band=band)
    wrows = [] if w is None else [(n, a, b) for n, (a, b) in enumerate(zip(w.x, w.y))]
    files.append(write_csv(out / "witness.csv", ["n", "x", "y"], wrows))
    files.append(
        write_csv(
            out / "summary.csv",
            ["kappa1", "kappa2", "omega", "defect1", "defect2", "band_area", "signed_area", "witness_steps"],
            [(P["kappa1"], P["kappa2"], P["omega"], c1.defect, c2.defect, band.area, band.signed_area, -1 if w is None else w.steps)],
        )
    )
    files.append(_write(out / "plot_band.py", _plot_script('''
b = load("band.csv")
w = load("witness.csv")
x = num(b["x"])
fig, ax = plt.subplots(figsize=(6, 4))
ax.fill_between(x, num(b["y_lower"]), num(b["y_upper"]), color="0.8", label="band")
for name, col in (("circle1.csv", "tab:blue"), ("circle2.csv", "tab:red")):
    c = load(name)
    xs = [v % 6.283185307179586 for v in num(c["x"])]
    ax.plot(xs, num(c["y"]), ",", color=col)
if w["x"]:
    ax.plot(num(w["x"]), num(w["y"]), "k.-", ms=3, lw=0.5, label="witness")
ax.set_xlabel("x")
ax.set_ylabel("y")
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "band.png", dpi=150)
''')))
    return files


def _spo_cell(args):
    from .orbits import NewtonDivergence, OrbitNotFound, spo_at

    k0, kind, P = args
    try:
        s = spo_at(k0, P["alpha"] * k0, P["p"], P["q"], kind, P["theta0"], P["tol"])
    except (NewtonDivergence, OrbitNotFound) as exc:
        return None, str(exc)
    return (s.gamma, s.kappa0, s.omega_solved, s.residual, s.closure_residual(), s.delta_kappa(), s.line, s.to_dict()), None


def _spo(cfg: ExperimentConfig, out: Path) -> list[Path]:
    from .nform import omega_value, solve_homological

    P = cfg.params
    cells = [(k0, kind, P) for kind in P["kinds"] for k0 in P["kappa0"]]
    res = pool_map(_spo_cell, cells, cfg.workers)
    nf = solve_homological(P["p"], P["q"], P["nf_order"]) if P["q"] in (2, 3, 4, 6) else None
    rows, dumps, fails = [], [], []
    for (k0, kind, _), (r, err) in zip(cells, res):
        if r is None:
            fails.append((kind, k0, err))
            continue
        g, k, om, resid, clo, dk, line, d = r
        om_nf = omega_value(nf, kind, k, P["alpha"]) if nf else float("nan")
        rows.append((g, k, om, resid, kind, P["p"], P["q"], om_nf, om - om_nf, dk, clo, line))
        dumps.append({"kind": kind, **d})
    files = [
        write_csv(
            out / "branch.csv",
            ["gamma", "kappa0", "omega_solved", "residual", "type", "p", "q", "omega_nf", "omega_diff", "delta_kappa", "closure", "line"],
            rows,
        )
    ]
    files.append(_write(out / "spo_states.json", json.dumps(dumps, indent=1, default=_json17) + "\n"))
    if fails:
        files.append(write_csv(out / "failures.csv", ["type", "kappa0", "error"], fails))
    files.append(_write(out / "plot_branch.py", _plot_script('''
d = load("branch.csv")
fig, axes = plt.subplots(1, 2, figsize=(9, 4))
for kind, ax in zip(("elliptic", "hyperbolic"), axes):
    idx = [i for i, t in enumerate(d["type"]) if t == kind]
    if not idx:
        continue
    k = [float(d["kappa0"][i]) for i in idx]
    ax.plot(k, [float(d["omega_solved"][i]) for i in idx], "o", color="tab:red", label="continuation")
    ax.plot(k, [float(d["omega_nf"][i]) for i in idx], "-", color="tab:green", label="normal form")
    ax.set_title(kind)
    ax.set_xlabel("kappa0")
    ax.set_ylabel("Omega")
    ax.legend()
fig.tight_layout()
fig.savefig(HERE / "branch.png", dpi=150)
''')))
    return files


def _json17(o):
    if isinstance(o, (np.floating, float)):
        return float(format(float(o), ".17g"))
    raise TypeError(type(o))


def _nform(cfg: ExperimentConfig, out: Path) -> list[Path]:
    from .nform import nf_json, nf_report, solve_homological

    P = cfg.params
    nf = solve_homological(P["p"], P["q"], P["order"])
    return [_write(out / "normal_form.txt", nf_report(nf) + "\n"), _write(out / "normal_form.json", nf_json(nf) + "\n")]


_RUNNERS = {
    "trajectory": _traj,
    "escape-scan": _escape,
    "horn": _horn,
    "circles": _circles,
    "spo-branch": _spo,
    "normal-form": _nform,
}


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


@dataclass
class RunManifest:
    config: dict
    code_version: str
    timestamp: str
    files: dict[str, str]
    status: str = "ok"
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config,
                "code_version": self.code_version,
                "timestamp": self.timestamp,
                "status": self.status,
                "error": self.error,
                "files": self.files,
            },
            indent=1,
            sort_keys=True,
        )


MANIFEST = "manifest.json"
FAILURE_MARKER = "FAILED"


def run(cfg: ExperimentConfig) -> RunManifest:
    """Execute one experiment; writes its outputs and ``manifest.json`` into ``cfg.out_dir``.

    On failure the partial outputs are kept, a ``FAILED`` marker holds the
    traceback, and :class:`ExperimentError` is raised.
    """
    bad = validate(cfg)
    if bad:
        raise ConfigError("; ".join(bad))
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / FAILURE_MARKER).unlink(missing_ok=True)
    _write(out / "config.ini", cfg.to_ini())
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    err: BaseException | None = None
    try:
        _RUNNERS[cfg.kind](cfg, out)
    except Exception as exc:  # keep partial outputs, mark the failure
        err = exc
        _write(out / FAILURE_MARKER, "".join(traceback.format_exception(exc)))
    files = {
        p.relative_to(out).as_posix(): sha256(p)
        for p in sorted(out.rglob("*"))
        if p.is_file() and p.name != MANIFEST and not p.name.endswith(".png")
    }
    man = RunManifest(cfg.echo(), __version__, stamp, files, "failed" if err else "ok", None if err is None else f"{type(err).__name__}: {err}")
    _write(out / MANIFEST, man.to_json() + "\n")
    if err is not None:
        raise ExperimentError(cfg.kind, err) from err
    return man


def verify_manifest(out_dir: str | Path) -> list[str]:
    """Files missing from, or disagreeing with, the manifest (empty when complete)."""
    out = Path(out_dir)
    man = json.loads((out / MANIFEST).read_text())
    listed = man["files"]
    problems = []
    for p in sorted(out.rglob("*")):
        if not p.is_file() or p.name == MANIFEST or p.name.endswith(".png"):
            continue
        rel = p.relative_to(out).as_posix()
        if rel not in listed:
            problems.append(f"unlisted: {rel}")
        elif listed[rel] != sha256(p):
            problems.append(f"checksum mismatch: {rel}")
    for rel in listed:
        if not (out / rel).is_file():
            problems.append(f"missing: {rel}")
    return problems
