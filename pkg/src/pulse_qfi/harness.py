"""Command-line driver: sweeps, figure tables and regression checks.

Every command writes CSV tables (``#`` metadata lines, 12 significant digits)
with JSON sidecars into ``--out``.  Options may also come from an INI file
given with ``--config``; keys in the ``[common]`` section and in the section
named after the command are read, and explicit command-line flags win.

Failures print a JSON error record on stderr (and write ``error.json``):
exit status 2 for invalid input, 1 for numerical or regime failures.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, biphoton, casestudy, jcshort, kmsim, onephoton, pulses
from .errors import ConfigError, DomainError, PulseQFIError
from .pulses import CouplingConfig, PulseShape, ShapeKind
from .tables import regression_check, write_table

__all__ = ["RunConfig", "parse_grid", "run", "main", "FIGURES", "COMMANDS"]

COMMANDS = ("single-photon", "jc", "km-validate", "biphoton", "sodium", "figure", "regress")
FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig7", "fig8", "fig9", "fig10")
MODULE_OF = {
    "single-photon": "onephoton", "jc": "jcshort", "km-validate": "kmsim", "biphoton": "biphoton",
    "sodium": "casestudy", "figure": "harness", "regress": "tables",
}

# option name -> (default, kind); kinds: str, float, int, grid
OPTIONS = {
    "single-photon": {
        "shape": ("rectangular", "str"), "shape-file": (None, "str"), "order": (0, "int"),
        "gammaT": ("log:0.05:10:20", "grid"), "gamma-perp-ratio": (0.0, "float"),
        "time": (math.inf, "float"), "convention": ("T", "str"),
    },
    "jc": {
        "state": ("fock:1", "str"), "shape": ("gaussian", "str"), "gammaT": (1e-3, "float"),
        "times": ("lin:-4:10:57", "grid"),
    },
    "km-validate": {
        "state": ("fock:5", "str"), "shape": ("gaussian", "str"), "gammaT": ("0.02,0.01,0.005", "grid"),
        "gamma-perp-ratio": (0.0, "float"), "dt": (kmsim.KMConfig.dt, "float"), "n-v": (kmsim.KMConfig.n_v, "int"),
        "time": (10.0, "float"),
    },
    "biphoton": {
        "sigma-p": (1 / 0.15, "float"), "tqent": ("2.09", "grid"), "time": (None, "float"),
        "gamma": (None, "float"), "entropy-base": (casestudy.ENTROPY_BASE, "float"),
    },
    "sodium": {"duration": (casestudy.PUMP_DURATION, "float")},
    "figure": {"name": (None, "str")},
    "regress": {"baseline": (None, "str"), "current": (None, "str"), "rtol": (1e-6, "float")},
}


@dataclass
class RunConfig:
    command: str
    out: Path
    params: dict = field(default_factory=dict)


def parse_grid(text, name: str) -> np.ndarray:
    """``"a,b,c"``, ``"lin:start:stop:n"`` or ``"log:start:stop:n"`` (log-spaced)."""
    if isinstance(text, (int, float)):
        return np.array([float(text)])
    s = str(text).strip()
    try:
        if s.startswith(("lin:", "log:")):
            kind, a, b, n = s.split(":")
            n = int(n)
            if n < 1:
                raise ValueError("need at least one point")
            grid = np.linspace(float(a), float(b), n) if kind == "lin" else np.geomspace(float(a), float(b), n)
        else:
            grid = np.array([float(x) for x in s.split(",") if x.strip()])
    except ValueError as exc:
        raise ConfigError(name, f"bad grid {s!r}: {exc}") from None
    if grid.size == 0:
        raise ConfigError(name, "grid is empty")
    return grid


def _convert(name: str, value, kind: str):
    if value is None:
        return None
    if kind == "grid":
        return parse_grid(value, name)
    try:
        if kind == "float":
            return float(value)
        if kind == "int":
            return int(value)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected {kind}, got {value!r}") from None
    return str(value)


def _config_file(path, command: str) -> dict:
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError("config", str(exc)) from None
    found = {}
    for section in ("common", command):
        if cp.has_section(section):
            for k, v in cp.items(section):
                found[k.replace("_", "-")] = v
    return found


def build_config(command: str, cli: dict, config_path=None, out=None) -> RunConfig:
    """Merge defaults, the config file and explicit flags (in increasing priority)."""
    if command not in OPTIONS:
        raise ConfigError("command", f"unknown command {command!r}")
    spec = OPTIONS[command]
    file_vals = _config_file(config_path, command) if config_path else {}
    out = out or file_vals.pop("out", None) or "out"
    lower = {k.lower(): k for k in spec}
    params = {}
    for key in file_vals:
        if key.lower() not in lower and key != "out":
            raise ConfigError(key, f"unknown option for {command}")
    for key, (default, kind) in spec.items():
        value = cli.get(key)
        if value is None:
            value = file_vals.get(key.lower(), default)
        params[key] = _convert(key, value, kind)
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("out", f"output directory not writable: {exc}") from None
    return RunConfig(command, out, params)


# ---------------------------------------------------------------------------
# commands


def _shape(params) -> PulseShape:
    if params.get("shape-file"):
        try:
            return pulses.load_sampled_csv(params["shape-file"])
        except (OSError, DomainError) as exc:
            raise ConfigError("shape-file", str(exc)) from None
    try:
        return pulses.parse_shape(params["shape"], order=params.get("order", 0) or 0)
    except DomainError as exc:
        raise ConfigError("shape", str(exc)) from None


def _state(params) -> jcshort.FockCoefficients:
    try:
        return jcshort.parse_state(params["state"])
    except DomainError as exc:
        raise ConfigError("state", str(exc)) from None


def _single_photon(cfg: RunConfig):
    p = cfg.params
    shape = _shape(p)
    width = pulses.temporal_width(shape.unit())
    if p["convention"] not in ("T", "T_sigma"):
        raise ConfigError("convention", "must be T or T_sigma")
    x = p["gammaT"]
    gT = x / width if p["convention"] == "T_sigma" else x
    cols = {k: [] for k in ("gammaT", "gammaT_sigma", "qfi", "classical", "quantum", "c_orig", "c_orig_ratio",
                            "p_gamma", "p_e", "max_p_e")}
    for g in gT:
        sol = onephoton.solve(shape, CouplingConfig(float(g), p["gamma-perp-ratio"]))
        d = onephoton.qfi_decomposition(sol, p["time"])
        cols["gammaT"].append(g)
        cols["gammaT_sigma"].append(g * width)
        cols["qfi"].append(d.total)
        cols["classical"].append(d.classical)
        cols["quantum"].append(d.quantum)
        cols["c_orig"].append(d.c_orig)
        cols["c_orig_ratio"].append(d.c_orig / d.total if d.total > 0 else math.nan)
        cols["p_gamma"].append(d.p_gamma)
        cols["p_e"].append(d.p_e)
        cols["max_p_e"].append(sol.max_p_e()[1])
    name = shape.kind.value
    return [(f"single_photon_{name}", cols, {"shape": name})]


def _jc_columns(state, gamma_T: float, F) -> dict:
    cols = {k: [] for k in ("F", "p_e", "n_xi", "qfi", "bound")}
    n = np.arange(state.cutoff)
    for f in F:
        e, g, _, _ = jcshort.jc_evolve(state, gamma_T, float(f))
        cols["F"].append(float(f))
        cols["p_e"].append(float(np.sum(np.abs(e) ** 2)))
        cols["n_xi"].append(float(np.sum(n * (np.abs(e) ** 2 + np.abs(g) ** 2))))
        cols["qfi"].append(gamma_T ** 2 * jcshort.jc_qfi(state, gamma_T, float(f)))
        cols["bound"].append(gamma_T ** 2 * jcshort.atom_pure_qfi_bound(state, gamma_T, float(f)))
    return cols


def _jc(cfg: RunConfig):
    p = cfg.params
    shape, state = _shape(p), _state(p)
    t = p["times"]
    F = pulses.scale_invariant_F(shape.unit(), t)
    cols = {"t": t, **_jc_columns(state, p["gammaT"], F)}
    return [(f"jc_{state.kind}", cols, {"state": p["state"], "shape": shape.kind.value, "gammaT": p["gammaT"]})]


def _km_series(state, shape, gammas, ratio, dt, n_v, t_end) -> dict:
    cols = {k: [] for k in ("gammaT", "trace_distance", "max_n_v", "p_e_final", "trace_drift")}
    kcfg = kmsim.KMConfig(dt=dt, n_v=n_v)
    unit = shape.unit()
    F = float(pulses.scale_invariant_F(unit, t_end))
    for g in gammas:
        res = kmsim.km_evolve(state, unit, float(g), ratio, t_out=np.linspace(_km_start(unit), t_end, 91), cfg=kcfg)
        cols["gammaT"].append(float(g))
        cols["trace_distance"].append(kmsim.trace_distance(res.pulse_states[-1], kmsim.jc_reduced_state(state, float(g), F)))
        cols["max_n_v"].append(float(np.max(res.n_v)))
        cols["p_e_final"].append(float(res.p_e[-1]))
        cols["trace_drift"].append(res.info["trace_drift"])
    return cols


def _km_start(unit: PulseShape) -> float:
    return kmsim._default_window(unit)[0]


def _monotone(values) -> bool:
    return bool(np.all(np.diff(values) < 0))


def _km_validate(cfg: RunConfig):
    p = cfg.params
    shape, state = _shape(p), _state(p)
    cols = _km_series(state, shape, p["gammaT"], p["gamma-perp-ratio"], p["dt"], p["n-v"], p["time"])
    meta = {"state": p["state"], "shape": shape.kind.value, "time": p["time"],
            "strictly_decreasing": _monotone(cols["trace_distance"])}
    return [(f"km_validate_{state.kind}", cols, meta)]


def _biphoton(cfg: RunConfig):
    p = cfg.params
    gamma = p["gamma"] if p["gamma"] is not None else casestudy.sodium_defaults().gamma * casestudy.PS
    t = p["time"] if p["time"] is not None else 10.0 / p["sigma-p"]
    cols = {k: [] for k in ("t_qent", "w", "k_s", "k_i", "n_modes", "entropy", "qfi_short", "qfi_schmidt0")}
    for tq in p["tqent"]:
        try:
            spec = biphoton.schmidt_decompose(biphoton.build_jsa(p["sigma-p"], float(tq)))
        except DomainError as exc:
            raise ConfigError("tqent", str(exc)) from None
        cols["t_qent"].append(float(tq))
        cols["w"].append(spec.w)
        cols["k_s"].append(spec.k_s)
        cols["k_i"].append(spec.k_i)
        cols["n_modes"].append(spec.n_modes)
        cols["entropy"].append(biphoton.entanglement_entropy(spec, p["entropy-base"]))
        cols["qfi_short"].append(gamma ** 2 * biphoton.biphoton_qfi_short(spec, gamma, t))
        cols["qfi_schmidt0"].append(gamma ** 2 * float(casestudy._schmidt0_qfi(spec, gamma, [t])[0]))
    meta = {"sigma_p": p["sigma-p"], "gamma": gamma, "time": t, "entropy_base": p["entropy-base"],
            "note": "times in ps, frequencies in rad/ps, QFI columns are Gamma^2 Q"}
    return [("biphoton", cols, meta)]


def _sodium(cfg: RunConfig):
    rep = casestudy.sodium_report(duration=cfg.params["duration"])
    cols = {"quantity": list(rep), "value": [rep[k] for k in rep], "unit": [casestudy.SODIUM_UNITS[k] for k in rep]}
    return [("sodium", cols, {"duration": cfg.params["duration"]})]


RECT = PulseShape(ShapeKind.RECTANGULAR, 1.0)


def _fig2():
    shapes = [ShapeKind.GAUSSIAN, ShapeKind.RECTANGULAR, ShapeKind.DECAYING_EXP, ShapeKind.RISING_EXP,
              ShapeKind.SYMMETRIC_EXP]
    x = np.geomspace(0.01, 30, 40)
    cols = {k: [] for k in ("shape", "gammaT_sigma", "gammaT", "qfi", "max_p_e", "c_orig_ratio")}
    for kind in shapes:
        shape = PulseShape(kind, 1.0)
        w = pulses.temporal_width(shape)
        sw = onephoton.asymptotic_sweep(shape, x / w)
        cols["shape"] += [kind.value] * x.size
        cols["gammaT_sigma"] += list(x)
        cols["gammaT"] += list(x / w)
        cols["qfi"] += list(sw["total"])
        cols["max_p_e"] += list(sw["max_p_e"])
        cols["c_orig_ratio"] += list(sw["c_orig"] / sw["total"])
    return [("fig2", cols, {"gamma_perp_ratio": 0.0, "x_axis": "Gamma T_sigma"})]


def _fig3():
    cols = {k: [] for k in ("gammaT", "gamma_t", "classical", "quantum", "total", "c_orig", "asymptotic")}
    for gT, s_max in ((2.0, 10.0), (0.05, 10.0)):
        sol = onephoton.solve(RECT, CouplingConfig(gT))
        asym = onephoton.qfi_decomposition(sol).total
        for s in np.linspace(-0.5, s_max, 106):
            d = onephoton.qfi_decomposition(sol, s / gT)
            cols["gammaT"].append(gT)
            cols["gamma_t"].append(s)
            cols["classical"].append(d.classical)
            cols["quantum"].append(d.quantum)
            cols["total"].append(d.total)
            cols["c_orig"].append(d.c_orig)
            cols["asymptotic"].append(asym)
    return [("fig3", cols, {"shape": "rectangular", "gamma_perp_ratio": 0.0})]


def _rect_sweep(ratios, grid, name):
    cols = {k: [] for k in ("gamma_perp_ratio", "gammaT", "classical", "quantum", "total", "c_orig")}
    for r in ratios:
        for g in grid:
            d = onephoton.qfi_decomposition(onephoton.solve(RECT, CouplingConfig(float(g), r)))
            cols["gamma_perp_ratio"].append(r)
            cols["gammaT"].append(float(g))
            cols["classical"].append(d.classical)
            cols["quantum"].append(d.quantum)
            cols["total"].append(d.total)
            cols["c_orig"].append(d.c_orig)
    return [(name, cols, {"shape": "rectangular"})]


def _fig9():
    state = jcshort.fock(80)
    shape = PulseShape(ShapeKind.GAUSSIAN, 1.0)
    gT = 0.02
    t = np.linspace(-8, 10, 91)
    res = kmsim.km_evolve(state, shape, gT, 0.0, t_out=t)
    jc = _jc_columns(state, gT, pulses.scale_invariant_F(shape, t))
    cols = {"t": t, "p_e_km": res.p_e, "n_xi_km": res.n_xi, "n_v_km": res.n_v,
            "p_e_jc": jc["p_e"], "n_xi_jc": jc["n_xi"]}
    return [("fig9", cols, {"state": "fock:80", "gammaT": gT, "dims": list(res.dims)})]


def _fig10():
    shape = PulseShape(ShapeKind.GAUSSIAN, 1.0)
    out = []
    for label, state in (("fock5", jcshort.fock(5)), ("squeezed0.75", jcshort.squeezed_vacuum(0.75))):
        cols = _km_series(state, shape, [0.02, 0.01, 0.005], 0.0, kmsim.KMConfig.dt, kmsim.KMConfig.n_v, 10.0)
        out.append((f"fig10_{label}", cols, {"state": label, "time": 10.0,
                                            "strictly_decreasing": _monotone(cols["trace_distance"])}))
    return out


def _figure(cfg: RunConfig):
    name = cfg.params["name"]
    if name not in FIGURES:
        raise ConfigError("name", f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    if name == "fig2":
        return _fig2()
    if name == "fig3":
        return _fig3()
    if name == "fig4":
        return _rect_sweep([0.5, 10.0], np.geomspace(0.01, 20, 50), "fig4")
    if name == "fig5":
        return _rect_sweep([0.0, 10.0], np.geomspace(1e-3, 20, 50), "fig5")
    if name == "fig7":
        atom = casestudy.sodium_defaults()
        meta = {"duration": casestudy.PUMP_DURATION, "t_qent": casestudy.T_QENT_FIG7, "gamma": atom.gamma}
        return [("fig7", casestudy.figure7(atom=atom), meta, casestudy.FIGURE7_UNITS)]
    if name == "fig8":
        meta = {"duration": casestudy.PUMP_DURATION, "time": 10 * casestudy.PUMP_DURATION,
                "entropy_base": casestudy.ENTROPY_BASE}
        return [("fig8", casestudy.figure8(), meta, casestudy.FIGURE8_UNITS)]
    if name == "fig9":
        return _fig9()
    return _fig10()


def _regress(cfg: RunConfig):
    p = cfg.params
    for key in ("baseline", "current"):
        if not p[key]:
            raise ConfigError(key, "directory required")
    if not Path(p["current"]).is_dir():
        raise ConfigError("current", f"not a directory: {p['current']}")
    report = regression_check(p["baseline"], p["current"], p["rtol"])
    (cfg.out / "regression.json").write_text(json.dumps(report, indent=2, sort_keys=True, default=str) + "\n")
    return report


DISPATCH = {
    "single-photon": _single_photon, "jc": _jc, "km-validate": _km_validate, "biphoton": _biphoton,
    "sodium": _sodium, "figure": _figure,
}


def _params_echo(cfg: RunConfig) -> dict:
    return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in cfg.params.items()}


def run(cfg: RunConfig) -> list[Path]:
    """Execute one command and return the written table paths."""
    if cfg.command == "regress":
        report = _regress(cfg)
        return [cfg.out / "regression.json"] if report else []
    written = []
    for item in DISPATCH[cfg.command](cfg):
        name, cols, meta = item[:3]
        units = item[3] if len(item) > 3 else None
        meta = {"command": cfg.command, "version": __version__, **meta, "parameters": _params_echo(cfg)}
        written.append(write_table(cfg.out / f"{name}.csv", cols, meta, units))
    return written


def _error_record(command, exc, params, out) -> dict:
    rec = {
        "status": "error",
        "command": command,
        "module": MODULE_OF.get(command, "harness"),
        "error": type(exc).__name__,
        "message": getattr(exc, "message", str(exc)),
        "parameters": params,
    }
    if isinstance(exc, ConfigError):
        rec["field"] = exc.field
    if out is not None:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(json.dumps(rec, indent=2, sort_keys=True, default=str) + "\n")
        except OSError:
            pass
    return rec


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pulse-qfi", description="Fisher-information bounds for pulse-atom coupling.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, spec in OPTIONS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="INI file; [common] and [%s] sections are read" % cmd)
        sp.add_argument("--out", help="output directory (default ./out)")
        for key in spec:
            if cmd == "figure" and key == "name":
                sp.add_argument("name", nargs="?", help=", ".join(FIGURES))
                continue
            sp.add_argument(f"--{key}", dest=key.replace("-", "_"), default=None)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    cmd = args.command
    cli = {k: getattr(args, k.replace("-", "_"), None) for k in OPTIONS[cmd]}
    cfg = None
    try:
        cfg = build_config(cmd, cli, args.config, args.out)
        if cmd == "figure" and cfg.params["name"] is None:
            raise ConfigError("name", "figure name required")
        paths = run(cfg)
    except (ConfigError, DomainError) as exc:
        rec = _error_record(cmd, exc, cli, cfg.out if cfg else args.out)
        print(json.dumps(rec, sort_keys=True, default=str), file=sys.stderr)
        return 2
    except PulseQFIError as exc:
        rec = _error_record(cmd, exc, _params_echo(cfg) if cfg else cli, cfg.out if cfg else args.out)
        print(json.dumps(rec, sort_keys=True, default=str), file=sys.stderr)
        return 1
    if cmd == "regress":
        report = json.loads((cfg.out / "regression.json").read_text())
        for e in report["files"]:
            print(f"{e['file']}: {e['status']}" + (f" (max rel dev {e['max_rel_dev']:.3g})" if "max_rel_dev" in e else ""))
        return 0 if report["passed"] else 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
