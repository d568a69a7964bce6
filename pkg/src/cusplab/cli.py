"""Command line driver for the laboratory.

Subcommands
-----------
effective   integrate the reduced corner system, write the trajectory CSV
euler       evolve a corner patch under contour dynamics, write snapshots
compare     run both and write slice diagnostics against the model
decomp      leading-order velocity decomposition residual on a corner patch
bounds      iterated-bound parameter choices over a list of radii
collapse    half-angle and bisector series at fixed radii vs the model

Configuration comes from an optional JSON file (``--config``) merged over
per-command defaults; command line flags override both.  Every run writes
``manifest.json`` next to its CSV outputs with the resolved configuration,
a hash of it, and wall time.  Identical configurations produce
byte-identical CSVs (all floats at 17 significant digits); the manifest is
excluded from that guarantee because of the timing field.

Exit codes: 0 success, 2 configuration error, 3 numerical invariant
violation (the violated invariant is named on stderr).

Radius tokens: plain floats ("1e-3", "0.05") or "e-N" for exp(-N).  The
second form survives far below the float underflow threshold and is kept
verbatim in the bounds CSV.

Thread count for the contour-dynamics kernel follows CUSPLAB_THREADS.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import re
import sys
import time
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import __version__
from .angular import AngularDensity, transport_series
from .bounds import (BoundParams, choose_parameters, decay_F, default_grid,
                     dominance_margin, final_G_bound, kappa_power,
                     kappa_table, kappa_zero)
from .diagnostics import (angular_deviation, area_fraction,
                          decomposition_residual, deviation_fraction,
                          half_angle)
from .effective import (ModelParams, estimate_delta, identity_residual,
                        integrate, limit_A)
from .exceptions import CuspLabError, InvariantViolationError
from .patch import CDConfig, evolve, make_corner_patch

COMMANDS = ("effective", "euler", "compare", "decomp", "bounds", "collapse")

_PATCH_KEYS = {
    "n_nodes": 256, "dt": 1e-3, "quad_order": 8, "snapshot_every": 10,
    "symmetrize": True, "h_min": 5e-5, "h_max": 0.05, "r_outer": 0.9,
    "remesh_every": 1, "check_every": 25,
}

_DEFAULTS = {
    "effective": {
        "b0": math.pi / 8, "tau_max": 1e4, "forcing": 1.0,
        "rel_tol": 1e-11, "abs_tol": 1e-14,
        "transport": True, "transport_tau_end": 5.0, "transport_samples": 201,
    },
    "euler": {"b0": math.pi / 8, "t_end": 0.05, **_PATCH_KEYS},
    "compare": {
        "b0": math.pi / 8, "forcing": 0.5, "radii": [1e-2, 1e-3],
        "t_end": 0.05, "tau_max": 0.0, **_PATCH_KEYS,
    },
    "decomp": {
        "b0": math.pi / 8, "t_end": 0.0, "n_thetas": 12,
        "radii": [float(v) for v in np.geomspace(1e-3, 1e-1, 7)],
        **{**_PATCH_KEYS, "n_nodes": 260, "h_min": 1e-6},
    },
    "bounds": {
        "kappa": "zero", "r_list": ["e-10", "e-100"],
        "C": 1.0, "c0": 1.0 / math.sqrt(2.0 * math.pi), "cstar": 1.0,
        "delta": 0.5, "check_dominance": True, "dominance_m": 8,
    },
    "collapse": {
        "b0": math.pi / 8, "forcing": 0.5, "radii": [1e-2, 1e-3],
        "t_end": 0.5, "tau_max": 0.0, **{**_PATCH_KEYS, "dt": 2e-3},
    },
}


class RunConfig:
    """Resolved run request: command, output directory, settings dict."""

    def __init__(self, command: str, out_dir, settings: dict):
        if command not in COMMANDS:
            raise ValueError(f"unknown command: {command}")
        self.command = command
        self.out_dir = Path(out_dir)
        self.settings = settings

    def sha256(self) -> str:
        blob = json.dumps({"command": self.command, "settings": self.settings},
                          sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Configuration assembly.

def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if key not in base:
            raise ValueError(f"unknown configuration key: {path}{key}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, path=f"{path}{key}.")
        else:
            out[key] = val
    return out


def _coerce_types(settings: dict, defaults: dict) -> dict:
    """Cast merged values to the default's type where that is unambiguous."""
    out = {}
    for key, dflt in defaults.items():
        val = settings[key]
        if isinstance(dflt, bool):
            out[key] = bool(val)
        elif isinstance(dflt, int) and not isinstance(val, bool):
            out[key] = int(val)
        elif isinstance(dflt, float):
            out[key] = float(val)
        elif isinstance(dflt, list) and not isinstance(val, (list, tuple)):
            raise ValueError(f"{key} must be a list")
        else:
            out[key] = val
    return out


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"bad float list {text!r}: {exc}") from None


def _csv_tokens(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def parse_radius(token) -> tuple[str, float]:
    """(canonical token, L = |ln r|) for a float or "e-N" radius token."""
    s = str(token).strip()
    m = re.fullmatch(r"e-(\d+(?:\.\d+)?)", s)
    if m:
        L = float(m.group(1))
        if L <= 0.0:
            raise ValueError(f"radius token {s!r} is not inside (0, 1)")
        return s, L
    try:
        r = float(s)
    except ValueError:
        raise ValueError(f"bad radius token {s!r}") from None
    if not (0.0 < r < 1.0):
        raise ValueError(f"radius {r} outside (0, 1)")
    return f"{r:.17g}", -math.log(r)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="cusplab",
        description="numerical laboratory for corner sharpening in vortex patches")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None,
                       help="JSON configuration file")
        p.add_argument("--out", type=str, default=None,
                       help="output directory (default runs/<command>)")

    def patch_flags(p):
        p.add_argument("--n-nodes", dest="n_nodes", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--quad-order", dest="quad_order", type=int)
        p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
        p.add_argument("--h-min", dest="h_min", type=float)
        p.add_argument("--h-max", dest="h_max", type=float)
        p.add_argument("--r-outer", dest="r_outer", type=float)
        p.add_argument("--remesh-every", dest="remesh_every", type=int)
        p.add_argument("--check-every", dest="check_every", type=int)
        p.add_argument("--no-symmetrize", dest="symmetrize",
                       action="store_const", const=False)

    p = sub.add_parser("effective", help="integrate the reduced corner system")
    common(p)
    p.add_argument("--b0", type=float)
    p.add_argument("--tau-max", dest="tau_max", type=float)
    p.add_argument("--forcing", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--abs-tol", dest="abs_tol", type=float)
    p.add_argument("--no-transport", dest="transport",
                   action="store_const", const=False)
    p.add_argument("--transport-tau-end", dest="transport_tau_end", type=float)

    p = sub.add_parser("euler", help="contour dynamics for a corner patch")
    common(p)
    p.add_argument("--b0", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    patch_flags(p)

    p = sub.add_parser("compare", help="slice diagnostics against the model")
    common(p)
    p.add_argument("--b0", type=float)
    p.add_argument("--forcing", type=float)
    p.add_argument("--radii", type=_csv_floats)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--tau-max", dest="tau_max", type=float)
    patch_flags(p)

    p = sub.add_parser("decomp", help="velocity decomposition residual")
    common(p)
    p.add_argument("--b0", type=float)
    p.add_argument("--radii", type=_csv_floats)
    p.add_argument("--n-thetas", dest="n_thetas", type=int)
    p.add_argument("--t-end", dest="t_end", type=float)
    patch_flags(p)

    p = sub.add_parser("bounds", help="iterated-bound parameter choices")
    common(p)
    p.add_argument("--kappa", type=str,
                   help='"zero", "power:P" or "table:FILE"')
    p.add_argument("--r-list", dest="r_list", type=_csv_tokens,
                   help='comma list of radii; "e-N" means exp(-N)')
    p.add_argument("--C", dest="C", type=float)
    p.add_argument("--c0", type=float)
    p.add_argument("--cstar", type=float)
    p.add_argument("--delta", type=float)

    p = sub.add_parser("collapse", help="half-angle series at fixed radii")
    common(p)
    p.add_argument("--b0", type=float)
    p.add_argument("--forcing", type=float)
    p.add_argument("--radii", type=_csv_floats)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--tau-max", dest="tau_max", type=float)
    patch_flags(p)

    return top


def build_config(argv=None) -> RunConfig:
    args = build_parser().parse_args(argv)
    command = args.command
    defaults = _DEFAULTS[command]

    file_settings = {}
    out_dir = None
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ValueError(f"configuration file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"configuration file is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ValueError("configuration root must be an object")
        if "command" in raw or "settings" in raw:
            cmd = raw.get("command", command)
            if cmd != command:
                raise ValueError(
                    f"configuration is for {cmd!r}, invoked as {command!r}")
            out_dir = raw.get("out")
            file_settings = raw.get("settings", {})
        else:
            file_settings = raw
        if not isinstance(file_settings, dict):
            raise ValueError("settings must be an object")

    settings = _merge(defaults, file_settings)
    flag_keys = set(defaults) & set(vars(args))
    overrides = {k: getattr(args, k) for k in flag_keys
                 if getattr(args, k) is not None}
    settings = _merge(settings, overrides)
    settings = _coerce_types(settings, defaults)

    if args.out is not None:
        out_dir = args.out
    if out_dir is None:
        out_dir = Path("runs") / command
    return RunConfig(command, out_dir, settings)


# ---------------------------------------------------------------------------
# Output helpers.

def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _model_params(s: dict, tau_max: float | None = None) -> ModelParams:
    return ModelParams(B0=s["b0"],
                       tau_max=s["tau_max"] if tau_max is None else tau_max,
                       forcing=s["forcing"],
                       rel_tol=s.get("rel_tol", 1e-11),
                       abs_tol=s.get("abs_tol", 1e-14))


def _patch_config(s: dict) -> CDConfig:
    return CDConfig(n_nodes=s["n_nodes"], dt=s["dt"],
                    quad_order=s["quad_order"], h_min=s["h_min"],
                    h_max=s["h_max"], symmetrize=s["symmetrize"],
                    remesh_every=s["remesh_every"],
                    check_every=s["check_every"])


def _auto_tau_max(s: dict, depth: float = 20.0) -> float:
    """Cover tau = t (|ln r| + v) for every radius and the weighting depth."""
    if s["tau_max"] > 0.0:
        return s["tau_max"]
    lmax = max(-math.log(r) for r in s["radii"])
    return max(10.0, 1.05 * s["t_end"] * (lmax + depth))


def _evolve_patch(s: dict):
    cfg = _patch_config(s)
    state = make_corner_patch(s["b0"], cfg, r_outer=s["r_outer"])
    final, snaps = evolve(state, cfg, s["t_end"],
                          snapshot_every=max(1, s["snapshot_every"]))
    return cfg, final, snaps


def _snapshot_rows(snaps):
    """Rows t,node_index,x,y; node_index restarts at 0 on each contour."""
    for snap in snaps:
        for contour in snap.contours:
            for i in range(contour.shape[0]):
                yield snap.t, i, contour[i, 0], contour[i, 1]


# ---------------------------------------------------------------------------
# Command bodies.  Each returns (output file names, manifest extras).

def _cmd_effective(s: dict, out: Path):
    params = _model_params(s)
    traj = integrate(params)
    traj.to_csv(out / "trajectory.csv")
    outputs = ["trajectory.csv"]

    q = traj.q_samples()
    pos = traj.tau > 0.0
    with np.errstate(invalid="ignore"):
        qt = q[pos] / traj.tau[pos]
    try:
        lim = limit_A(traj)
        a_limit, a_tail = lim.value, lim.tail_variation
    except CuspLabError:
        # Short runs have no settled bisector; report the raw endpoint.
        a_limit, a_tail = float(traj.A[-1]), None
    report = {
        "max_identity_residual": float(np.max(np.abs(identity_residual(traj)))),
        "B_max_increase": float(max(0.0, float(np.max(np.diff(traj.B))))),
        "I_max_decrease": float(max(0.0, float(np.max(-np.diff(traj.decay_samples()))))),
        "q_over_tau_min": float(np.min(qt)),
        "q_over_tau_max": float(np.max(qt)),
        "q_over_tau_lower": math.sin(4.0 * s["b0"]) / (math.pi * s["b0"]),
        "q_over_tau_upper": 4.0 / math.pi,
        "A_limit": a_limit,
        "A_tail_variation": a_tail,
        "n_samples": int(len(traj)),
    }
    if s["tau_max"] >= 5e3:
        window = (1e3, min(1e6, s["tau_max"]))
        report["delta_hat"] = estimate_delta(traj, window)
        report["delta_window"] = list(window)
    _write_json(out / "report.json", report)
    outputs.append("report.json")

    if s["transport"]:
        g0 = AngularDensity.from_spans([(-s["b0"], s["b0"]),
                                        (math.pi - s["b0"], math.pi + s["b0"])])
        taus = np.linspace(0.0, s["transport_tau_end"], s["transport_samples"])
        series = transport_series(g0, taus, forcing=s["forcing"])
        series.to_csv(out / "transport.csv")
        outputs.append("transport.csv")

    return outputs, {"max_identity_residual": report["max_identity_residual"]}


def _cmd_euler(s: dict, out: Path):
    cfg, final, snaps = _evolve_patch(s)
    write_csv(out / "snapshots.csv", ["t", "node_index", "x", "y"],
              _snapshot_rows(snaps))
    extras = {
        "n_snapshots": len(snaps),
        "n_contours": len(final.contours),
        "final_node_counts": final.node_counts(),
        "final_t": final.t,
    }
    return ["snapshots.csv"], extras


def _traj_splines(traj):
    return (CubicHermiteSpline(traj.tau, traj.B, traj.dB),
            CubicHermiteSpline(traj.tau, traj.A, traj.dA))


def _cmd_compare(s: dict, out: Path):
    tau_max = _auto_tau_max(s)
    traj = integrate(_model_params(s, tau_max=tau_max))
    traj.to_csv(out / "trajectory.csv")
    cfg, final, snaps = _evolve_patch(s)

    rows = []
    for snap in snaps:
        for r in s["radii"]:
            g = area_fraction(snap, r)
            f = deviation_fraction(snap, r, traj)
            tb = angular_deviation(snap, r, traj)
            half, bis = half_angle(snap, r)
            rows.append((snap.t, r, g, f, tb, half, bis))
    write_csv(out / "diagnostics.csv",
              ["t", "r", "G", "F", "theta_bar", "half_angle", "bisector"],
              rows)
    extras = {"n_snapshots": len(snaps), "tau_max": tau_max}
    return ["trajectory.csv", "diagnostics.csv"], extras


def _cmd_decomp(s: dict, out: Path):
    cfg = _patch_config(s)
    state = make_corner_patch(s["b0"], cfg, r_outer=s["r_outer"])
    if s["t_end"] > 0.0:
        state, _ = evolve(state, cfg, s["t_end"])
    thetas = np.linspace(0.0, math.pi, s["n_thetas"], endpoint=False)
    res = decomposition_residual(state, s["radii"], thetas, cfg=cfg)
    rows = []
    for i, r in enumerate(res.r):
        for j, th in enumerate(res.theta):
            rows.append((r, th, res.residual_over_r[i, j]))
    write_csv(out / "decomp.csv", ["r", "theta", "residual_over_r"], rows)
    # Uniformity in r is the point: reduce over directions first.
    profile = np.max(res.residual_over_r, axis=1)
    spread = float(np.max(profile) / np.min(profile))
    return ["decomp.csv"], {"residual_spread": spread}


def _parse_kappa(spec):
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "zero":
            return kappa_zero()
        if kind == "power":
            return kappa_power(float(spec["p"]))
        if kind == "table":
            return _kappa_from_file(spec["path"])
        raise ValueError(f"unknown kappa kind: {kind!r}")
    s = str(spec).strip()
    if s == "zero":
        return kappa_zero()
    if s.startswith("power:"):
        return kappa_power(float(s[len("power:"):]))
    if s.startswith("table:"):
        return _kappa_from_file(s[len("table:"):])
    raise ValueError(f"unknown kappa spec: {spec!r}")


def _kappa_from_file(path):
    """Two-column CSV r,kappa with one header line, increasing r."""
    p = Path(path)
    if not p.is_file():
        raise ValueError(f"kappa table not found: {p}")
    data = np.loadtxt(p, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("kappa table must have two columns (r, kappa)")
    return kappa_table(data[:, 0], data[:, 1])


def _cmd_bounds(s: dict, out: Path):
    params = BoundParams(C=s["C"], c0=s["c0"], Cstar=s["cstar"],
                         kappa=_parse_kappa(s["kappa"]))
    params.validate()
    rows = []
    for token in s["r_list"]:
        canon, L = parse_radius(token)
        choice = choose_parameters(params, L=L)
        bf = decay_F(params, L=L)
        gb = final_G_bound(params, L=L, delta=s["delta"])
        rows.append((canon, choice.xi, choice.m, choice.eta, bf, gb.total))
    write_csv(out / "bounds.csv", ["r", "xi", "m", "eta", "bound_F", "bound_G"],
              rows)
    extras = {}
    if s["check_dominance"]:
        margin = dominance_margin(params, s["dominance_m"], default_grid(params))
        if margin < 0.0:
            raise InvariantViolationError(
                "iterate_dominance",
                f"margin {margin:.3e} at m={s['dominance_m']}")
        extras["dominance_margin"] = float(margin)
        extras["dominance_m"] = s["dominance_m"]
    return ["bounds.csv"], extras


def _cmd_collapse(s: dict, out: Path):
    tau_max = _auto_tau_max(s, depth=0.0)
    traj = integrate(_model_params(s, tau_max=tau_max))
    traj.to_csv(out / "trajectory.csv")
    spline_B, spline_A = _traj_splines(traj)
    cfg, final, snaps = _evolve_patch(s)

    rows = []
    for snap in snaps:
        for r in s["radii"]:
            tau = snap.t * (-math.log(r))
            half, bis = half_angle(snap, r)
            rows.append((snap.t, r, tau, half, bis,
                         float(spline_B(tau)), float(spline_A(tau))))
    write_csv(out / "collapse.csv",
              ["t", "r", "tau", "half_angle", "bisector", "model_B", "model_A"],
              rows)
    extras = {"n_snapshots": len(snaps), "tau_max": tau_max}
    return ["trajectory.csv", "collapse.csv"], extras


_BODIES = {
    "effective": _cmd_effective,
    "euler": _cmd_euler,
    "compare": _cmd_compare,
    "decomp": _cmd_decomp,
    "bounds": _cmd_bounds,
    "collapse": _cmd_collapse,
}


def run(config: RunConfig) -> int:
    """Execute a resolved run request and write its artifacts."""
    t0 = time.perf_counter()
    config.out_dir.mkdir(parents=True, exist_ok=True)
    outputs, extras = _BODIES[config.command](config.settings, config.out_dir)
    manifest = {
        "version": __version__,
        "command": config.command,
        "config": config.settings,
        "config_sha256": config.sha256(),
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "outputs": outputs,
        "extras": extras,
    }
    _write_json(config.out_dir / "manifest.json", manifest)
    return 0


def main(argv=None) -> int:
    try:
        config = build_config(argv)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(config)
    except InvariantViolationError as exc:
        print(f"numerical invariant violated: {exc.invariant}", file=sys.stderr)
        print(str(exc), file=sys.stderr)
        return 3
    except CuspLabError as exc:
        print(f"numerical failure [{type(exc).__name__}]: {exc}",
              file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
