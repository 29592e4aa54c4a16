"""Command line interface.

Subcommands: validate, bands, density, green, perturb, oracle-check.

Values are taken from flags first, then from the JSON file given with
``--config``, then from built-in defaults. Every output file starts with the
effective configuration so a run can be repeated exactly.

Exit codes: 0 success, 2 invalid input, 3 no convergence, 4 violated
precondition, 5 failed oracle check.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import numpy as np

from . import __version__, kernels
from .errors import (
    DepthOverflow,
    InsufficientDepth,
    MatrixValidationError,
    NoConvergence,
    PreconditionError,
    UndecidedEnergy,
    ValidationFailure,
)
from .oracle import cross_validate, walk_moments
from .potential import RadialPotential
from .recursion import (
    Classification,
    SolverConfig,
    boundary_values,
    fixed_point,
    green_levels,
)
from .spectrum import (
    closed_walks,
    density_moment,
    green_along_path,
    scan_bands,
    vertex_green_array,
)
from .substitution import generate_tree, validate

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_PRECONDITION = 4
EXIT_ORACLE = 5

DEFAULTS = {
    "matrix": None,
    "labels": None,
    "root_label": None,
    "grid_step": None,
    "eta0": 0.1,
    "eta_ratio": 0.5,
    "eta_steps": 40,
    "coupling": 0.0,
    "potential": "zero",
    "interval": None,
    "out": None,
    "format": None,
    # command specific
    "energies": None,
    "path": None,
    "depth": 4,
    "energy": 0.0,
    "eta": None,
    "etas": [1e-3, 1e-4, 1e-5],
    "depths": [5, 10, 20, 40, 80],
    "tolerance": 1e-8,
    "z": None,
    "max_moment": 8,
    "moment_rtol": 1e-2,
}

GRID_STEP = {"bands": 1e-2, "density": 1e-2, "perturb": 0.1, "oracle-check": 1e-2}
FORMAT = {"validate": "json", "bands": "json", "density": "csv", "green": "csv",
          "perturb": "csv", "oracle-check": "json"}
DEFAULT_Z = [(0.0, 1.0), (0.5, 0.5), (-1.5, 0.5), (2.0, 0.5)]

_SHARED = ("root_label", "eta0", "eta_ratio", "eta_steps", "format")
# keys echoed in output headers, per command
HEADER_KEYS = {
    "validate": (),
    "bands": _SHARED + ("grid_step", "interval"),
    "density": _SHARED + ("grid_step", "interval", "energies", "path"),
    "green": _SHARED + ("depth", "energy", "eta", "coupling", "potential"),
    "perturb": _SHARED + ("grid_step", "interval", "coupling", "potential", "etas", "path"),
    "oracle-check": _SHARED + ("grid_step", "depths", "tolerance", "z", "max_moment", "moment_rtol"),
}


class ConfigError(ValueError):
    pass


# -- parsing -----------------------------------------------------------------

def _common(p):
    p.add_argument("-m", "--matrix", help="inline JSON matrix or path to a matrix JSON file")
    p.add_argument("--labels", help="comma separated label names")
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--root-label", dest="root_label")
    p.add_argument("--eta0", type=float)
    p.add_argument("--eta-ratio", dest="eta_ratio", type=float)
    p.add_argument("--eta-steps", dest="eta_steps", type=int)
    p.add_argument("--out", help="output directory (stdout when omitted)")
    p.add_argument("--format", choices=["csv", "json"])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="conetree",
        description="Spectra and Green functions of trees of finite cone type.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a substitution matrix")
    _common(p)

    p = sub.add_parser("bands", help="scan the real axis for bands")
    _common(p)
    p.add_argument("--grid-step", dest="grid_step", type=float)
    p.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"),
                   help="energy range to scan")

    p = sub.add_parser("density", help="spectral density at a vertex")
    _common(p)
    p.add_argument("--grid-step", dest="grid_step", type=float)
    p.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"))
    p.add_argument("-E", "--energies", nargs="+", type=float)
    p.add_argument("--path", nargs="+", help="labels from the root to the vertex")

    p = sub.add_parser("green", help="Green functions on a finite tree")
    _common(p)
    p.add_argument("--depth", type=int)
    p.add_argument("-E", "--energy", type=float)
    p.add_argument("--eta", type=float, help="imaginary part; boundary value if omitted")
    p.add_argument("--lambda", dest="coupling", type=float)
    p.add_argument("--potential", help="file, random:SEED, decay:Q, alternating or zero")

    p = sub.add_parser("perturb", help="stability of the density under a potential")
    _common(p)
    p.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"))
    p.add_argument("--grid-step", dest="grid_step", type=float)
    p.add_argument("--lambda", dest="coupling", type=float)
    p.add_argument("--potential")
    p.add_argument("--etas", nargs="+", type=float)
    p.add_argument("--path", nargs="+", help="labels from the root to the vertex")

    p = sub.add_parser("oracle-check", help="compare against brute-force oracles")
    _common(p)
    p.add_argument("--depths", nargs="+", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--z", nargs=2, type=float, action="append", metavar=("RE", "IM"))
    p.add_argument("--max-moment", dest="max_moment", type=int)
    p.add_argument("--grid-step", dest="grid_step", type=float)
    return parser


def _load_config_file(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(doc) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return doc


def resolve(args) -> dict:
    """Merge flags over config file over defaults."""
    cfg = dict(DEFAULTS)
    cfg["grid_step"] = GRID_STEP.get(args.command)
    cfg["format"] = FORMAT[args.command]
    cfg["command"] = args.command
    if getattr(args, "config", None):
        cfg.update(_load_config_file(args.config))
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            cfg[key] = value
    if cfg["matrix"] is None:
        raise ConfigError("no matrix given (use -m or a config file)")
    return cfg


def load_matrix(spec, labels=None):
    """Matrix from an inline JSON string, a list, or a JSON file path."""
    if isinstance(spec, str) and os.path.exists(spec):
        with open(spec) as fh:
            doc = json.load(fh)
    elif isinstance(spec, str):
        try:
            doc = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"matrix is neither a file nor valid JSON: {exc}") from None
    else:
        doc = spec
    if isinstance(doc, dict):
        labels = labels or doc.get("labels")
        doc = doc.get("matrix")
    if isinstance(labels, str):
        labels = labels.split(",")
    return validate(doc, labels)


def solver_config(cfg) -> SolverConfig:
    try:
        return SolverConfig(eta0=cfg["eta0"], eta_ratio=cfg["eta_ratio"], eta_steps=cfg["eta_steps"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -- output --------------------------------------------------------------------

def _header(cfg, matrix) -> dict:
    out = {k: cfg[k] for k in HEADER_KEYS[cfg["command"]]}
    out["command"] = cfg["command"]
    out["matrix"] = {"labels": list(matrix.labels), "matrix": matrix.entries.tolist()}
    out["backend"] = kernels.BACKEND
    out["version"] = __version__
    return out


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_text(header, columns, rows) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(header, sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{x:.12e}" if math.isfinite(x) else "nan"


def emit(cfg, files: dict, primary: str):
    """Write ``files`` under ``cfg['out']``, or print the primary one."""
    out = cfg["out"]
    if out is None:
        sys.stdout.write(files[primary])
        return
    os.makedirs(out, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out, name), "w", newline="") as fh:
            fh.write(text)
        print(f"wrote {os.path.join(out, name)}")


def _root(matrix, cfg):
    return matrix.index(cfg["root_label"]) if cfg["root_label"] is not None else 0


# -- commands ---------------------------------------------------------------------

def cmd_validate(cfg):
    try:
        matrix = load_matrix(cfg["matrix"], cfg["labels"])
    except MatrixValidationError as exc:
        print(f"invalid: {exc}")
        return EXIT_VALIDATION
    kind = "regular" if matrix.is_regular else "non-regular"
    print(f"valid, {kind}, n(M)={matrix.primitivity_exponent}, labels={','.join(matrix.labels)}")
    if cfg["out"] is not None:
        doc = {"config": _header(cfg, matrix), "valid": True, "regular": matrix.is_regular,
               "primitivity_exponent": matrix.primitivity_exponent,
               "fingerprint": matrix.fingerprint()}
        emit(cfg, {"validation.json": _dump_json(doc)}, "validation.json")
    return EXIT_OK


def cmd_bands(cfg):
    matrix = load_matrix(cfg["matrix"], cfg["labels"])
    config = solver_config(cfg)
    root = _root(matrix, cfg)
    report = scan_bands(matrix, cfg["interval"], cfg["grid_step"], config, root)
    header = _header(cfg, matrix)
    doc = report.to_dict()
    doc["config"] = header
    rows = [[_fmt(E), str(c), _fmt(im), _fmt(rho)] for E, c, im, rho in
            zip(report.energies, report.classifications, report.im_gamma.min(axis=1),
                report.density_root)]
    files = {
        "bands.json": _dump_json(doc),
        "spectrum.csv": _csv_text(header, ["E", "classification", "min_im_gamma", "density_root"], rows),
    }
    primary = "bands.json" if cfg["format"] == "json" else "spectrum.csv"
    if cfg["out"] is not None:
        for b in report.bands:
            print(f"band [{b.lower:.6f}, {b.upper:.6f}]")
        print(f"normalization: {report.normalization:.6f}")
    emit(cfg, files, primary)
    return EXIT_OK


def _energy_list(cfg):
    if cfg["energies"]:
        return np.asarray(cfg["energies"], dtype=np.float64)
    if cfg["interval"]:
        a, b = cfg["interval"]
        n = int(math.floor((b - a) / cfg["grid_step"] + 1e-9)) + 1
        return a + cfg["grid_step"] * np.arange(n)
    raise ConfigError("give --energies or --interval")


def _path_indices(matrix, root, path):
    if not path:
        return [root]
    idx = [matrix.index(p) for p in path]
    if idx[0] != root:
        idx = [root] + idx
    for a, b in zip(idx, idx[1:]):
        if matrix.entries[a, b] == 0:
            raise PreconditionError(f"label {matrix.labels[b]!r} cannot follow {matrix.labels[a]!r}")
    return idx


def cmd_density(cfg):
    matrix = load_matrix(cfg["matrix"], cfg["labels"])
    config = solver_config(cfg)
    root = _root(matrix, cfg)
    path = _path_indices(matrix, root, cfg["path"])
    energies = _energy_list(cfg)
    results = boundary_values(energies, matrix, config, root)
    rows = []
    for r in results:
        if r.classification is Classification.INSIDE:
            rho = max(green_along_path(r.limit, path).imag, 0.0) / math.pi
        elif r.classification is Classification.OUTSIDE:
            rho = 0.0
        else:
            rho = math.nan
        rows.append((r.energy, str(r.classification), rho))
    header = _header(cfg, matrix)
    files = {
        "density.csv": _csv_text(header, ["E", "classification", "density"],
                                 [[_fmt(E), c, _fmt(rho)] for E, c, rho in rows]),
        "density.json": _dump_json({
            "config": header,
            "path": [matrix.labels[j] for j in path],
            "samples": [{"E": E, "classification": c, "density": None if math.isnan(rho) else rho}
                        for E, c, rho in rows],
        }),
    }
    emit(cfg, files, f"density.{cfg['format']}")
    undecided = sum(1 for _, c, _ in rows if c == "UNDECIDED")
    if undecided:
        print(f"warning: {undecided} energies could not be classified", file=sys.stderr)
    return EXIT_OK


def _potential(cfg, matrix):
    try:
        return RadialPotential.from_spec(cfg["potential"], matrix.size, float(cfg["coupling"]))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"bad potential {cfg['potential']!r}: {exc}") from None


def cmd_green(cfg):
    matrix = load_matrix(cfg["matrix"], cfg["labels"])
    config = solver_config(cfg)
    root = _root(matrix, cfg)
    tree = generate_tree(matrix, root, int(cfg["depth"]))
    potential = _potential(cfg, matrix)
    E, eta = float(cfg["energy"]), cfg["eta"]
    if not potential.is_zero:
        if eta is None or eta <= 0:
            raise PreconditionError("potentials need --eta > 0")
        gamma = green_levels(E + 1j * eta, matrix, potential, tree.depth, config)[0]
    elif eta is not None:
        if eta <= 0:
            raise PreconditionError("--eta must be positive")
        gamma = fixed_point(E + 1j * eta, matrix, config).values
    else:
        bv = boundary_values([E], matrix, config, root)[0]
        if bv.classification is Classification.UNDECIDED:
            raise UndecidedEnergy(f"energy {E} is not classifiable")
        gamma = bv.limit.astype(np.complex128)
    G = vertex_green_array(tree, gamma)
    header = _header(cfg, matrix)
    names = matrix.labels
    rows = []
    for v in range(len(tree)):
        parent = int(tree.parents[v])
        rows.append([v, names[tree.labels[v]], int(tree.spheres[v]), "" if parent < 0 else parent,
                     _fmt(G[v].real), _fmt(G[v].imag)])
    files = {
        "tree.csv": _csv_text(header, ["id", "label", "sphere", "parent_id", "re_green", "im_green"], rows),
        "green.json": _dump_json({
            "config": header,
            "vertices": [{"id": r[0], "label": r[1], "sphere": r[2],
                          "parent_id": None if r[3] == "" else r[3],
                          "green": [float(G[r[0]].real), float(G[r[0]].imag)]} for r in rows],
        }),
    }
    emit(cfg, files, "tree.csv" if cfg["format"] == "csv" else "green.json")
    return EXIT_OK


def perturbation_scan(matrix, root, path, energies, etas, potential, config):
    """``Im G_x(E + i eta, L + v)`` on a grid; shape ``(len(etas), len(energies))``."""
    depth = len(path) - 1
    out = np.empty((len(etas), len(energies)))
    for m, eta in enumerate(etas):
        z = np.asarray(energies) + 1j * eta
        table = green_levels(z, matrix, potential, depth, config)
        for i in range(len(energies)):
            out[m, i] = green_along_path(table[i], path).imag
    return out


def cmd_perturb(cfg):
    matrix = load_matrix(cfg["matrix"], cfg["labels"])
    config = solver_config(cfg)
    root = _root(matrix, cfg)
    path = _path_indices(matrix, root, cfg["path"])
    if cfg["interval"] is None:
        raise ConfigError("perturb needs --interval A B")
    a, b = map(float, cfg["interval"])
    if not a < b:
        raise ConfigError("interval needs A < B")
    if a <= 0.0 <= b:
        raise PreconditionError("the interval must not contain 0")
    if matrix.is_regular:
        print("warning: regular tree; arbitrarily small potentials may destroy the "
              "absolutely continuous spectrum", file=sys.stderr)
    report = scan_bands(matrix, config=config, root_label=root)
    if not any(band.lower < a and b < band.upper for band in report.bands):
        raise PreconditionError(f"[{a}, {b}] is not inside the interior of a band")
    etas = sorted((float(e) for e in cfg["etas"]), reverse=True)
    if len(etas) < 2 or etas[-1] <= 0:
        raise ConfigError("need at least two positive etas")
    energies = _energy_list({**cfg, "energies": None})
    potential = _potential(cfg, matrix)
    values = perturbation_scan(matrix, root, path, energies, etas, potential, config)
    baseline = boundary_values(energies, matrix, config, root)
    unperturbed = np.array([green_along_path(r.limit, path).imag
                            if r.classification is Classification.INSIDE else math.nan
                            for r in baseline])
    ratio = values[-1] / values[-2]
    sup = float(np.max(values))
    stable = bool(np.all(np.abs(ratio - 1.0) <= 0.05) and sup < 1e3)
    header = _header(cfg, matrix)
    header["potential_description"] = potential.describe()
    columns = ["E"] + [f"im_green_eta_{e:.0e}" for e in etas] + ["ratio", "unperturbed"]
    rows = [[_fmt(E)] + [_fmt(values[m, i]) for m in range(len(etas))]
            + [_fmt(ratio[i]), _fmt(unperturbed[i])] for i, E in enumerate(energies)]
    summary = {
        "config": header,
        "verdict": "STABLE" if stable else "UNSTABLE",
        "sup": sup,
        "max_ratio_deviation": float(np.max(np.abs(ratio - 1.0))),
        "max_relative_gap_to_unperturbed": float(np.nanmax(np.abs(values[-1] / unperturbed - 1.0))),
    }
    files = {"perturb.csv": _csv_text(header, columns, rows), "perturb.json": _dump_json(summary)}
    print(f"verdict: {summary['verdict']} (sup {sup:.4g}, "
          f"max ratio deviation {summary['max_ratio_deviation']:.3g})")
    emit(cfg, files, f"perturb.{cfg['format']}")
    return EXIT_OK


def cmd_oracle(cfg):
    matrix = load_matrix(cfg["matrix"], cfg["labels"])
    config = solver_config(cfg)
    root = _root(matrix, cfg)
    if cfg["z"] is None:
        cfg["z"] = [list(z) for z in DEFAULT_Z]
    zs = [complex(re, im) for re, im in cfg["z"]]
    header = _header(cfg, matrix)
    failed = []
    try:
        report = cross_validate(matrix, zs, cfg["depths"], cfg["tolerance"], config)
    except ValidationFailure as exc:
        report = exc.report
        failed.append(f"cross-validation: {exc}")

    m_max = int(cfg["max_moment"])
    tree = generate_tree(matrix, root, (m_max + 1) // 2)
    first_return = walk_moments(tree, m_max)
    spectrum = scan_bands(matrix, grid_step=cfg["grid_step"], config=config, root_label=root)
    moments = []
    for m in range(m_max + 1):
        dp = closed_walks(matrix, root, m)
        dens = density_moment(spectrum, m)
        rel = abs(dens - dp) / max(abs(dp), 1.0)
        ok = dp == first_return[m] and rel <= cfg["moment_rtol"]
        if not ok:
            failed.append(f"moment {m}: walks {dp} / {first_return[m]}, density {dens:.6g}")
        moments.append({"m": m, "walks_dp": dp, "walks_first_return": first_return[m],
                        "density": dens, "relative_gap": rel, "verdict": "PASS" if ok else "FAIL"})
    doc = {"config": header, "cross_validation": report.to_dict(), "moments": moments,
           "verdict": "FAIL" if failed else "PASS"}
    rows = [[e["z"][0], e["z"][1], d, _fmt(g)] for e in doc["cross_validation"]["entries"]
            for d, g in zip(e["depths"], e["gaps"])]
    files = {"oracle.json": _dump_json(doc),
             "oracle.csv": _csv_text(header, ["re_z", "im_z", "depth", "gap"], rows)}
    emit(cfg, files, f"oracle.{cfg['format']}")
    for line in failed:
        print(f"FAIL {line}", file=sys.stderr)
    return EXIT_ORACLE if failed else EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "bands": cmd_bands,
    "density": cmd_density,
    "green": cmd_green,
    "perturb": cmd_perturb,
    "oracle-check": cmd_oracle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, MatrixValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (PreconditionError, UndecidedEnergy, InsufficientDepth, DepthOverflow) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ValidationFailure as exc:
        print(f"oracle failure: {exc}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
