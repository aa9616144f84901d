"""Command-line front end: ``fml fresnel|singular|eigenline|morse|hyperbolic``.

Reports are UTF-8 JSON on stdout (and under ``--out`` when given).
Exit codes: 0 success, 2 usage/config error, 3 identity violation, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import eigenlines, fresnel, hyperbolic, morse, singularities
from .errors import FresnelError, NonHyperbolicError, NotBiaxialError, UsageError
from .medium import MediumKind, classify_medium
from .sphere import DielectricTensor, as_dielectric

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_IDENTITY, EXIT_IO = 0, 2, 3, 4

# tolerance keys accepted by --tol, with their defaults
DEFAULT_TOLS = {
    "zero": 1e-10,           # |s0| accepted at a multiple point
    "grad": morse.GRAD_TOL,
    "nondegenerate": morse.NONDEGENERATE_TOL,
    "gap": hyperbolic.GAP_TOL,
    "gcd": hyperbolic.GCD_TOL,
}


@dataclass
class RunConfig:
    epsilon: DielectricTensor
    subdivision: int = 3
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))
    output_dir: str | None = None
    format: str = "obj"
    grid: int = 32
    tilt: float = 0.0
    method: str = "projected"
    family: str = "maxwell"

    def __post_init__(self):
        if not 0 <= self.subdivision <= 7:
            raise UsageError("--subdivision must lie in [0, 7]")
        if not 2 <= self.grid <= 512:
            raise UsageError("--grid must lie in [2, 512]")


def _parse_epsilon(args) -> DielectricTensor:
    if args.epsilon and args.epsilon_matrix:
        raise UsageError("give either --epsilon or --epsilon-matrix, not both")
    if args.epsilon_matrix:
        try:
            with open(args.epsilon_matrix, encoding="utf-8") as fh:
                text = fh.read()
        except OSError:
            raise
        try:
            mat = json.loads(text)
        except json.JSONDecodeError:
            mat = [[float(x) for x in line.replace(",", " ").split()] for line in text.splitlines() if line.strip()]
        return as_dielectric(np.array(mat, dtype=float))
    if not args.epsilon:
        raise UsageError("--epsilon a,b,c or --epsilon-matrix FILE is required")
    try:
        vals = [float(x) for x in args.epsilon.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse --epsilon {args.epsilon!r}") from None
    if len(vals) != 3:
        raise UsageError("--epsilon takes exactly three comma-separated values")
    return DielectricTensor.diagonal(*vals)


def _parse_tols(items) -> dict:
    tols = dict(DEFAULT_TOLS)
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or key not in tols:
            raise UsageError(f"--tol expects key=value with key in {sorted(tols)}, got {item!r}")
        try:
            tols[key] = float(val)
        except ValueError:
            raise UsageError(f"--tol {key}: {val!r} is not a number") from None
    return tols


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fml", description="Fresnel surface singularities and eigenline Morse analysis")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--epsilon", help="principal permittivities a,b,c (diagonal tensor)")
    common.add_argument("--epsilon-matrix", help="file with a 3x3 symmetric tensor (JSON or whitespace rows)")
    common.add_argument("--subdivision", type=int, default=3, help="icosphere level for sampling/seeding (0-7)")
    common.add_argument("--out", help="directory for report and mesh files")
    common.add_argument("--format", choices=fresnel.FORMATS, default="obj", help="mesh format (fresnel)")
    common.add_argument("--tol", action="append", metavar="KEY=VALUE", help="tolerance override (repeatable)")
    common.add_argument("--grid", type=int, default=32, help="eigenline grid resolution")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("fresnel", parents=[common], help="sample the two-sheeted surface and export a mesh")
    p.add_argument("--method", choices=fresnel.METHODS, default="projected")
    sub.add_parser("singular", parents=[common], help="multiple points, indices and the total index")
    sub.add_parser("eigenline", parents=[common], help="sample the eigenline surface and its fibres")
    p = sub.add_parser("morse", parents=[common], help="critical points and Morse counts on the eigenline surface")
    p.add_argument("--tilt", type=float, default=0.0, help="add tilt * <c, p> with a fixed generic c")
    p = sub.add_parser("hyperbolic", parents=[common], help="hyperbolicity and multiplicity-set scan")
    p.add_argument("--family", default="maxwell", help="'maxwell', 'scalar_wave' or a JSON table file")
    return ap


def _emit(cfg: RunConfig, name: str, report: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "version": __version__, "command": name,
           "tolerances": cfg.tolerances}
    doc.update(report)
    text = json.dumps(doc, indent=1, ensure_ascii=False) + "\n"
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        with open(os.path.join(cfg.output_dir, f"{name}_report.json"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return text


def _eps_json(eps: DielectricTensor):
    return eps.matrix.tolist()


def cmd_fresnel(cfg: RunConfig) -> int:
    eps = cfg.epsilon
    surf = fresnel.sample_surface(eps, max(cfg.subdivision, 1), cfg.method)
    report = {"epsilon": _eps_json(eps), "class": surf.medium.kind.value, "method": cfg.method,
              "directions": len(surf.directions),
              "radius_range": [float(surf.radii.min()), float(surf.radii.max())]}
    if surf.medium.kind is MediumKind.ISOTROPIC:
        report["sphere_radius"] = float(surf.radii[0, 0])
    if cfg.output_dir:
        os.makedirs(cfg.output_dir, exist_ok=True)
        path = os.path.join(cfg.output_dir, f"fresnel.{cfg.format}")
        fresnel.export_mesh(surf, cfg.format, path)
        report["mesh"] = os.path.basename(path)
    _emit(cfg, "fresnel", report)
    return EXIT_OK


def cmd_singular(cfg: RunConfig) -> int:
    eps = cfg.epsilon
    kind = classify_medium(eps).kind
    rep = singularities.singularity_report(eps)
    code = EXIT_OK
    if kind is MediumKind.ISOTROPIC:
        rep["message"] = "isotropic: s0 vanishes identically (every direction is a multiple point)"
    elif kind is MediumKind.UNIAXIAL:
        rep["warning"] = "uniaxial: zeros are not transversal; the eigenline construction does not apply"
    else:
        zeros = rep["zeros"]
        ok = len(zeros) == 4 and rep["total_index"] == 4
        rep["identity_ok"] = ok
        code = EXIT_OK if ok else EXIT_IDENTITY
    _emit(cfg, "singular", rep)
    return code


def cmd_eigenline(cfg: RunConfig) -> int:
    rep = eigenlines.eigenline_report(cfg.epsilon, resolution=cfg.grid)
    smooth = all(f["min_grad_f"] > 1e-3 for f in rep["fibers"])
    rep["smooth"] = smooth
    _emit(cfg, "eigenline", rep)
    return EXIT_OK if smooth and rep["components"] == 1 else EXIT_IDENTITY


def cmd_morse(cfg: RunConfig) -> int:
    morse.GRAD_TOL = cfg.tolerances["grad"]
    morse.NONDEGENERATE_TOL = cfg.tolerances["nondegenerate"]
    tilt = morse.Tilt.generic(cfg.tilt) if cfg.tilt else morse.NO_TILT
    rep = morse.morse_report(cfg.epsilon, tilt, subdivision=max(cfg.subdivision, 1))
    _emit(cfg, "morse", morse.report_json(cfg.epsilon, rep))
    return EXIT_OK if rep.inequalities_ok else EXIT_IDENTITY


def cmd_hyperbolic(cfg: RunConfig) -> int:
    fam = hyperbolic.load_family(cfg.family, cfg.epsilon if cfg.family == "maxwell" else None)
    try:
        res = hyperbolic.scan_multiplicity_set(fam, None, cfg.subdivision, tol=cfg.tolerances["gap"])
    except NonHyperbolicError as exc:
        _emit(cfg, "hyperbolic", {"family_id": fam.family_id, "hyperbolic": False, "error": str(exc),
                                  "direction": [float(c) for c in exc.direction]})
        return EXIT_IDENTITY
    rep = res.as_dict()
    rep["hyperbolic_everywhere"] = bool(np.all(res.hyperbolic))
    rep["strictly_hyperbolic_except"] = len(res.multiplicity_directions)
    _emit(cfg, "hyperbolic", rep)
    return EXIT_OK


COMMANDS = {
    "fresnel": cmd_fresnel,
    "singular": cmd_singular,
    "eigenline": cmd_eigenline,
    "morse": cmd_morse,
    "hyperbolic": cmd_hyperbolic,
}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        eps = None
        if args.command != "hyperbolic" or getattr(args, "family", "maxwell") == "maxwell":
            eps = _parse_epsilon(args)
        cfg = RunConfig(
            epsilon=eps,
            subdivision=args.subdivision,
            tolerances=_parse_tols(args.tol),
            output_dir=args.out,
            format=args.format,
            grid=args.grid,
            tilt=getattr(args, "tilt", 0.0),
            method=getattr(args, "method", "projected"),
            family=getattr(args, "family", "maxwell"),
        )
        return COMMANDS[args.command](cfg)
    except NotBiaxialError as exc:
        print(f"fml: refused: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"fml: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FresnelError, ValueError) as exc:
        print(f"fml: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
