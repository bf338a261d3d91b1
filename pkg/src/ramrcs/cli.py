"""Command-line front end.

Every flag can also come from an INI file passed with --config: keys in the
[ramrcs] section (or a section named after the subcommand) use the flag's
long name with dashes or underscores. Command-line flags win over the file.
The worker count comes only from the RAMRCS_WORKERS environment variable.

Exit codes: 0 success, 2 usage or configuration error, 3 solver or domain
error, 4 file system error. Nothing is left behind on failure.
"""
from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

from . import io
from .absorber import reference_stack, reference_stack_template, reflection
from .core import AngleGrid, DomainError, FrequencyGrid, Polarization
from .fit import FitSpec, fit_absorber, fitted_stack
from .geometry.scene import make_duct
from .po import PlateSpec, plate_rcs
from .postprocess import median_rcs
from .sbr import SbrParams, monostatic_sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pols(text):
    try:
        return tuple(Polarization.parse(x) for x in str(text).split(",") if x.strip())
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_common(p, freq=(1.0, 18.0, 1.0), phi=(180.0, 240.0, 0.5), pols="HH,VV", sbr=False, median=False):
    p.add_argument("--config", help="INI file mirroring these flags")
    p.add_argument("--output", help="output path prefix (files get suffixes)")
    g = p.add_argument_group("frequency grid (GHz)")
    g.add_argument("--f-start", type=float, default=freq[0])
    g.add_argument("--f-stop", type=float, default=freq[1])
    g.add_argument("--f-step", type=float, default=freq[2])
    g.add_argument("--freqs", type=_floats, help="explicit list, overrides start/stop/step")
    if phi is not None:
        a = p.add_argument_group("angle grid (deg)")
        a.add_argument("--theta", type=float, default=0.0)
        a.add_argument("--phi-start", type=float, default=phi[0])
        a.add_argument("--phi-stop", type=float, default=phi[1])
        a.add_argument("--phi-step", type=float, default=phi[2])
    p.add_argument("--pols", type=_pols, default=_pols(pols))
    if sbr:
        s = p.add_argument_group("ray tracing")
        s.add_argument("--density", type=float, default=SbrParams.ray_density)
        s.add_argument("--bounces", type=int, default=SbrParams.max_bounces)
        s.add_argument("--cull-db", type=float, default=SbrParams.tube_cull_db)
    if median:
        p.add_argument("--median-lo", type=float, help="median window start (default: sweep start)")
        p.add_argument("--median-hi", type=float, help="median window end (default: sweep end)")


def _add_coating(p, default="ras", name="coating"):
    p.add_argument(f"--{name}", default=default, help="pec, ideal, ras or a stack file")
    if name == "coating" or name == "wall":
        p.add_argument("--stack", help="stack file used for 'ras' (default: fitted reference absorber)")
        p.add_argument("--rivet-fraction", type=float, default=0.0, help="rivet head area fraction in [0, 1]")


def build_parser():
    parser = argparse.ArgumentParser(prog="ramrcs", description="Absorber and radar cross-section workbench")
    sub = parser.add_subparsers(dest="task", required=True)

    p = sub.add_parser("absorber", help="reflection spectrum of a layer stack")
    _add_common(p, freq=(1.0, 30.0, 1.0), phi=None, pols="TE")
    p.add_argument("--stack", help="stack file (default: fitted reference absorber)")
    p.add_argument("--angles", type=_floats, default=(0.0,), help="incidence angles in degrees")
    p.add_argument("--rivet-fraction", type=float, default=0.0)

    p = sub.add_parser("fit", help="fit the free sheet of a stack to a band")
    _add_common(p, freq=(1.0, 30.0, 0.1), phi=None, pols="TE")
    p.add_argument("--stack", help="template stack file with one free sheet (default: reference geometry)")
    p.add_argument("--band", type=_floats, default=(4.0, 18.0), help="band edges in GHz")
    p.add_argument("--band-step", type=float, default=0.1, help="band grid step in GHz")
    p.add_argument("--target-db", type=float, default=-10.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("plate", help="closed-form PO scan of a coated plate")
    _add_common(p, freq=(5.0, 5.0, 1.0), phi=(-60.0, 60.0, 0.5))
    p.add_argument("--a", type=float, default=0.3, help="edge along the scan (m)")
    p.add_argument("--b", type=float, default=0.3, help="other edge (m)")
    _add_coating(p)

    p = sub.add_parser("duct", help="SBR sweep of circular ducts over several lengths")
    _add_common(p, freq=(10.0, 10.0, 1.0), sbr=True, median=True)
    p.add_argument("--diameter", type=float, default=0.75, help="duct diameter (m)")
    p.add_argument("--lengths", type=_floats, default=(0.5, 1.0, 2.0, 4.0), help="duct lengths (m)")
    _add_coating(p, name="wall")
    p.add_argument("--termination", default="pec", help="pec, ideal, ras or a stack file")

    p = sub.add_parser("scene", help="SBR sweep of a scene file")
    _add_common(p, freq=(10.0, 10.0, 1.0), phi=(180.0, 270.0, 0.5), sbr=True, median=True)
    p.add_argument("--scene", help="scene INI file")

    p = sub.add_parser("median", help="median RCS of a result CSV over an azimuth window")
    p.add_argument("--config")
    p.add_argument("--output")
    p.add_argument("--input", help="result CSV")
    p.add_argument("--median-lo", type=float)
    p.add_argument("--median-hi", type=float)
    p.add_argument("--label", default="")
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from the --config file, if any."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    path = Path(args.config)
    if not path.is_file():
        raise UsageError(f"config file {path} not found")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    sub = parser._subparsers._group_actions[0].choices[args.task]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    values = {}
    for section in ("ramrcs", args.task):
        if section not in cp:
            continue
        for key, raw in cp[section].items():
            dest = key.replace("-", "_")
            if dest == "task":
                if raw.strip() != args.task:
                    raise UsageError(f"{path}: config is for task {raw.strip()!r}, not {args.task!r}")
                continue
            if dest not in actions:
                raise UsageError(f"{path}: unknown key {key!r} for task {args.task!r}")
            conv = actions[dest].type
            try:
                values[dest] = conv(raw) if conv else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{path}: bad value for {key!r}: {exc}") from None
    unknown = [s for s in cp.sections() if s not in ("ramrcs", args.task)]
    if unknown:
        raise UsageError(f"{path}: unexpected sections {unknown}")
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def _freq_grid(args):
    if args.freqs:
        return FrequencyGrid(tuple(sorted(f * 1e9 for f in args.freqs)))
    return FrequencyGrid.from_range(args.f_start * 1e9, args.f_stop * 1e9, args.f_step * 1e9)


def _angle_grid(args):
    return AngleGrid.from_range(args.phi_start, args.phi_stop, args.phi_step, args.theta)


def _params(args):
    return SbrParams(max_bounces=args.bounces, ray_density=args.density, tube_cull_db=args.cull_db)


def _window(args):
    return args.median_lo, args.median_hi


def _prefix(args):
    if not args.output:
        raise UsageError("--output is required")
    return Path(args.output)


def _named(prefix, suffix):
    return prefix.with_name(prefix.name + suffix)


def _check_file(path, what):
    if path is None:
        raise UsageError(f"{what} is required")
    if not Path(path).is_file():
        raise UsageError(f"{what} {path} not found")


def _task_absorber(args, out):
    if args.stack:
        _check_file(args.stack, "stack file")
    stack = io.parse_stack(args.stack) if args.stack else reference_stack()
    grid = _freq_grid(args)
    spectra = []
    for theta in args.angles:
        for pol in args.pols:
            if pol.local not in (Polarization.TE, Polarization.TM):
                raise UsageError("absorber polarizations are TE or TM")
            sp = reflection(stack, grid, theta, pol.local)
            if args.rivet_fraction:
                from .rivet import RivetLayout, effective_reflection

                sp = type(sp)(sp.freqs, sp.theta_deg, sp.pol,
                              effective_reflection(sp.gamma, RivetLayout(args.rivet_fraction)))
            spectra.append(sp)
    csv_path = _named(out, ".csv")
    return {csv_path: io.format_spectrum_csv(spectra),
            _named(out, "_plot.py"): io.plot_script("gamma", [csv_path.name], out.name + ".png")}


def _task_fit(args, out):
    if args.stack:
        _check_file(args.stack, "stack file")
    template = io.parse_stack(args.stack) if args.stack else reference_stack_template()
    if len(args.band) != 2:
        raise UsageError("--band needs two values")
    spec = FitSpec(band=(args.band[0] * 1e9, args.band[1] * 1e9), target_db=args.target_db,
                   grid_step=args.band_step * 1e9)
    res = fit_absorber(spec, template, seed=args.seed)
    stack = fitted_stack(template, res)
    spectra = [reflection(stack, _freq_grid(args), 0.0, pol.local) for pol in args.pols]
    csv_path = _named(out, ".csv")
    note = (f"# worst in band {res.worst_db!r} dB, target {'met' if res.success else 'missed'}, "
            f"seed {args.seed}\n")
    return {csv_path: io.format_spectrum_csv(spectra),
            _named(out, "_stack.ini"): note + io.format_stack(stack),
            _named(out, "_plot.py"): io.plot_script("gamma", [csv_path.name], out.name + ".png")}


def _task_plate(args, out):
    coating = io.resolve_coating(args.coating, args.stack, args.rivet_fraction)
    grid = _angle_grid(args)
    if grid.theta_deg != 0.0:
        raise UsageError("plate scans use theta = 0")
    res = plate_rcs(PlateSpec(args.a, args.b, coating), _freq_grid(args), grid, args.pols)
    csv_path = _named(out, ".csv")
    return {csv_path: io.format_result_csv(res),
            _named(out, "_plot.py"): io.plot_script("rcs", [csv_path.name], out.name + ".png")}


def _task_duct(args, out):
    wall = io.resolve_coating(args.wall, args.stack, args.rivet_fraction)
    term = io.resolve_coating(args.termination, args.stack)
    grid, freqs, params = _angle_grid(args), _freq_grid(args), _params(args)
    files, reports, names = {}, [], []
    for length in args.lengths:
        scene = make_duct(args.diameter, length, wall, term)
        res = monostatic_sweep(scene, grid, freqs, args.pols, params)
        path = _named(out, f"_L{length:g}m.csv")
        files[path] = io.format_result_csv(res)
        names.append(path.name)
        reports.append(median_rcs(res, *_window(args), label=f"L={length:g}m"))
    med_path = _named(out, "_median.csv")
    files[med_path] = io.format_median_csv(reports)
    files[_named(out, "_plot.py")] = io.plot_script("median", [med_path.name], out.name + ".png")
    files[_named(out, "_rcs_plot.py")] = io.plot_script("rcs", names, out.name + "_rcs.png")
    return files


def _task_scene(args, out):
    _check_file(args.scene, "scene file")
    scene = io.parse_scene(args.scene)
    res = monostatic_sweep(scene, _angle_grid(args), _freq_grid(args), args.pols, _params(args))
    csv_path = _named(out, ".csv")
    med_path = _named(out, "_median.csv")
    return {csv_path: io.format_result_csv(res),
            med_path: io.format_median_csv([median_rcs(res, *_window(args), label=Path(args.scene).stem)]),
            _named(out, "_plot.py"): io.plot_script("rcs", [csv_path.name], out.name + ".png")}


def _task_median(args, out):
    _check_file(args.input, "input CSV")
    res = io.read_result_csv(args.input)
    rep = median_rcs(res, args.median_lo, args.median_hi, label=args.label or Path(args.input).stem)
    csv_path = _named(out, ".csv")
    return {csv_path: io.format_median_csv([rep]),
            _named(out, "_plot.py"): io.plot_script("median", [csv_path.name], out.name + ".png")}


TASKS = {
    "absorber": _task_absorber,
    "fit": _task_fit,
    "plate": _task_plate,
    "duct": _task_duct,
    "scene": _task_scene,
    "median": _task_median,
}


def _write_all(files):
    """Write every output or none of them."""
    written = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            written.append(path)
    except OSError:
        for p in written:
            p.unlink(missing_ok=True)
        raise


def run(argv=None):
    """Parse `argv`, run the task and return an exit status."""
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        out = _prefix(args)
        files = TASKS[args.task](args, out)
        _write_all(files)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, io.ConfigError) as exc:
        print(f"ramrcs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ArithmeticError, KeyError) as exc:
        print(f"ramrcs: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"ramrcs: file error: {exc}", file=sys.stderr)
        return EXIT_IO
    for p in files:
        print(p)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
