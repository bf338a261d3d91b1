"""File formats: INI stack and scene descriptions, result CSVs, plot scripts.

Floats are written with `repr` so a CSV round trip is exact.
"""
from __future__ import annotations

import configparser
import csv
import math
import os
from pathlib import Path

import numpy as np

from .absorber import Backing, Layer, LayerStack, Material, Sheet, SheetImpedance, reference_stack
from .coatings import PEC, Coating, MatchedCoating
from .core import DomainError, Polarization
from .geometry.scene import Scene, Surface, build_bvh
from .geometry.shapes import Cylinder, Disc, Plate, Sphere
from .geometry.stl import load_stl
from .results import RcsResult
from .rivet import RivetLayout

RESULT_COLUMNS = ("freq_hz", "theta_deg", "phi_deg", "pol", "sigma_dbsm", "field_re", "field_im")
MEDIAN_COLUMNS = ("label", "freq_hz", "pol", "phi_lo_deg", "phi_hi_deg", "n_samples", "median_dbsm")


class ConfigError(ValueError):
    """Malformed or inconsistent input file."""


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _read_ini(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: file not found")
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cp


def _float(section, key, default=None):
    raw = section.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"[{section.name}] missing '{key}'")
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a number") from None


def _vector(section, key, default):
    raw = section.get(key)
    if raw is None:
        return default
    try:
        v = tuple(float(x) for x in raw.split(","))
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a vector") from None
    if len(v) != 3:
        raise ConfigError(f"[{section.name}] {key} needs three components")
    return v


# --- layer stacks -----------------------------------------------------------

def parse_stack(path) -> LayerStack:
    """Read a stack file: a [stack] section then [layer.*] sections front to back.

    Sections with type = layer take eps_r, tan_delta, mu_r and d_mm; those
    with type = sheet take r_ohm, l_nh, c_ff (use 'inf' for no capacitor)
    and an optional free flag marking the sheet the fitter adjusts.
    """
    cp = _read_ini(path)
    if "stack" not in cp:
        raise ConfigError(f"{path}: missing [stack] section")
    head = cp["stack"]
    elements = []
    try:
        backing = Backing(head.get("backing", "pec").strip().lower())
        for name in cp.sections():
            if not name.startswith("layer"):
                if name != "stack":
                    raise ConfigError(f"{path}: unknown section [{name}]")
                continue
            sec = cp[name]
            kind = sec.get("type", "layer").strip().lower()
            if kind == "layer":
                mat = Material(_float(sec, "eps_r"), _float(sec, "tan_delta", 0.0), _float(sec, "mu_r", 1.0))
                elements.append(Layer(mat, _float(sec, "d_mm") * 1e-3))
            elif kind == "sheet":
                z = SheetImpedance(_float(sec, "r_ohm"), _float(sec, "l_nh", 0.0) * 1e-9,
                                   _float(sec, "c_ff", math.inf) * 1e-15)
                elements.append(Sheet(z, free=sec.getboolean("free", fallback=False)))
            else:
                raise ConfigError(f"[{name}] unknown layer type {kind!r}")
        return LayerStack(tuple(elements), backing, name=head.get("name", Path(path).stem))
    except (DomainError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None


def format_stack(stack: LayerStack) -> str:
    lines = ["[stack]", f"name = {stack.name}", f"backing = {stack.backing.value}", ""]
    for i, el in enumerate(stack.elements, 1):
        lines.append(f"[layer.{i}]")
        if isinstance(el, Layer):
            m = el.material
            lines += ["type = layer", f"eps_r = {_fmt(m.eps_r)}", f"tan_delta = {_fmt(m.tan_delta)}",
                      f"mu_r = {_fmt(m.mu_r)}", f"d_mm = {_fmt(el.d * 1e3)}"]
        else:
            z = el.impedance
            lines += ["type = sheet", f"r_ohm = {_fmt(z.r_ohm)}", f"l_nh = {_fmt(z.l_h * 1e9)}",
                      f"c_ff = {_fmt(z.c_f * 1e15)}", f"free = {'true' if el.free else 'false'}"]
        lines.append("")
    return "\n".join(lines)


def write_stack(stack: LayerStack, path):
    Path(path).write_text(format_stack(stack), encoding="utf-8")


def resolve_coating(spec: str, stack_path=None, rivet_fraction=0.0, base_dir=None) -> Coating:
    """Coating from a short name.

    'pec' is bare metal, 'ideal' a perfect absorber, 'ras' the fitted reference
    stack (or `stack_path` when given); any other value is a stack file path.
    A non-zero `rivet_fraction` blends in flush metal heads.
    """
    key = spec.strip()
    rivets = RivetLayout(rivet_fraction) if rivet_fraction else None
    low = key.lower()
    if low == "pec":
        return PEC
    if low == "ideal":
        return MatchedCoating(rivets=rivets)
    if low == "ras":
        stack = parse_stack(stack_path) if stack_path else reference_stack()
        return Coating(stack, rivets, "ras")
    p = Path(key)
    if base_dir is not None and not p.is_absolute():
        p = Path(base_dir) / p
    return Coating(parse_stack(p), rivets, p.stem)


# --- scenes -----------------------------------------------------------------

def parse_scene(path) -> Scene:
    """Read a scene file of [surface.<id>] and optional [coating.<name>] sections.

    Each surface names a shape (plate, disc, cylinder, sphere, stl) with its
    dimensions in metres and a coating: pec, ideal, ras, a [coating.*]
    section name, or a stack file path.
    """
    cp = _read_ini(path)
    base = Path(path).parent
    coatings = {}
    for name in cp.sections():
        if name.startswith("coating."):
            sec = cp[name]
            coatings[name.split(".", 1)[1]] = resolve_coating(
                sec.get("stack", "ras"), None, _float(sec, "rivet_fraction", 0.0), base
            )
    surfaces = []
    try:
        for name in cp.sections():
            if name.startswith("coating."):
                continue
            if not name.startswith("surface."):
                raise ConfigError(f"{path}: unknown section [{name}]")
            sec = cp[name]
            sid = name.split(".", 1)[1]
            ckey = sec.get("coating", "pec")
            coating = coatings[ckey] if ckey in coatings else resolve_coating(ckey, base_dir=base)
            surfaces.append(Surface(_shape(sec, base), coating, sid))
        if not surfaces:
            raise ConfigError(f"{path}: no [surface.*] sections")
        return build_bvh(Scene(tuple(surfaces)))
    except DomainError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _shape(sec, base):
    kind = sec.get("shape", "").strip().lower()
    if kind == "plate":
        return Plate(_float(sec, "a_m"), _float(sec, "b_m"), _vector(sec, "center", (0.0, 0.0, 0.0)),
                     _vector(sec, "normal", (1.0, 0.0, 0.0)), _vector(sec, "up", (0.0, 0.0, 1.0)))
    if kind == "disc":
        return Disc(_float(sec, "diameter_m"), _vector(sec, "center", (0.0, 0.0, 0.0)),
                    _vector(sec, "normal", (1.0, 0.0, 0.0)))
    if kind == "cylinder":
        return Cylinder(_float(sec, "diameter_m"), _float(sec, "length_m"), _vector(sec, "base", (0.0, 0.0, 0.0)),
                        _vector(sec, "axis", (1.0, 0.0, 0.0)), sec.getboolean("cap_start", fallback=False),
                        sec.getboolean("cap_end", fallback=False))
    if kind == "sphere":
        return Sphere(_float(sec, "radius_m"), _vector(sec, "center", (0.0, 0.0, 0.0)))
    if kind == "stl":
        p = Path(sec.get("path", ""))
        if not p.is_absolute():
            p = base / p
        if not p.is_file():
            raise ConfigError(f"[{sec.name}] STL file {p} not found")
        mesh = load_stl(p, _float(sec, "scale", 1.0))
        return mesh.transformed(offset=_vector(sec, "offset", (0.0, 0.0, 0.0)))
    raise ConfigError(f"[{sec.name}] unknown shape {kind!r}")


# --- CSV ----------------------------------------------------------------------

def result_rows_text(rows, columns=RESULT_COLUMNS):
    out = [",".join(columns)]
    for r in rows:
        out.append(",".join(_fmt(x) for x in r))
    return "\n".join(out) + "\n"


def format_result_csv(result: RcsResult) -> str:
    return result_rows_text(result.rows())


def format_spectrum_csv(spectra) -> str:
    """Reflection spectra in the shared schema.

    The dB column carries 20 log10 |Gamma| and the field columns carry Gamma.
    """
    rows = []
    for sp in spectra:
        with np.errstate(divide="ignore"):
            db = np.maximum(20.0 * np.log10(np.abs(sp.gamma)), -400.0)
        for f, g, d in zip(sp.freqs, sp.gamma, db):
            rows.append((float(f), sp.theta_deg, 0.0, sp.pol.value, float(d), float(g.real), float(g.imag)))
    return result_rows_text(rows)


def format_median_csv(reports) -> str:
    rows = [r for rep in reports for r in rep.rows()]
    return result_rows_text(rows, MEDIAN_COLUMNS)


def _read_csv(path, columns):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != columns:
            raise ConfigError(f"{path}: expected header {','.join(columns)}")
        return [row for row in reader if row]


def read_result_csv(path) -> RcsResult:
    """Rebuild an `RcsResult` from its CSV. Every grid cell must be present."""
    rows = _read_csv(path, RESULT_COLUMNS)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    try:
        freqs = sorted({float(r[0]) for r in rows})
        phis = sorted({float(r[2]) for r in rows})
        thetas = {float(r[1]) for r in rows}
        pols = []
        for r in rows:
            p = Polarization.parse(r[3])
            if p not in pols:
                pols.append(p)
        if len(thetas) != 1:
            raise ConfigError(f"{path}: mixed elevation angles")
        fi = {f: i for i, f in enumerate(freqs)}
        pj = {p: j for j, p in enumerate(phis)}
        pc = {p: c for c, p in enumerate(pols)}
        field = np.full((len(freqs), len(phis), len(pols)), np.nan + 0j)
        for r in rows:
            field[fi[float(r[0])], pj[float(r[2])], pc[Polarization.parse(r[3])]] = complex(float(r[5]), float(r[6]))
    except (ValueError, IndexError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: malformed row ({exc})") from None
    if np.isnan(field.real).any():
        raise ConfigError(f"{path}: grid is incomplete")
    return RcsResult(np.array(freqs), thetas.pop(), np.array(phis), tuple(pols), field, {"source": str(path)})


def read_median_csv(path):
    rows = _read_csv(path, MEDIAN_COLUMNS)
    return [(r[0], float(r[1]), r[2], float(r[3]), float(r[4]), int(r[5]), float(r[6])) for r in rows]


# --- plot scripts -------------------------------------------------------------

_PLOT_HEAD = '''"""Generated plot script; run with python and matplotlib installed."""
import csv
import os
from collections import defaultdict

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(HERE, name), newline="") as fh:
        return list(csv.DictReader(fh))

'''

_PLOT_BODIES = {
    "rcs": '''
fig, ax = plt.subplots()
for name in FILES:
    series = defaultdict(list)
    for r in load(name):
        series[(r["freq_hz"], r["pol"])].append((float(r["phi_deg"]), float(r["sigma_dbsm"])))
    for (f, pol), pts in sorted(series.items()):
        pts.sort()
        ax.plot([p for p, _ in pts], [s for _, s in pts], label=f"{name} {float(f) / 1e9:g} GHz {pol}")
ax.set_xlabel("phi (deg)")
ax.set_ylabel("RCS (dBsm)")
''',
    "gamma": '''
fig, ax = plt.subplots()
for name in FILES:
    series = defaultdict(list)
    for r in load(name):
        series[(r["theta_deg"], r["pol"])].append((float(r["freq_hz"]) / 1e9, float(r["sigma_dbsm"])))
    for (t, pol), pts in sorted(series.items()):
        ax.plot([f for f, _ in pts], [g for _, g in pts], label=f"theta {t} {pol}")
ax.axhline(-10.0, color="k", lw=0.5, ls="--")
ax.set_xlabel("frequency (GHz)")
ax.set_ylabel("reflection coefficient (dB)")
''',
    "median": '''
fig, ax = plt.subplots()
for name in FILES:
    series = defaultdict(list)
    for r in load(name):
        series[(r["freq_hz"], r["pol"])].append((r["label"], float(r["median_dbsm"])))
    for (f, pol), pts in sorted(series.items()):
        ax.plot([lab for lab, _ in pts], [m for _, m in pts], "o-", label=f"{float(f) / 1e9:g} GHz {pol}")
ax.set_xlabel("case")
ax.set_ylabel("median RCS (dBsm)")
''',
}

_PLOT_TAIL = '''ax.grid(True)
ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(os.path.join(HERE, OUT))
'''


def plot_script(kind, csv_names, image_name):
    """Source of a matplotlib script plotting `csv_names` (siblings of the script)."""
    if kind not in _PLOT_BODIES:
        raise ValueError(f"unknown plot kind {kind!r}")
    names = [os.path.basename(n) for n in csv_names]
    return (_PLOT_HEAD + f"FILES = {names!r}\nOUT = {image_name!r}\n" + _PLOT_BODIES[kind] + _PLOT_TAIL)
