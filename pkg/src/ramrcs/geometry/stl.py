"""STL import/export (ASCII and little-endian binary)."""
from __future__ import annotations

import os
import re
import struct

import numpy as np

from ..core import DomainError
from .shapes import TriMesh

DEDUP_TOL = 1e-9

_BIN_RECORD = np.dtype(
    [("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")]
)
assert _BIN_RECORD.itemsize == 50


class StlParseError(ValueError):
    def __init__(self, msg, offset):
        super().__init__(f"{msg} (byte offset {offset})")
        self.offset = offset


def _looks_binary(data: bytes):
    if len(data) < 84:
        return False
    (n,) = struct.unpack_from("<I", data, 80)
    if len(data) == 84 + 50 * n:
        return True
    return not data.lstrip()[:5].lower() == b"solid"


def _parse_binary(data: bytes):
    if len(data) < 84:
        raise StlParseError("truncated binary header", len(data))
    (n,) = struct.unpack_from("<I", data, 80)
    need = 84 + 50 * n
    if len(data) < need:
        complete = (len(data) - 84) // 50
        raise StlParseError(f"binary STL declares {n} facets but holds {complete}", 84 + 50 * complete)
    rec = np.frombuffer(data, dtype=_BIN_RECORD, count=n, offset=84)
    return rec["v"].astype(float)


_FLOAT = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_VERTEX = re.compile(rb"\s*vertex\s+(" + _FLOAT.encode() + rb")\s+(" + _FLOAT.encode()
                     + rb")\s+(" + _FLOAT.encode() + rb")\s*$")


def _parse_ascii(data: bytes):
    tris = []
    cur = []
    offset = 0
    in_solid = False
    for line in data.splitlines(keepends=True):
        text = line.strip()
        start = offset
        offset += len(line)
        if not text:
            continue
        word = text.split()[0].lower()
        if word == b"solid":
            in_solid = True
        elif word == b"vertex":
            m = _VERTEX.match(line.rstrip(b"\r\n"))
            if not m:
                raise StlParseError("malformed vertex record", start)
            cur.append([float(m.group(i)) for i in (1, 2, 3)])
        elif word == b"endloop":
            if len(cur) != 3:
                raise StlParseError(f"facet loop has {len(cur)} vertices", start)
            tris.append(cur)
            cur = []
        elif word in (b"facet", b"outer", b"endfacet", b"endsolid"):
            if word == b"facet" and cur:
                raise StlParseError("facet opened inside another facet", start)
        else:
            raise StlParseError(f"unexpected token {word.decode(errors='replace')!r}", start)
    if not in_solid:
        raise StlParseError("missing 'solid' header", 0)
    if cur:
        raise StlParseError("unterminated facet", offset)
    return np.array(tris, dtype=float).reshape(-1, 3, 3)


def mesh_from_corners(corners, tol=DEDUP_TOL):
    """Merge vertices closer than `tol` and drop zero-area triangles."""
    corners = np.asarray(corners, dtype=float).reshape(-1, 3, 3)
    flat = corners.reshape(-1, 3)
    keys = np.round(flat / tol).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    # keep vertices in first-seen order so output is stable across formats
    rank = np.argsort(np.argsort(first))
    verts = flat[np.sort(first)]
    tris = rank[inverse.reshape(-1)].reshape(-1, 3)
    c = verts[tris]
    area2 = np.linalg.norm(np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1)
    distinct = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    keep = distinct & (area2 > 0.0)
    tris = tris[keep]
    used = np.unique(tris)
    remap = np.full(len(verts), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriMesh(verts[used], remap[tris], n_dropped=int((~keep).sum()))


def load_stl(path, scale=1.0):
    """Read an ASCII or binary STL file into a cleaned `TriMesh`.

    `scale` converts file units to metres (0.001 for millimetre files).
    """
    with open(path, "rb") as fh:
        data = fh.read()
    corners = _parse_binary(data) if _looks_binary(data) else _parse_ascii(data)
    if len(corners) == 0:
        raise DomainError(f"{os.fspath(path)}: mesh has no facets")
    mesh = mesh_from_corners(corners * scale)
    if len(mesh.triangles) == 0:
        raise DomainError(f"{os.fspath(path)}: every facet is degenerate")
    return mesh


def write_stl(mesh: TriMesh, path, header=b"ramrcs binary stl"):
    rec = np.zeros(len(mesh.triangles), dtype=_BIN_RECORD)
    rec["normal"] = mesh.normals
    rec["v"] = mesh.corners
    with open(path, "wb") as fh:
        fh.write(header[:80].ljust(80, b" "))
        fh.write(struct.pack("<I", len(rec)))
        fh.write(rec.tobytes())


def write_ascii_stl(mesh: TriMesh, path, name="mesh"):
    lines = [f"solid {name}"]
    for n, tri in zip(mesh.normals, mesh.corners):
        lines.append("  facet normal " + " ".join(repr(float(x)) for x in n))
        lines.append("    outer loop")
        for v in tri:
            lines.append("      vertex " + " ".join(repr(float(x)) for x in v))
        lines.append("    endloop")
        lines.append("  endfacet")
    lines.append(f"endsolid {name}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
