import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_triangles
from ramrcs.core import DomainError
from ramrcs.geometry import (
    Cylinder,
    Disc,
    Plate,
    Ray,
    Scene,
    Sphere,
    StlParseError,
    Surface,
    TriMesh,
    build_bvh,
    build_bvh_arrays,
    intersect,
    load_stl,
    make_duct,
    make_plate,
    make_sphere,
    reflect,
    write_ascii_stl,
    write_stl,
)

CUBE_FACES = [
    # two triangles per face of the unit cube, outward winding
    ((0, 0, 0), (0, 1, 0), (1, 1, 0)), ((0, 0, 0), (1, 1, 0), (1, 0, 0)),
    ((0, 0, 1), (1, 0, 1), (1, 1, 1)), ((0, 0, 1), (1, 1, 1), (0, 1, 1)),
    ((0, 0, 0), (1, 0, 0), (1, 0, 1)), ((0, 0, 0), (1, 0, 1), (0, 0, 1)),
    ((0, 1, 0), (0, 1, 1), (1, 1, 1)), ((0, 1, 0), (1, 1, 1), (1, 1, 0)),
    ((0, 0, 0), (0, 0, 1), (0, 1, 1)), ((0, 0, 0), (0, 1, 1), (0, 1, 0)),
    ((1, 0, 0), (1, 1, 0), (1, 1, 1)), ((1, 0, 0), (1, 1, 1), (1, 0, 1)),
]


def _ascii_cube(extra=()):
    lines = ["solid cube"]
    for tri in list(CUBE_FACES) + list(extra):
        lines += ["  facet normal 0 0 0", "    outer loop"]
        lines += [f"      vertex {x} {y} {z}" for x, y, z in tri]
        lines += ["    endloop", "  endfacet"]
    lines.append("endsolid cube")
    return "\n".join(lines) + "\n"


def _binary_cube(path):
    with open(path, "wb") as fh:
        fh.write(b"\0" * 80 + struct.pack("<I", len(CUBE_FACES)))
        for tri in CUBE_FACES:
            fh.write(struct.pack("<3f", 0, 0, 0))
            for v in tri:
                fh.write(struct.pack("<3f", *v))
            fh.write(b"\0\0")


def _random_mesh(rng, n):
    centers = rng.uniform(-1, 1, (n, 1, 3))
    corners = centers + rng.normal(scale=0.08, size=(n, 3, 3))
    return TriMesh(corners.reshape(-1, 3), np.arange(3 * n).reshape(n, 3))


def _random_rays(rng, n):
    o = rng.uniform(-2, 2, (n, 3))
    d = rng.normal(size=(n, 3))
    return o, d / np.linalg.norm(d, axis=1, keepdims=True)


# --- STL -----------------------------------------------------------------------

def test_ascii_cube(tmp_path):
    p = tmp_path / "cube.stl"
    p.write_text(_ascii_cube())
    m = load_stl(p)
    assert len(m.vertices) == 8 and len(m.triangles) == 12 and m.n_dropped == 0
    np.testing.assert_allclose(m.areas, 0.5)


def test_binary_matches_ascii(tmp_path):
    a, b = tmp_path / "a.stl", tmp_path / "b.stl"
    a.write_text(_ascii_cube())
    _binary_cube(b)
    assert load_stl(a) == load_stl(b)


def test_degenerate_triangle_dropped(tmp_path):
    p = tmp_path / "cube.stl"
    p.write_text(_ascii_cube(extra=[((0, 0, 0), (1, 1, 1), (2, 2, 2))]))
    m = load_stl(p)
    assert len(m.triangles) == 12 and m.n_dropped == 1


def test_normals_follow_winding(tmp_path):
    p = tmp_path / "cube.stl"
    p.write_text(_ascii_cube())
    m = load_stl(p)
    centroid = m.corners.mean(axis=1) - 0.5
    assert np.all(np.einsum("ij,ij->i", m.normals, centroid) > 0)


def test_binary_round_trip_exact(tmp_path):
    rng = np.random.default_rng(4)
    mesh = _random_mesh(rng, 50)
    mesh = TriMesh(mesh.vertices.astype(np.float32).astype(float), mesh.triangles)
    p1, p2 = tmp_path / "a.stl", tmp_path / "b.stl"
    write_stl(mesh, p1)
    m1 = load_stl(p1)
    write_stl(m1, p2)
    assert load_stl(p2) == m1
    np.testing.assert_array_equal(m1.corners, mesh.corners)


def test_ascii_writer_round_trip(tmp_path):
    p = tmp_path / "cube.stl"
    p.write_text(_ascii_cube())
    m = load_stl(p)
    q = tmp_path / "again.stl"
    write_ascii_stl(m, q)
    assert load_stl(q) == m


def test_scale_flag(tmp_path):
    p = tmp_path / "cube.stl"
    p.write_text(_ascii_cube())
    m = load_stl(p, scale=1e-3)
    assert m.vertices.max() == pytest.approx(1e-3)


def test_malformed_vertex_reports_offset(tmp_path):
    text = _ascii_cube().replace("vertex 1 1 0", "vertex 1 one 0", 1)
    p = tmp_path / "bad.stl"
    p.write_text(text)
    with pytest.raises(StlParseError) as err:
        load_stl(p)
    assert err.value.offset == text.index("      vertex 1 one 0")


def test_truncated_binary(tmp_path):
    p = tmp_path / "t.stl"
    _binary_cube(p)
    data = p.read_bytes()
    p.write_bytes(data[:84 + 50 * 3 + 10])
    with pytest.raises(StlParseError) as err:
        load_stl(p)
    assert err.value.offset == 84 + 150


def test_empty_mesh_rejected(tmp_path):
    p = tmp_path / "empty.stl"
    p.write_text("solid empty\nendsolid empty\n")
    with pytest.raises(DomainError):
        load_stl(p)


def test_trimesh_index_validation():
    with pytest.raises(DomainError):
        TriMesh(np.zeros((3, 3)), [[0, 1, 3]])


# --- primitives and ray queries ---------------------------------------------------------

def test_duct_axial_ray_hits_termination():
    scene = make_duct(0.75, 1.0)
    hit = intersect(scene, Ray((-0.5, 0.0, 0.0), (1.0, 0.0, 0.0)))
    assert hit.surface_id == "termination"
    assert hit.t == pytest.approx(1.5, abs=1e-12)
    assert hit.point[0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(hit.normal, (-1, 0, 0))


def test_duct_wall_hit_from_inside():
    scene = make_duct(0.75, 2.0)
    d = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    hit = intersect(scene, Ray((0.0, 0.0, 0.0), tuple(d)))
    assert hit.surface_id == "wall"
    assert hit.t == pytest.approx(0.375 * math.sqrt(2), rel=1e-12)
    np.testing.assert_allclose(hit.normal, (0, -1, 0), atol=1e-12)


def test_tangent_ray_on_wall_misses():
    scene = make_duct(0.75, 1.0)
    # line touching the wall circle at (y, z) = (r, 0); d.n = 0 at the tangency
    assert intersect(scene, Ray((0.5, 0.375, -1.0), (0.0, 0.0, 1.0))) is None
    hit = intersect(scene, Ray((0.5, 0.375 - 1e-3, -1.0), (0.0, 0.0, 1.0)))
    assert hit is not None and hit.surface_id == "wall"


def test_sphere_and_plate_hits():
    s = make_sphere(0.5)
    hit = intersect(s, Ray((3.0, 0.0, 0.0), (-1.0, 0.0, 0.0)))
    assert hit.t == pytest.approx(2.5, abs=1e-12)
    np.testing.assert_allclose(hit.normal, (1, 0, 0), atol=1e-12)
    p = make_plate(0.3, 0.2)
    hit = intersect(p, Ray((1.0, 0.14, 0.0), (-1.0, 0.0, 0.0)))
    assert hit.t == pytest.approx(1.0)
    assert intersect(p, Ray((1.0, 0.16, 0.0), (-1.0, 0.0, 0.0))) is None
    # plate edge a runs along y, so 0.14 < a/2 but 0.11 > b/2 along z
    assert intersect(p, Ray((1.0, 0.0, 0.11), (-1.0, 0.0, 0.0))) is None


def test_plate_is_two_sided():
    p = make_plate(0.3, 0.3)
    hit = intersect(p, Ray((-1.0, 0.0, 0.0), (1.0, 0.0, 0.0)))
    np.testing.assert_allclose(hit.normal, (-1, 0, 0))


def test_disc_hit_and_clip_range():
    scene = build_bvh(Scene((Surface(Disc(1.0, (0, 0, 2), (0, 0, 1))),)))
    hit = intersect(scene, Ray((0.3, 0.0, 0.0), (0.0, 0.0, 1.0)))
    assert hit.t == pytest.approx(2.0)
    assert intersect(scene, Ray((0.3, 0.0, 0.0), (0.0, 0.0, 1.0), max_t=1.5)) is None
    assert intersect(scene, Ray((0.6, 0.0, 0.0), (0.0, 0.0, 1.0))) is None


def test_ray_validation():
    with pytest.raises(DomainError):
        Ray((0, 0, 0), (1.0, 1.0, 0.0))
    with pytest.raises(DomainError):
        Ray((0, 0, 0), (1.0, 0.0, 0.0), min_t=2.0, max_t=1.0)


def test_shape_validation():
    with pytest.raises(DomainError):
        make_duct(0.75, 0.0)
    with pytest.raises(DomainError):
        Plate(0.0, 1.0)
    with pytest.raises(DomainError):
        Plate(1.0, 1.0, normal=(0, 0, 1), up=(0, 0, 1))
    with pytest.raises(DomainError):
        Sphere(-1.0)
    with pytest.raises(DomainError):
        Cylinder(1.0, -1.0)
    with pytest.raises(DomainError):
        Scene((Surface(Sphere(1.0), id="a"), Surface(Sphere(2.0), id="a")))


def test_duct_default_size():
    scene = make_duct(0.75, 0.5)
    lo, hi = scene.bounds
    lam = 299792458.0 / 10e9
    assert (hi[1] - lo[1]) / lam == pytest.approx(25.0, rel=1e-3)
    assert (hi[0] - lo[0]) / lam == pytest.approx(16.67, rel=1e-3)


@given(
    st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3),
    st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3),
)
def test_reflection_law(d, n):
    d = np.asarray(d) / np.linalg.norm(d)
    n = np.asarray(n) / np.linalg.norm(n)
    r = reflect(d, n)
    assert abs(np.linalg.norm(r) - 1) < 1e-12
    np.testing.assert_allclose(reflect(r, n), d, atol=1e-12)


def test_reflect_45_degrees():
    d = np.array([1.0, -1.0, 0.0]) / math.sqrt(2)
    np.testing.assert_allclose(reflect(d, (0.0, 1.0, 0.0)), [1 / math.sqrt(2), 1 / math.sqrt(2), 0], atol=1e-15)


# --- BVH ---------------------------------------------------------------------------

def test_single_triangle_is_one_leaf():
    mesh = TriMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
    scene = build_bvh(Scene((Surface(mesh),)))
    b = scene.index()
    assert b.n_nodes == 1 and b.n_leaves == 1 and b.depth() == 1


def test_bvh_bounds_enclose_items():
    rng = np.random.default_rng(1)
    mesh = _random_mesh(rng, 300)
    scene = build_bvh(Scene((Surface(mesh),)))
    b, it = scene.index(), scene.items
    for node in range(b.n_nodes):
        if b.node_count[node]:
            idx = b.order[b.node_start[node]:b.node_start[node] + b.node_count[node]]
            assert np.all(it.lo[idx] >= b.node_lo[node]) and np.all(it.hi[idx] <= b.node_hi[node])
    assert sorted(b.order) == list(range(300))


def test_bvh_matches_brute_force_oracle():
    rng = np.random.default_rng(7)
    mesh = _random_mesh(rng, 300)
    scene = build_bvh(Scene((Surface(mesh),)))
    o, d = _random_rays(rng, 2000)
    t, item, n = scene.intersect_many(o, d, tmin=1e-12)
    t_ref, i_ref = brute_force_triangles(o, d, mesh.corners)
    np.testing.assert_array_equal(item, i_ref)
    hit = item >= 0
    assert hit.sum() > 100
    np.testing.assert_allclose(t[hit], t_ref[hit], rtol=1e-9)
    assert np.all(np.einsum("ij,ij->i", n[hit], d[hit]) <= 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bvh_matches_exhaustive_on_mixed_scene(seed):
    rng = np.random.default_rng(seed)
    surfaces = (
        Surface(_random_mesh(rng, 40), id="mesh"),
        Surface(Cylinder(0.8, 1.5, base=(-0.5, 0, 0)), id="cyl"),
        Surface(Disc(0.8, (1.0, 0, 0)), id="disc"),
        Surface(Sphere(0.3, (0, 1.2, 0)), id="ball"),
        Surface(Plate(0.5, 0.4, (0, -1.2, 0), normal=(0, 1, 0)), id="plate"),
    )
    scene = build_bvh(Scene(surfaces))
    o, d = _random_rays(rng, 300)
    t1, i1, n1 = scene.intersect_many(o, d)
    t2, i2, n2 = scene.intersect_many(o, d, exhaustive=True)
    np.testing.assert_array_equal(i1, i2)
    hit = i1 >= 0
    np.testing.assert_allclose(t1[hit], t2[hit], rtol=1e-9)
    np.testing.assert_array_equal(n1, n2)
    assert np.all(np.einsum("ij,ij->i", n1[hit], d[hit]) <= 0)


def test_empty_scene_queries_miss():
    scene = Scene(())
    t, item, _ = scene.intersect_many(np.zeros((2, 3)), np.tile([1.0, 0, 0], (2, 1)))
    assert np.all(item == -1) and np.all(np.isinf(t))
    with pytest.raises(DomainError):
        build_bvh(scene)


def test_build_bvh_arrays_rejects_empty():
    with pytest.raises(ValueError):
        build_bvh_arrays(np.zeros((0, 3)), np.zeros((0, 3)))
