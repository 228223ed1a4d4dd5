import json
import struct

import numpy as np
import pytest

from bankembed import glbmin
from bankembed.errors import GlbReadError

from _glb import build_glb, cube, wrap_glb


class TestLoadMesh:
    def test_cube_round_trip(self, tmp_path):
        positions, triangles = cube(2.0, center=(1.0, -2.0, 3.0))
        path = tmp_path / "cube.glb"
        path.write_bytes(build_glb([(positions, triangles)]))
        pos, tris = glbmin.load_mesh(path)
        assert pos.dtype == np.float64
        assert pos.shape == (8, 3)
        np.testing.assert_array_equal(pos, np.asarray(positions, dtype="<f4").astype(np.float64))
        np.testing.assert_array_equal(tris, np.asarray(triangles))

    @pytest.mark.parametrize("index_dtype", ["<u1", "<u2", "<u4"])
    def test_index_component_types(self, tmp_path, index_dtype):
        positions, triangles = cube(1.0)
        path = tmp_path / "c.glb"
        path.write_bytes(build_glb([(positions, triangles)], index_dtype=index_dtype))
        _, tris = glbmin.load_mesh(path)
        assert tris.dtype == np.int64
        np.testing.assert_array_equal(tris, np.asarray(triangles))

    def test_non_indexed_primitive(self, tmp_path):
        verts = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
        path = tmp_path / "tri.glb"
        path.write_bytes(build_glb([(verts, None)]))
        pos, tris = glbmin.load_mesh(path)
        assert pos.shape == (3, 3)
        np.testing.assert_array_equal(tris, [[0, 1, 2]])

    def test_multiple_primitives_share_vertex_space(self, tmp_path):
        a = ([(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)], [(0, 1, 2)])
        b = ([(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (0.0, 1.0, 1.0)], [(0, 1, 2)])
        path = tmp_path / "two.glb"
        path.write_bytes(build_glb([a, b]))
        pos, tris = glbmin.load_mesh(path)
        assert pos.shape == (6, 3)
        np.testing.assert_array_equal(tris, [[0, 1, 2], [3, 4, 5]])

    def test_interleaved_positions(self, tmp_path):
        # position + pad interleaved at a 16-byte stride
        verts = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0)], dtype="<f4")
        interleaved = np.zeros((3, 4), dtype="<f4")
        interleaved[:, :3] = verts
        doc = {
            "asset": {"version": "2.0"},
            "buffers": [{"byteLength": interleaved.nbytes}],
            "bufferViews": [{"buffer": 0, "byteOffset": 0,
                             "byteLength": interleaved.nbytes, "byteStride": 16}],
            "accessors": [{"bufferView": 0, "componentType": 5126, "count": 3, "type": "VEC3"}],
            "meshes": [{"primitives": [{"attributes": {"POSITION": 0}, "mode": 4}]}],
        }
        path = tmp_path / "strided.glb"
        path.write_bytes(wrap_glb(json.dumps(doc).encode(), interleaved.tobytes()))
        pos, tris = glbmin.load_mesh(path)
        np.testing.assert_array_equal(pos, verts.astype(np.float64))
        np.testing.assert_array_equal(tris, [[0, 1, 2]])


class TestRejects:
    def test_missing_file(self, tmp_path):
        with pytest.raises(GlbReadError, match="cannot read"):
            glbmin.load_mesh(tmp_path / "nope.glb")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.glb"
        path.write_bytes(b"not a glb at all, just text padding here")
        with pytest.raises(GlbReadError, match="magic"):
            glbmin.load_mesh(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "short.glb"
        path.write_bytes(b"glTF")
        with pytest.raises(GlbReadError):
            glbmin.load_mesh(path)

    def test_wrong_container_version(self, tmp_path):
        blob = bytearray(build_glb([cube(1.0)]))
        struct.pack_into("<I", blob, 4, 1)
        path = tmp_path / "v1.glb"
        path.write_bytes(bytes(blob))
        with pytest.raises(GlbReadError, match="version"):
            glbmin.load_mesh(path)

    def test_json_chunk_garbage(self, tmp_path):
        path = tmp_path / "garbage.glb"
        path.write_bytes(wrap_glb(b"{ not json", b""))
        with pytest.raises(GlbReadError, match="JSON"):
            glbmin.load_mesh(path)

    def test_no_triangle_primitives(self, tmp_path):
        verts = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
        path = tmp_path / "points.glb"
        path.write_bytes(build_glb([(verts, None)], mode=0))
        with pytest.raises(GlbReadError, match="no triangle primitives"):
            glbmin.load_mesh(path)

    def test_missing_position_attribute(self, tmp_path):
        doc = {
            "asset": {"version": "2.0"},
            "buffers": [{"byteLength": 0}],
            "meshes": [{"primitives": [{"attributes": {}, "mode": 4}]}],
        }
        path = tmp_path / "nopos.glb"
        path.write_bytes(wrap_glb(json.dumps(doc).encode(), b""))
        with pytest.raises(GlbReadError, match="POSITION"):
            glbmin.load_mesh(path)

    def test_index_out_of_range(self, tmp_path):
        verts = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
        path = tmp_path / "oob.glb"
        path.write_bytes(build_glb([(verts, [(0, 1, 9)])]))
        with pytest.raises(GlbReadError, match="out of range"):
            glbmin.load_mesh(path)

    def test_index_count_not_triples(self, tmp_path):
        verts = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0)], dtype="<f4")
        idx = np.array([0, 1], dtype="<u2")
        doc = {
            "asset": {"version": "2.0"},
            "buffers": [{"byteLength": verts.nbytes + idx.nbytes}],
            "bufferViews": [
                {"buffer": 0, "byteOffset": 0, "byteLength": verts.nbytes},
                {"buffer": 0, "byteOffset": verts.nbytes, "byteLength": idx.nbytes},
            ],
            "accessors": [
                {"bufferView": 0, "componentType": 5126, "count": 3, "type": "VEC3"},
                {"bufferView": 1, "componentType": 5123, "count": 2, "type": "SCALAR"},
            ],
            "meshes": [{"primitives": [{"attributes": {"POSITION": 0}, "indices": 1, "mode": 4}]}],
        }
        path = tmp_path / "pair.glb"
        path.write_bytes(wrap_glb(json.dumps(doc).encode(), verts.tobytes() + idx.tobytes()))
        with pytest.raises(GlbReadError, match="multiple of 3"):
            glbmin.load_mesh(path)

    def test_accessor_past_binary_end(self, tmp_path):
        verts = np.array([(0, 0, 0), (1, 0, 0), (0, 1, 0)], dtype="<f4")
        doc = {
            "asset": {"version": "2.0"},
            "buffers": [{"byteLength": verts.nbytes}],
            "bufferViews": [{"buffer": 0, "byteOffset": 0, "byteLength": verts.nbytes}],
            "accessors": [{"bufferView": 0, "componentType": 5126, "count": 99, "type": "VEC3"}],
            "meshes": [{"primitives": [{"attributes": {"POSITION": 0}, "mode": 4}]}],
        }
        path = tmp_path / "past.glb"
        path.write_bytes(wrap_glb(json.dumps(doc).encode(), verts.tobytes()))
        with pytest.raises(GlbReadError, match="past"):
            glbmin.load_mesh(path)
