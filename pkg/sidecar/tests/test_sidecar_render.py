import itertools

import numpy as np
import pytest

from bankembed import RenderSpec, render_mesh_views, render_views
from bankembed.errors import RenderFailure
from bankembed.render import AMBIENT, DIFFUSE, LIGHT_DIRECTION, VIEW_NAMES

from _glb import build_glb, cube, write_glb

BG = 128  # rint(0.5 * 255)


def shade_of(normal) -> int:
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    return int(np.rint((AMBIENT + DIFFUSE * (n @ LIGHT_DIRECTION + 1.0) / 2.0) * 255.0))


def to_pixel(value, half, size):
    """World offset from the frame center -> pixel index along screen x."""
    return int((value / half * 0.5 + 0.5) * size)


class TestSpec:
    def test_defaults(self):
        spec = RenderSpec()
        assert spec.views == VIEW_NAMES
        assert len(spec.views) == 4
        assert spec.image_size == 224
        assert spec.background == 0.5
        assert spec.margin == 0.10

    def test_view_set_is_fixed(self):
        with pytest.raises(ValueError, match="fixed"):
            RenderSpec(views=("+X", "-X"))
        with pytest.raises(ValueError, match="fixed"):
            RenderSpec(views=("+X", "-X", "+Z", "-Z"))

    def test_tiny_image_rejected(self):
        with pytest.raises(ValueError, match="small"):
            RenderSpec(image_size=4)

    def test_background_range(self):
        with pytest.raises(ValueError, match="background"):
            RenderSpec(background=1.5)


@pytest.fixture(scope="module")
def images():
    positions, triangles = cube(1.0)
    return render_mesh_views(positions, triangles, RenderSpec())


class TestCubeViews:
    def test_shapes_and_dtype(self, images):
        assert len(images) == 4
        for img in images:
            assert img.shape == (224, 224, 3)
            assert img.dtype == np.uint8
            # gray renders: all channels equal
            assert np.array_equal(img[:, :, 0], img[:, :, 1])
            assert np.array_equal(img[:, :, 0], img[:, :, 2])

    def test_each_view_is_one_lit_face(self, images):
        normals = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]
        for img, n in zip(images, normals):
            assert set(np.unique(img)) == {BG, shade_of(n)}

    def test_views_pairwise_distinct(self, images):
        for a, b in itertools.combinations(images, 2):
            assert not np.array_equal(a, b)

    def test_rerender_is_pixel_identical(self, images):
        positions, triangles = cube(1.0)
        again = render_mesh_views(positions, triangles, RenderSpec())
        for a, b in zip(images, again):
            assert np.array_equal(a, b)

    def test_margin_frames_bbox(self, images):
        # half-frame = 0.55 for a unit cube; face edges at +-0.5 project to
        # pixel centers 10..213 at 224 px
        img = images[0][:, :, 0]
        cols = np.where((img != BG).any(axis=0))[0]
        rows = np.where((img != BG).any(axis=1))[0]
        assert cols.min() == rows.min() == 10
        assert cols.max() == rows.max() == 213

    def test_translation_invariance(self, images):
        # cameras aim at the bbox center, so a displaced cube renders the same
        positions, triangles = cube(1.0, center=(5.0, 7.0, 9.0))
        moved = render_mesh_views(positions, triangles, RenderSpec())
        for a, b in zip(images, moved):
            assert np.array_equal(a, b)

    def test_glb_path_route_matches_mesh_route(self, images, tmp_path):
        positions, triangles = cube(1.0)
        path = write_glb(tmp_path / "cube.glb", positions, triangles)
        via_file = render_views(path, RenderSpec())
        for a, b in zip(images, via_file):
            assert np.array_equal(a, b)


class TestDepth:
    @staticmethod
    def _quads():
        # small front quad (normal +x) over a big back quad (normal -x)
        front = [
            (0.2, -0.5, -0.5), (0.2, 0.5, -0.5), (0.2, 0.5, 0.5), (0.2, -0.5, 0.5),
        ]
        back = [
            (-0.3, -1.0, -1.0), (-0.3, 1.0, -1.0), (-0.3, 1.0, 1.0), (-0.3, -1.0, 1.0),
        ]
        positions = front + back
        triangles = [(0, 1, 2), (0, 2, 3), (4, 6, 5), (4, 7, 6)]
        return positions, triangles

    def test_nearer_surface_wins(self):
        positions, triangles = self._quads()
        spec = RenderSpec()
        img = render_mesh_views(positions, triangles, spec)[0][:, :, 0]  # +X view
        half = 1.0 * (1 + spec.margin)  # bbox is 2 wide in y and z
        center = 112
        inside_back_only = to_pixel(0.75, half, spec.image_size)
        outside = to_pixel(1.05, half, spec.image_size)
        assert img[center, center] == shade_of((1, 0, 0))
        assert img[center, inside_back_only] == shade_of((-1, 0, 0))
        assert img[center, outside] == BG

    def test_depth_flips_with_the_view(self):
        positions, triangles = self._quads()
        img = render_mesh_views(positions, triangles, RenderSpec())[1][:, :, 0]  # -X view
        # from -X the big quad is nearer and hides the small one entirely
        assert set(np.unique(img)) == {BG, shade_of((-1, 0, 0))}

    def test_triangle_order_does_not_matter(self):
        positions, triangles = self._quads()
        forward = render_mesh_views(positions, triangles, RenderSpec())
        backward = render_mesh_views(positions, list(reversed(triangles)), RenderSpec())
        for a, b in zip(forward, backward):
            assert np.array_equal(a, b)


class TestForwardAxis:
    @staticmethod
    def _nosed_cube():
        """Body cube with a pyramid nose sticking out of the +x face."""
        positions, triangles = cube(1.0)
        base = len(positions)
        positions = list(positions) + [
            (0.5, -0.25, -0.25), (0.5, 0.25, -0.25),
            (0.5, 0.25, 0.25), (0.5, -0.25, 0.25),
            (1.0, 0.0, 0.0),
        ]
        apex = base + 4
        triangles = list(triangles) + [
            (base + 0, base + 1, apex), (base + 1, base + 2, apex),
            (base + 2, base + 3, apex), (base + 3, base + 0, apex),
        ]
        return positions, triangles

    def test_front_feature_shows_only_in_plus_x_view(self):
        positions, triangles = self._nosed_cube()
        images = render_mesh_views(positions, triangles, RenderSpec())
        center = slice(102, 122)
        front_patch = images[0][center, center, 0]
        back_patch = images[1][center, center, 0]
        # +X looks straight at the pyramid: several slant shades visible
        assert len(np.unique(front_patch)) >= 3
        # -X sees only the flat body face which hides the nose completely
        assert set(np.unique(back_patch)) == {shade_of((-1, 0, 0))}

    def test_side_views_mirror_the_nose(self):
        body, body_tris = cube(1.0)
        nose, nose_tris = cube(0.5, center=(0.75, 0.0, 0.0))
        positions = list(body) + list(nose)
        triangles = list(body_tris) + [(a + 8, b + 8, c + 8) for a, b, c in nose_tris]
        images = render_mesh_views(positions, triangles, RenderSpec())
        py, ny = images[2][:, :, 0], images[3][:, :, 0]
        left = (slice(None), slice(0, 112))
        right = (slice(None), slice(112, None))
        # +Y view maps +x to screen left, -Y to screen right
        assert (py[left] != BG).sum() < (py[right] != BG).sum()
        assert (ny[left] != BG).sum() > (ny[right] != BG).sum()


class TestFailures:
    def test_empty_triangle_list(self):
        with pytest.raises(RenderFailure, match="empty scene"):
            render_mesh_views(np.zeros((3, 3)), np.zeros((0, 3), dtype=int), RenderSpec())

    def test_empty_scene_glb(self, tmp_path):
        verts = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
        path = tmp_path / "points.glb"
        path.write_bytes(build_glb([(verts, None)], mode=0))
        with pytest.raises(RenderFailure) as err:
            render_views(path, RenderSpec(), asset_id="lonely")
        assert err.value.asset_id == "lonely"

    def test_unreadable_glb(self, tmp_path):
        path = tmp_path / "junk.glb"
        path.write_bytes(b"this is not a mesh")
        with pytest.raises(RenderFailure) as err:
            render_views(path, RenderSpec(), asset_id="junk")
        assert err.value.asset_id == "junk"
        assert "magic" in err.value.reason

    def test_degenerate_triangles_skipped(self):
        # collinear points span a bbox but rasterize nothing
        positions = [(0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (2.0, 2.0, 2.0)]
        images = render_mesh_views(positions, [(0, 1, 2)], RenderSpec())
        for img in images:
            assert set(np.unique(img)) == {BG}
