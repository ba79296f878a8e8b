import dataclasses
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from narrkit.errors import (
    DimensionMismatchError,
    UnknownCharacterError,
    ZeroVectorError,
)
from narrkit.sgns import TrainConfig, train_static
from narrkit.temporal import InitScheme, train_temporal
from narrkit.trajectory import (
    character_vector,
    cosine_distance,
    distance_series,
    pca_project,
    write_distance_csv,
    write_projection_csv,
    write_projection_svg,
    write_series_svg,
)


class TestCosineDistance:
    def test_identical_is_zero(self):
        v = np.array([1.0, 2.0, 3.0])
        assert cosine_distance(v, v) == 0.0

    def test_orthogonal_is_one(self):
        assert cosine_distance([1, 0], [0, 2]) == pytest.approx(1.0, abs=1e-15)

    def test_opposite_is_two(self):
        assert cosine_distance([1.0, 1.0], [-2.0, -2.0]) == pytest.approx(2.0, abs=1e-15)

    def test_scale_invariant(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            u, v = rng.normal(0, 1, (2, 6))
            assert cosine_distance(u, v) == pytest.approx(
                cosine_distance(3.5 * u, 0.2 * v), abs=1e-12
            )

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVectorError):
            cosine_distance([0.0, 0.0], [1.0, 0.0])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cosine_distance([1.0, 0.0], [1.0, 0.0, 0.0])

    def test_range(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            u, v = rng.normal(0, 1, (2, 4))
            assert 0.0 <= cosine_distance(u, v) <= 2.0


def _temporal_fixture():
    cfg = TrainConfig(
        dim=8, window=2, negatives=2, epochs=2,
        lr_start=0.05, lr_end=0.001, min_count=1,
    )
    tokens = ["ada", "bram", "f"] * 30 + ["ada", "cora", "g"] * 30
    vocab, M = train_static(tokens, cfg)
    slice_cfg = dataclasses.replace(cfg, freeze_context=True)
    T = train_temporal([tokens[:90], tokens[90:]], M, vocab, InitScheme.STATIC, slice_cfg)
    return vocab, T


class TestCharacterVector:
    def test_lookup(self):
        vocab, T = _temporal_fixture()
        v = character_vector("ada", T.slices[0], vocab)
        np.testing.assert_array_equal(v, T.slices[0][vocab.index["ada"]])

    def test_accepts_cluster_like(self):
        vocab, T = _temporal_fixture()

        class C:
            canonical = "ada"

        v = character_vector(C(), T.slices[0], vocab)
        np.testing.assert_array_equal(v, T.slices[0][vocab.index["ada"]])

    def test_unknown_character(self):
        vocab, T = _temporal_fixture()
        with pytest.raises(UnknownCharacterError):
            character_vector("nobody", T.slices[0], vocab)


class TestDistanceSeries:
    def test_shape_and_values(self):
        vocab, T = _temporal_fixture()
        series = distance_series("ada", ["bram", "cora"], T)
        assert series.shape == (2, 2)
        want = cosine_distance(
            T.slices[1][vocab.index["ada"]], T.slices[1][vocab.index["cora"]]
        )
        assert series[1, 1] == pytest.approx(want, abs=1e-15)

    def test_empty_others(self):
        _, T = _temporal_fixture()
        with pytest.raises(ValueError):
            distance_series("ada", [], T)


class TestPcaProject:
    def test_plane_recovered_exactly(self):
        # Points in a 2-D subspace of R^9: projection must preserve
        # centred geometry to numerical precision.
        rng = np.random.default_rng(42)
        Q, _ = np.linalg.qr(rng.normal(0, 1, (9, 2)))
        Z = rng.normal(0, 2, (12, 2))
        X = Z @ Q.T + rng.normal(0, 1, 9)
        proj = pca_project(X)
        Xc = X - X.mean(axis=0)
        recon = proj.coords @ proj.components
        np.testing.assert_allclose(recon, Xc, atol=1e-9)

    def test_components_orthonormal(self):
        rng = np.random.default_rng(7)
        X = rng.normal(0, 1, (20, 6))
        proj = pca_project(X)
        np.testing.assert_allclose(
            proj.components @ proj.components.T, np.eye(2), atol=1e-8
        )

    def test_first_component_dominates(self):
        rng = np.random.default_rng(3)
        X = np.column_stack([rng.normal(0, 10, 40), rng.normal(0, 1, 40), rng.normal(0, 0.1, 40)])
        proj = pca_project(X)
        assert proj.coords[:, 0].var() > proj.coords[:, 1].var()

    def test_sign_convention(self):
        rng = np.random.default_rng(11)
        X = rng.normal(0, 1, (15, 5))
        proj = pca_project(X)
        for v in proj.components:
            assert v[int(np.argmax(np.abs(v)))] > 0

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        X = rng.normal(0, 1, (10, 4))
        p1, p2 = pca_project(X), pca_project(X.copy())
        assert p1.coords.tobytes() == p2.coords.tobytes()

    def test_rank_one_input(self):
        # Collinear points: second direction comes from the deterministic
        # completion and the frame stays orthonormal.
        t = np.linspace(-1, 1, 7)[:, None]
        X = t @ np.array([[3.0, 4.0, 0.0]])
        proj = pca_project(X)
        np.testing.assert_allclose(
            proj.components @ proj.components.T, np.eye(2), atol=1e-9
        )
        np.testing.assert_allclose(proj.coords[:, 1], 0.0, atol=1e-9)

    def test_rank_zero_input(self):
        X = np.ones((5, 3))
        proj = pca_project(X)
        np.testing.assert_allclose(proj.coords, 0.0, atol=1e-12)
        np.testing.assert_allclose(
            proj.components @ proj.components.T, np.eye(2), atol=1e-12
        )

    def test_too_few_vectors(self):
        with pytest.raises(ValueError):
            pca_project(np.zeros((2, 4)))

    def test_dim_one_rejected(self):
        with pytest.raises(DimensionMismatchError):
            pca_project(np.zeros((5, 1)))


class TestCsvEmitters:
    def test_distance_csv_exact_bytes(self, tmp_path):
        series = np.array([[0.25, 0.5], [1.0, 0.1234567]])
        path = tmp_path / "d.csv"
        write_distance_csv(path, ["ada", "bram"], series)
        want = (
            "slice,character,distance\n"
            "0,ada,0.250000\n"
            "1,ada,0.500000\n"
            "0,bram,1.000000\n"
            "1,bram,0.123457\n"
        )
        assert path.read_bytes().decode() == want

    def test_projection_csv_exact_bytes(self, tmp_path):
        coords = np.array([[1.5, -2.0], [0.0, 0.125]])
        path = tmp_path / "p.csv"
        write_projection_csv(path, [("ada", 0), ("ada", 1)], coords)
        want = (
            "slice,character,x,y\n"
            "0,ada,1.500000,-2.000000\n"
            "1,ada,0.000000,0.125000\n"
        )
        assert path.read_bytes().decode() == want

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_distance_csv(tmp_path / "d.csv", [], np.zeros((0, 2)))

    def test_row_mismatch(self, tmp_path):
        with pytest.raises(DimensionMismatchError):
            write_distance_csv(tmp_path / "d.csv", ["a"], np.zeros((2, 2)))


class TestSvgEmitters:
    def test_series_svg_valid_xml(self, tmp_path):
        series = np.array([[0.2, 0.4, 0.6], [0.9, 0.8, 0.7]])
        path = tmp_path / "d.svg"
        write_series_svg(path, ["ada", "bram"], series)
        root = ET.fromstring(path.read_text())
        assert root.tag.endswith("svg")
        assert root.get("viewBox") == "0 0 800 400"
        polylines = [e for e in root.iter() if e.tag.endswith("polyline")]
        assert len(polylines) == 2

    def test_series_svg_deterministic(self, tmp_path):
        series = np.array([[0.2, 0.4]])
        p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
        write_series_svg(p1, ["ada"], series)
        write_series_svg(p2, ["ada"], series)
        assert p1.read_bytes() == p2.read_bytes()

    def test_projection_svg_valid_xml(self, tmp_path):
        coords = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5], [3.0, 0.25]])
        labels = [("ada", 0), ("ada", 1), ("bram", 0), ("bram", 1)]
        path = tmp_path / "p.svg"
        write_projection_svg(path, labels, coords)
        root = ET.fromstring(path.read_text())
        polylines = [e for e in root.iter() if e.tag.endswith("polyline")]
        circles = [e for e in root.iter() if e.tag.endswith("circle")]
        assert len(polylines) == 2
        assert len(circles) == 4

    def test_flat_series_does_not_crash(self, tmp_path):
        write_series_svg(tmp_path / "f.svg", ["ada"], np.array([[0.5, 0.5]]))
        assert (tmp_path / "f.svg").exists()
