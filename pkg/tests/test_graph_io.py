import numpy as np
import pytest

from graph_io import (
    DatasetError,
    canonical_edges,
    dataset_from_arrays,
    dataset_stats,
    load_dataset,
    make_sbm,
    read_labels,
    save_dataset,
)


def write_bundle(root, features, edges, labels=None, meta=None):
    root.mkdir(parents=True, exist_ok=True)
    (root / "features.csv").write_text(features)
    (root / "edges.tsv").write_text(edges)
    if labels is not None:
        (root / "labels.txt").write_text(labels)
    if meta is not None:
        (root / "meta.json").write_text(meta)
    return root


class TestCanonicalEdges:
    def test_orders_and_dedups(self):
        edges, loops, dups = canonical_edges(np.array([[2, 0], [0, 2], [1, 0], [3, 3]]))
        np.testing.assert_array_equal(edges, [[0, 1], [0, 2]])
        assert loops == 1
        assert dups == 1


class TestLoadDataset:
    def test_loads_bundle(self, tmp_path):
        root = write_bundle(tmp_path / "g", "1,0\n0,1\n1,1\n", "0\t1\n1\t2\n", "0\n1\n1\n")
        d = load_dataset(root)
        assert (d.num_nodes, d.num_features, d.num_edges, d.num_classes) == (3, 2, 2, 2)
        assert d.name == "g"
        np.testing.assert_array_equal(d.labels, [0, 1, 1])

    def test_self_loop_dropped_and_counted(self, tmp_path):
        root = write_bundle(tmp_path / "g", "1\n2\n3\n4\n5\n6\n", "0\t1\n5\t5\n", "0\n0\n0\n1\n1\n1\n")
        d = load_dataset(root)
        assert d.dropped_self_loops == 1
        np.testing.assert_array_equal(d.edges, [[0, 1]])

    def test_reversed_duplicate_dropped(self, tmp_path):
        root = write_bundle(tmp_path / "g", "1\n2\n", "0\t1\n1\t0\n", "0\n1\n")
        d = load_dataset(root)
        assert d.num_edges == 1
        assert d.dropped_duplicates == 1

    def test_bad_feature_cell_reports_position(self, tmp_path):
        root = write_bundle(tmp_path / "g", "1,0\n0,abc\n", "0\t1\n", "0\n1\n")
        with pytest.raises(DatasetError) as err:
            load_dataset(root)
        assert (err.value.row, err.value.col) == (2, 2)

    def test_edge_out_of_range(self, tmp_path):
        root = write_bundle(tmp_path / "g", "1\n2\n", "0\t7\n", "0\n1\n")
        with pytest.raises(DatasetError) as err:
            load_dataset(root)
        assert err.value.row == 1

    def test_label_count_mismatch(self, tmp_path):
        root = write_bundle(tmp_path / "g", "1\n2\n3\n", "0\t1\n", "0\n1\n")
        with pytest.raises(DatasetError):
            load_dataset(root)

    def test_missing_features(self, tmp_path):
        (tmp_path / "g").mkdir()
        (tmp_path / "g" / "edges.tsv").write_text("")
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "g")

    def test_classes_from_meta_without_labels(self, tmp_path):
        root = write_bundle(tmp_path / "g", "1\n2\n", "", meta='{"num_classes": 2, "name": "tiny"}')
        d = load_dataset(root)
        assert d.labels is None
        assert d.num_classes == 2
        assert d.name == "tiny"
        assert d.num_edges == 0

    def test_unknown_class_count(self, tmp_path):
        root = write_bundle(tmp_path / "g", "1\n2\n", "0\t1\n")
        with pytest.raises(DatasetError):
            load_dataset(root)

    def test_arrays_are_read_only(self, tmp_path):
        d = load_dataset(write_bundle(tmp_path / "g", "1\n2\n", "0\t1\n", "0\n1\n"))
        with pytest.raises(ValueError):
            d.features[0, 0] = 5.0


class TestRoundTrip:
    def test_save_then_load_is_exact(self, tmp_path, sbm_dataset):
        once = load_dataset(save_dataset(sbm_dataset, tmp_path / "a"))
        twice = load_dataset(save_dataset(once, tmp_path / "b"))
        for d in (once, twice):
            np.testing.assert_array_equal(d.features, sbm_dataset.features)
            np.testing.assert_array_equal(d.edges, sbm_dataset.edges)
            np.testing.assert_array_equal(d.labels, sbm_dataset.labels)
            assert d.num_classes == sbm_dataset.num_classes

    def test_long_decimal_text_reads_exactly(self, tmp_path):
        root = write_bundle(tmp_path / "g", "0.29999999999999999,1.0000000000000002\n0.1,2.5\n", "0\t1\n", "0\n1\n")
        np.testing.assert_array_equal(load_dataset(root).features, [[0.3, 1.0000000000000002], [0.1, 2.5]])

    def test_reload_is_a_fixed_point(self, tmp_path):
        rng = np.random.default_rng(7)
        d = dataset_from_arrays(rng.normal(size=(40, 12)) * 1e3, np.eye(40, k=1) + np.eye(40, k=-1),
                                labels=np.arange(40) % 2, name="noisy")
        once = load_dataset(save_dataset(d, tmp_path / "a"))
        again = load_dataset(save_dataset(once, tmp_path / "b"))
        np.testing.assert_array_equal(once.features, d.features)
        np.testing.assert_array_equal(again.features, once.features)
        assert (tmp_path / "a" / "features.csv").read_text() == (tmp_path / "b" / "features.csv").read_text()


class TestReadLabels:
    def test_reads_integers(self, tmp_path):
        path = tmp_path / "pred.txt"
        path.write_text("3\n0\n1\n")
        np.testing.assert_array_equal(read_labels(path), [3, 0, 1])

    def test_rejects_fraction(self, tmp_path):
        path = tmp_path / "pred.txt"
        path.write_text("1\n0.5\n")
        with pytest.raises(DatasetError):
            read_labels(path)


class TestStats:
    def test_triangle(self, triangle_graph):
        stats = dataset_stats(triangle_graph)
        assert stats.edges == 3
        assert stats.type == "Graph"
        assert stats.mean_degree == pytest.approx(2.0)

    def test_empty_edges(self):
        d = dataset_from_arrays(np.ones((3, 2)), np.zeros((3, 3)), np.array([0, 1, 1]))
        stats = dataset_stats(d)
        assert stats.edges == 0
        assert stats.isolated_nodes == 3
        assert stats.class_histogram == [1, 2]


class TestFromArrays:
    def test_symmetric_adjacency_not_counted_as_duplicates(self):
        adj = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 1]])
        d = dataset_from_arrays(np.eye(3), adj, np.array([0, 0, 1]))
        np.testing.assert_array_equal(d.edges, [[0, 1], [1, 2]])
        assert d.dropped_self_loops == 1
        assert d.dropped_duplicates == 0


class TestMakeSbm:
    def test_deterministic_extremes(self):
        d = make_sbm(seed=0, sizes=(3, 3), p_in=1.0, p_out=0.0, feature_dim=4, feature_noise=0.0)
        np.testing.assert_array_equal(d.labels, [0, 0, 0, 1, 1, 1])
        np.testing.assert_array_equal(d.edges, [[0, 1], [0, 2], [1, 2], [3, 4], [3, 5], [4, 5]])

    def test_no_edges(self):
        d = make_sbm(seed=1, sizes=(5, 5), p_in=0.0, p_out=0.0, feature_dim=2, feature_noise=0.1)
        assert d.num_edges == 0

    def test_seed_reproducible(self):
        a = make_sbm(seed=4, sizes=(10, 10), p_in=0.5, p_out=0.1, feature_dim=3, feature_noise=0.2)
        b = make_sbm(seed=4, sizes=(10, 10), p_in=0.5, p_out=0.1, feature_dim=3, feature_noise=0.2)
        np.testing.assert_array_equal(a.edges, b.edges)
        np.testing.assert_array_equal(a.features, b.features)

    def test_block_indicator_features(self):
        d = make_sbm(seed=0, sizes=(2, 2), p_in=1.0, p_out=0.0, feature_dim=4, feature_noise=0.0)
        np.testing.assert_array_equal(d.features[0], [1, 0, 1, 0])
        np.testing.assert_array_equal(d.features[3], [0, 1, 0, 1])

    def test_invalid_probability(self):
        with pytest.raises(DatasetError):
            make_sbm(seed=0, sizes=(3, 3), p_in=1.5, p_out=0.0, feature_dim=2, feature_noise=0.0)
