import json

import pytest

from report_store import (
    ReportError,
    aggregate_table,
    curve_frame,
    get_report_stats,
    list_reports,
    list_tables,
    load_report,
    load_table,
    seed_table,
)


def fake_report(name="cora", label="Ours", accs=(0.7, 0.8)):
    runs = []
    for seed, acc in enumerate(accs):
        runs.append({
            "seed": seed,
            "metrics": {"acc": acc, "nmi": 0.5, "ari": 0.4, "f1": 0.6},
            "final_inertia": 1.5,
            "predictions": [0, 1],
            "curves": {"stage": [1, 2], "l_pos": [0.2, 0.1], "l_neg": [0.0, -0.1],
                       "total": [0.2, 0.0], "h_size": [2, 1], "forced": [0, 0]},
            "seconds": 0.1,
        })
    mean = sum(accs) / len(accs)
    return {
        "schema_version": 1,
        "variant": {"id": "full", "label": label},
        "config": {"epochs": 2},
        "dataset": {"name": name, "samples": 2},
        "runs": runs,
        "aggregate": {
            "acc": {"mean": mean, "std": 0.05},
            "nmi": {"mean": 0.5, "std": 0.0},
            "ari": {"mean": 0.4, "std": 0.0},
            "f1": {"mean": 0.6, "std": 0.0},
        },
    }


@pytest.fixture
def report_dir(tmp_path):
    (tmp_path / "ablation").mkdir()
    (tmp_path / "a.json").write_text(json.dumps(fake_report()))
    (tmp_path / "ablation" / "wo_rns.json").write_text(json.dumps(fake_report(label="w/o RNS", accs=(0.6,))))
    (tmp_path / "notes.json").write_text(json.dumps({"hello": "world"}))
    (tmp_path / "ablation" / "ablation_table.csv").write_text("metric,Ours\nACC,75.00±5.00\n")
    (tmp_path / "other.csv").write_text("x\n1\n")
    return tmp_path


class TestDiscovery:
    def test_lists_only_reports(self, report_dir):
        entries = list_reports(report_dir)
        assert [e.name for e in entries] == ["a", "wo_rns"]
        assert entries[0].n_runs == 2
        assert entries[1].variant == "w/o RNS"

    def test_missing_directory(self, tmp_path):
        assert list_reports(tmp_path / "absent") == []

    def test_lists_known_tables(self, report_dir):
        assert [p.name for p in list_tables(report_dir)] == ["ablation_table.csv"]
        assert list(load_table(list_tables(report_dir)[0]).columns) == ["metric", "Ours"]

    def test_non_report_rejected(self, report_dir):
        with pytest.raises(ReportError):
            load_report(report_dir / "notes.json")

    def test_broken_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        with pytest.raises(ReportError) as err:
            load_report(path)
        assert err.value.path == str(path)


class TestTables:
    def test_seed_table(self):
        frame = seed_table(fake_report())
        assert list(frame.columns) == ["seed", "ACC", "NMI", "ARI", "F1", "final_inertia", "epochs", "seconds"]
        assert frame["ACC"].tolist() == [0.7, 0.8]
        assert frame["epochs"].tolist() == [2, 2]

    def test_aggregate_table(self):
        partial = fake_report(name="citeseer")
        del partial["aggregate"]["f1"]
        frame = aggregate_table({"a": fake_report(), "b": partial})
        assert frame.loc[0, "ACC"] == "75.00±5.00"
        assert frame.loc[1, "F1"] == "n/a"
        assert frame["seeds"].tolist() == [2, 2]

    def test_curve_frame(self):
        frame = curve_frame(fake_report(), 1)
        assert frame["epoch"].tolist() == [0, 1]
        assert frame["h_size"].tolist() == [2, 1]

    def test_curve_frame_unknown_seed(self):
        with pytest.raises(ReportError):
            curve_frame(fake_report(), 9)


def test_report_stats(report_dir):
    stats = get_report_stats(list_reports(report_dir))
    assert stats["total_reports"] == 2
    assert stats["total_runs"] == 3
    assert stats["datasets"] == 1
    assert stats["best_acc"] == pytest.approx(0.75)
    assert stats["by_variant"] == {"Ours": 1, "w/o RNS": 1}


def test_stats_of_nothing():
    assert get_report_stats([])["best_acc"] is None


def test_table_long_decimals_read_exactly(tmp_path):
    path = tmp_path / "summary.csv"
    path.write_text("param,value\ntau,0.29999999999999999\ntau,0.59999999999999998\n")
    assert load_table(path)["value"].tolist() == [0.3, 0.6]
