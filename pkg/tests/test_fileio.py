import json

import numpy as np
import pytest

from conftest import SEVEN_NODE_EDGES, SEVEN_NODE_LEAVES, random_taxonomy
from hieval.errors import (
    ColumnMismatch,
    DuplicateClass,
    EmptyInput,
    KindConflict,
    MissingClass,
    MultipleRoots,
    NonFiniteValue,
    ParseError,
    RowSumViolation,
    UnknownClass,
    UnknownLeaf,
)
from hieval.fileio import (
    align_columns,
    load_hierarchy,
    load_labels,
    load_report,
    load_scores,
    save_hierarchy,
    save_scores,
    write_labels,
    write_report,
)
from hieval.metrics import EvalReport
from hieval.scores import LOGITS, PROBABILITIES, ScoreMatrix


def hierarchy_doc():
    nodes = [{"name": "entity", "parent": None}]
    nodes += [{"name": child, "parent": parent} for child, parent in SEVEN_NODE_EDGES]
    return {"nodes": nodes, "leaf_order": SEVEN_NODE_LEAVES}


@pytest.fixture
def hierarchy_file(tmp_path):
    path = tmp_path / "hierarchy.json"
    path.write_text(json.dumps(hierarchy_doc()))
    return str(path)


# ------------------------------------------------------------- hierarchies


def test_load_hierarchy_fixture(hierarchy_file):
    t = load_hierarchy(hierarchy_file)
    assert t.n_nodes == 7
    assert t.n_leaves == 4
    assert t.leaf_names() == ("rose", "tulip", "bus", "car")


def test_load_hierarchy_two_roots(tmp_path):
    doc = hierarchy_doc()
    doc["nodes"].append({"name": "ghost", "parent": None})
    path = tmp_path / "h.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(MultipleRoots, match="ghost"):
        load_hierarchy(str(path))


def test_load_hierarchy_bad_json(tmp_path):
    path = tmp_path / "h.json"
    path.write_text('{"nodes": [')
    with pytest.raises(ParseError, match="h.json:1"):
        load_hierarchy(str(path))


def test_load_hierarchy_undeclared_parent(tmp_path):
    path = tmp_path / "h.json"
    path.write_text(json.dumps({"nodes": [{"name": "a", "parent": "nowhere"}]}))
    with pytest.raises(ParseError, match="nowhere"):
        load_hierarchy(str(path))


def test_load_hierarchy_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_hierarchy(str(tmp_path / "absent.json"))


def test_hierarchy_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    for i in range(10):
        t = random_taxonomy(rng, int(rng.integers(2, 120)))
        path = str(tmp_path / f"rt{i}.json")
        save_hierarchy(t, path)
        back = load_hierarchy(path)
        original = {
            t.names[i]: None if t.parent[i] is None else t.names[t.parent[i]]
            for i in range(t.n_nodes)
        }
        restored = {
            back.names[i]: None if back.parent[i] is None else back.names[back.parent[i]]
            for i in range(back.n_nodes)
        }
        assert restored == original
        assert back.leaf_names() == t.leaf_names()
        assert back.coarse_names() == t.coarse_names()


def test_hierarchy_round_trip_preserves_custom_orders(tmp_path, flower_vehicle):
    path = str(tmp_path / "h.json")
    save_hierarchy(flower_vehicle, path)
    assert load_hierarchy(path).leaf_names() == ("rose", "tulip", "bus", "car")


# ----------------------------------------------------------- score files


def test_text_scores_parse(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("rose,tulip,bus,car\n0.4,0.1,0.35,0.15\n")
    m = load_scores(str(path))
    assert m.kind == PROBABILITIES
    assert m.class_names == ("rose", "tulip", "bus", "car")
    assert m.values.tolist() == [[0.4, 0.1, 0.35, 0.15]]


def test_text_scores_kind_comment_and_conflict(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("# kind: logits\na,b\n1.0,2.0\n")
    assert load_scores(str(path)).kind == LOGITS
    assert load_scores(str(path), declared_kind=LOGITS).kind == LOGITS
    with pytest.raises(KindConflict):
        load_scores(str(path), declared_kind=PROBABILITIES)


def test_text_scores_errors(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("a,b\n1.0\n")
    with pytest.raises(ColumnMismatch):
        load_scores(str(ragged))

    junk = tmp_path / "junk.csv"
    junk.write_text("a,b\n1.0,oops\n")
    with pytest.raises(ParseError, match="oops"):
        load_scores(str(junk))

    inf = tmp_path / "inf.csv"
    inf.write_text("# kind: logits\na,b\n1.0,inf\n")
    with pytest.raises(NonFiniteValue):
        load_scores(str(inf))

    empty = tmp_path / "empty.csv"
    empty.write_text("a,b\n")
    with pytest.raises(EmptyInput):
        load_scores(str(empty))


def test_loaded_probabilities_are_validated(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n0.6,0.5\n")
    with pytest.raises(RowSumViolation):
        load_scores(str(path))


def test_text_round_trip_is_value_exact(tmp_path):
    rng = np.random.default_rng(2)
    values = rng.random((7, 5))
    values /= values.sum(axis=1, keepdims=True)
    m = ScoreMatrix(values, PROBABILITIES, tuple("abcde"))
    path = str(tmp_path / "rt.csv")
    save_scores(m, path)
    back = load_scores(path)
    assert back.values.tolist() == m.values.tolist()
    assert back.kind == m.kind
    assert back.class_names == m.class_names


def test_binary_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(3)
    m = ScoreMatrix(rng.normal(size=(50, 9)), LOGITS, tuple(f"k{i}" for i in range(9)))
    path = str(tmp_path / "rt.hies")
    save_scores(m, path)
    back = load_scores(path)
    assert np.array_equal(back.values, m.values)
    assert back.kind == LOGITS
    assert back.class_names == m.class_names


def test_binary_header_errors(tmp_path):
    rng = np.random.default_rng(4)
    m = ScoreMatrix(rng.normal(size=(2, 2)), LOGITS, ("a", "b"))
    path = str(tmp_path / "x.hies")
    save_scores(m, path)

    raw = bytearray(open(path, "rb").read())
    raw[4] = 9  # version byte
    bad = tmp_path / "badver.hies"
    bad.write_bytes(bytes(raw))
    with pytest.raises(ParseError, match="version"):
        load_scores(str(bad))

    truncated = tmp_path / "short.hies"
    truncated.write_bytes(open(path, "rb").read()[:-8])
    with pytest.raises(ParseError):
        load_scores(str(truncated))

    orphan = tmp_path / "orphan.hies"
    orphan.write_bytes(open(path, "rb").read())
    with pytest.raises(ParseError, match="sidecar"):
        load_scores(str(orphan))


def test_expected_names_divergence(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("a,b,c\n0.2,0.3,0.5\n")
    load_scores(str(path), expected_names=["a", "b", "c"])
    with pytest.raises(ColumnMismatch, match="column 1"):
        load_scores(str(path), expected_names=["a", "x", "c"])
    with pytest.raises(ColumnMismatch):
        load_scores(str(path), expected_names=["a", "b"])


# ---------------------------------------------------------------- aligning


def test_align_identity_returns_same_object(flower_vehicle):
    m = ScoreMatrix([[0.4, 0.1, 0.35, 0.15]], PROBABILITIES, flower_vehicle.leaf_names())
    assert align_columns(m, flower_vehicle, "leaf") is m


def test_align_permutes_by_name(flower_vehicle):
    reversed_names = tuple(reversed(flower_vehicle.leaf_names()))
    m = ScoreMatrix([[0.15, 0.35, 0.1, 0.4]], PROBABILITIES, reversed_names)
    aligned = align_columns(m, flower_vehicle, "leaf")
    assert aligned.class_names == flower_vehicle.leaf_names()
    assert aligned.values.tolist() == [[0.4, 0.1, 0.35, 0.15]]
    assert align_columns(aligned, flower_vehicle, "leaf") is aligned


def test_align_error_cases(flower_vehicle):
    t = flower_vehicle
    with pytest.raises(UnknownClass, match="weed"):
        align_columns(
            ScoreMatrix([[0.25] * 4], PROBABILITIES, ("rose", "tulip", "bus", "weed")),
            t, "leaf",
        )
    with pytest.raises(DuplicateClass):
        align_columns(
            ScoreMatrix([[0.25] * 4], PROBABILITIES, ("rose", "rose", "bus", "car")),
            t, "leaf",
        )
    with pytest.raises(MissingClass, match="car"):
        align_columns(
            ScoreMatrix([[0.25] * 3], PROBABILITIES, ("rose", "tulip", "bus")),
            t, "leaf",
        )


def test_align_coarse_and_depth(flower_vehicle):
    t = flower_vehicle
    m = ScoreMatrix([[0.8, 0.2]], PROBABILITIES, ("vehicle", "flower"))
    assert align_columns(m, t, "coarse").values.tolist() == [[0.2, 0.8]]
    assert align_columns(m, t, 1).values.tolist() == [[0.2, 0.8]]


# ------------------------------------------------------------------ labels


def test_labels_round_trip(tmp_path, flower_vehicle):
    t = flower_vehicle
    path = str(tmp_path / "labels.txt")
    write_labels(t, [2, 0, 3, 3], path)
    assert load_labels(path, t).tolist() == [2, 0, 3, 3]


def test_labels_internal_node_rejected(tmp_path, flower_vehicle):
    path = tmp_path / "labels.txt"
    path.write_text("rose\nentity\n")
    with pytest.raises(UnknownLeaf) as exc:
        load_labels(str(path), flower_vehicle)
    assert exc.value.name == "entity"
    assert exc.value.line == 2


def test_labels_empty_file(tmp_path, flower_vehicle):
    path = tmp_path / "labels.txt"
    path.write_text("")
    with pytest.raises(EmptyInput):
        load_labels(str(path), flower_vehicle)


# ----------------------------------------------------------------- reports


def test_report_round_trip(tmp_path):
    report = EvalReport(
        method="hie",
        top1_accuracy=0.875,
        avg_mistake_severity=1.25,
        hier_dist_at_k={1: 0.15625, 5: 0.8, 20: 1.05},
        n_samples=64,
        n_mistakes=8,
        config={"kind": "logits", "ks": [1, 5, 20], "inputs": {"fine": "sha256:ab"}},
    )
    path = str(tmp_path / "report.json")
    write_report(report, path)
    assert load_report(path) == report


def test_report_round_trip_null_severity(tmp_path):
    report = EvalReport("argmax", 1.0, None, {1: 0.0}, 10, 0, {})
    path = str(tmp_path / "report.json")
    write_report(report, path)
    back = load_report(path)
    assert back.avg_mistake_severity is None
    assert back == report
