import math

import pytest
from hypothesis import given, strategies as st

from famtree.core import (
    Label,
    LabelError,
    ModelError,
    ModelKind,
    TreeState,
    VertexRecord,
    format_label,
    parse_label,
    total_weight_formula,
    vertex_weight,
)


def test_parse_root():
    assert parse_label("root") == Label(())
    assert parse_label("root").is_root


def test_parse_path():
    assert parse_label("2.1.3").path == (2, 1, 3)


@pytest.mark.parametrize("text", ["2.0.3", "-1", "a.b", "1..2", "", "1.x", "0"])
def test_parse_rejects(text):
    with pytest.raises(LabelError):
        parse_label(text)


def test_parse_error_names_component():
    with pytest.raises(LabelError, match="'0'"):
        parse_label("2.0.3")


@given(st.lists(st.integers(min_value=1, max_value=10**6), max_size=12))
def test_label_roundtrip(path):
    label = Label(tuple(path))
    assert parse_label(format_label(label)) == label


def test_label_parent():
    assert parse_label("3.1").parent() == parse_label("3")
    assert parse_label("3").parent() == Label(())
    with pytest.raises(LabelError):
        Label(()).parent()


def test_label_rejects_zero_entry():
    with pytest.raises(LabelError):
        Label((1, 0))


def test_model_ranges():
    ModelKind.linear(-0.99)
    ModelKind.port(0.01)
    with pytest.raises(ModelError):
        ModelKind.linear(-1.0)
    with pytest.raises(ModelError):
        ModelKind.port(0.0)


def test_vertex_weight_examples():
    assert vertex_weight(VertexRecord(parse_label("2"), 3, 2), ModelKind.linear(0.0)) == 3
    assert vertex_weight(VertexRecord(Label(()), 0, 0), ModelKind.port(0.5)) == 0.5
    assert vertex_weight(VertexRecord(parse_label("1"), 1, 0), ModelKind.port(1.0)) == 1


def test_total_weight_examples():
    assert total_weight_formula(2, ModelKind.linear(0.0)) == 2
    assert total_weight_formula(1, ModelKind.linear(0.0)) == 0
    assert total_weight_formula(3, ModelKind.port(1.0)) == 5


def test_port_total_weight_three_vertices():
    # both 3-vertex trees: path root-1-1.1 (out-degrees 1,1,0) and cherry (2,0,0)
    m = ModelKind.port(1.0)
    for outs in ([1, 1, 0], [2, 0, 0]):
        assert math.fsum(d + m.beta for d in outs) == total_weight_formula(3, m)


def test_tree_state_records():
    st_ = TreeState(ModelKind.linear(0.0))
    st_.reserve(4)
    # root with children 1 and 2; 1.1 below 1
    st_.n = 4
    st_.degree[:4] = [2, 2, 1, 1]
    st_.parent[:4] = [-1, 0, 0, 1]
    st_.coord[:4] = [0, 1, 2, 1]
    assert [str(v.label) for v in st_.vertices()] == ["root", "1", "2", "1.1"]
    assert [v.out_degree for v in st_.vertices()] == [2, 1, 0, 0]
    assert st_.find(parse_label("1.1")) == 3
    assert st_.find(parse_label("3")) == -1
    st_.check_invariants()
    assert st_.total_weight == total_weight_formula(4, st_.model)
