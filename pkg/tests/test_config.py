import pytest

from forumsim import ModelParams
from forumsim.config import load_params_file, parse_kv_lines, parse_param_value, params_from_mapping
from forumsim.errors import ParamError
from forumsim.records import ForumRecord, RecordSet
from forumsim.tables import read_kv, read_table, write_columns, write_kv


def test_kv_lines():
    text = "# header\n\np_c = 0.9  # inline\nseed=4\n"
    assert parse_kv_lines(text) == [("p_c", "0.9", 3), ("seed", "4", 4)]


def test_kv_line_error_has_line_number():
    with pytest.raises(ParamError, match="line 2"):
        parse_kv_lines("a = 1\njunk\n")


@pytest.mark.parametrize("name,text,value", [
    ("p_c", "0.5", 0.5), ("seed", "12", 12), ("agent_mix", "0.2/0.3/0.5", (0.2, 0.3, 0.5)),
    ("source_mix", "0.5,0.25,0.25", (0.5, 0.25, 0.25)), ("reader_prior", "none", None),
    ("reader_prior", "2", 2.0),
])
def test_parse_values(name, text, value):
    assert parse_param_value(name, text) == value


@pytest.mark.parametrize("name,text", [("p_c", "x"), ("seed", "1.5"), ("color", "1")])
def test_parse_value_errors(name, text):
    with pytest.raises(ParamError):
        parse_param_value(name, text)


def test_params_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("p_r = 0.85\nn_threads = 10\n", encoding="utf-8")
    params = params_from_mapping(load_params_file(p))
    assert params == ModelParams(p_r=0.85, n_threads=10)
    with pytest.raises(ParamError):
        load_params_file(tmp_path / "missing.cfg")


def test_tables_roundtrip(tmp_path):
    write_columns(tmp_path / "t.tsv", {"x": [1, 2], "y": [0.5, float("nan")]}, "abc", 3)
    header, data = read_table(tmp_path / "t.tsv")
    assert header == ["x", "y"] and data[0].tolist() == [1.0, 0.5]
    assert (tmp_path / "t.tsv").read_text().startswith("# run_id=abc seed=3\n")
    write_kv(tmp_path / "k.tsv", [("a", 1), ("b", True)], "abc", 3)
    assert read_kv(tmp_path / "k.tsv") == {"a": "1", "b": "true"}


def test_recordset_basics():
    rs = RecordSet.from_records([ForumRecord(2, 1, 5, 0), ForumRecord(1, 2, 4, -1), ForumRecord(1, 1, 3, 1)])
    assert len(rs) == 3 and rs[0] == ForumRecord(2, 1, 5, 0)
    s = rs.sorted()
    assert [r.post_index for r in s] == [1, 2, 1] and s.thread_id.tolist() == [1, 1, 2]
    assert RecordSet.concat([s[:1], s[1:]]).equals(s)
    assert len(RecordSet.empty()) == 0
