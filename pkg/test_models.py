"""Run configuration, eps parsing and the shared writers."""
import json

import pytest

from lkengine.errors import InputError
from lkengine.models import (
    RunConfig,
    companion_path,
    fixed,
    load_input,
    parse_eps,
    render_csv,
    render_json,
    write_output,
)


def test_parse_eps_forms():
    assert parse_eps("0.25, 0.125") == (0.25, 0.125)
    assert parse_eps("0.5:0.5:3") == (0.5, 0.25, 0.125)
    assert parse_eps("") == ()
    for bad in ("a,b", "1:2", "0.5:0.5:0", "0.5:-1:3"):
        with pytest.raises(InputError):
            parse_eps(bad)


def test_fixed_rounds_to_nine_digits():
    assert fixed(1.0 / 3.0) == 0.333333333
    assert fixed(None) is None
    assert fixed(float("inf")) == float("inf")


def test_run_config_validation():
    run = RunConfig("sweep", "zoo:sphere", indices=(1,), eps=(0.25, 0.125)).validate()
    assert run.to_dict()["eps"] == [0.25, 0.125]
    assert run.to_dict()["indices"] == [1]
    assert "workers" not in RunConfig("sweep", "zoo:sphere", workers=4).validate().to_dict()
    for fields in ({"output_format": "xml"}, {"workers": 0}, {"seed": -1}, {"eps": (0.1, 0.0)}):
        with pytest.raises(InputError):
            RunConfig("sweep", "zoo:sphere", **fields).validate()


def test_render_csv_formats_floats():
    text = render_csv(("eps", "value"), [(0.25, 1.0 / 3.0), (0.125, None)])
    assert text == "eps,value\n0.25,0.333333333\n0.125,\n"


def test_render_json_is_sorted_and_rounded():
    run = RunConfig("compute", "zoo:sphere", indices=(0,))
    document = json.loads(render_json(run, {"value": 2.0000000000001, "nested": [1.0 / 7.0]}))
    assert list(document) == ["config", "convention", "result"]
    assert document["result"]["value"] == 2.0
    assert document["result"]["nested"] == [0.142857143]


def test_write_output_and_companion(tmp_path):
    target = tmp_path / "runs" / "sweep.csv"
    assert write_output(str(target), "a\n") is None
    assert target.read_text() == "a\n"
    assert write_output(None, "b\n") == "b\n"
    assert companion_path(str(target), "summary.json") == str(tmp_path / "runs" / "sweep.summary.json")
    assert companion_path(None, "summary.json") is None


def test_load_input_from_files(tmp_path):
    atlas = tmp_path / "atlas.json"
    chart = {"dim": 2, "metric": [["1", "0"], ["1"]], "domain": [[0, 1], [0, 2]], "periodic": [True, True]}
    atlas.write_text(json.dumps({"name": "flat", "charts": [chart, chart]}))
    loaded = load_input(str(atlas))
    assert loaded.name == "flat" and len(loaded.atlas) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(InputError):
        load_input(str(broken))
    listing = tmp_path / "list.json"
    listing.write_text("[]")
    with pytest.raises(InputError):
        load_input(str(listing))
