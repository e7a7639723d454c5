"""End-to-end runs of the lk commands through the Flask CLI runner."""
import json
import math

import pytest

from lkengine.geometry import zoo
from lkengine.geometry.metricfield import chart_to_dict, make_chart


def invoke(runner, *args):
    return runner.invoke(args=list(args))


class TestCompute:

    def test_sphere_volumes_as_text(self, runner):
        result = invoke(runner, "compute", "zoo:sphere?r=1", "--i", "0", "--i", "1", "--i", "2")
        assert result.exit_code == 0, result.output
        lines = result.output.splitlines()
        assert lines[0].startswith("2.000000 +- ")
        assert lines[1] == "0"
        assert lines[2].startswith("12.566371")

    def test_json_output_carries_the_config(self, runner):
        result = invoke(runner, "compute", "zoo:flat_torus", "--i", "2", "--format", "json")
        assert result.exit_code == 0, result.output
        document = json.loads(result.output)
        assert document["config"]["command"] == "compute"
        assert document["config"]["indices"] == [2]
        assert document["result"]["volumes"][0]["value"] == pytest.approx(4.0 * math.pi ** 2)
        assert "convention" in document

    def test_unknown_zoo_entry_exits_4(self, runner):
        result = invoke(runner, "compute", "zoo:nope", "--i", "0")
        assert result.exit_code == 4
        assert "unknown zoo entry" in result.output

    def test_missing_file_exits_4(self, runner, tmp_path):
        result = invoke(runner, "compute", str(tmp_path / "absent.json"), "--i", "0")
        assert result.exit_code == 4

    def test_node_cap_exits_3(self, app, runner):
        app.config["LK_MAX_NODES"] = 100
        result = invoke(runner, "compute", "zoo:sphere", "--i", "2")
        assert result.exit_code == 3

    def test_chart_file_input(self, runner, tmp_path):
        chart = make_chart([["4", "0"], ["4*sin(x0)^2"]], [(0, math.pi), (0, 2 * math.pi)], [False, True])
        path = tmp_path / "sphere.json"
        path.write_text(json.dumps(chart_to_dict(chart)))
        result = invoke(runner, "compute", str(path), "--i", "2")
        assert result.exit_code == 0, result.output
        assert result.output.startswith("50.265482")


class TestValidate:

    def test_zoo_submersion_passes(self, runner):
        result = invoke(runner, "validate", "zoo:coupled_t2_over_s1?c=0.1")
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)["result"]
        assert report["pass"] is True
        assert report["coordinate_block_discrepancy"] == pytest.approx(0.01)

    def test_invalid_submersion_exits_2(self, runner, tmp_path):
        sc = zoo.make("product_s2_s1").submersion
        data = {
            "total_chart": chart_to_dict(sc.total),
            "base_chart": chart_to_dict(make_chart([["4"]], [(0, 2 * math.pi)], [True])),
            "fiber_dims": [0, 1],
            "base_dims": [2],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        result = invoke(runner, "validate", str(path))
        assert result.exit_code == 2

    def test_manifold_is_not_a_submersion(self, runner):
        assert invoke(runner, "validate", "zoo:sphere").exit_code == 4


class TestSweep:

    def test_product_sweep_writes_csv_and_summary(self, runner, tmp_path):
        out = tmp_path / "product.csv"
        result = invoke(runner, "sweep", "zoo:product_s2_s1", "--i", "1", "--eps", "0.25:0.5:4", "--out", str(out))
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "eps,value,target,abs_err"
        assert len(lines) == 5
        assert lines[1].startswith("0.25,12.566")
        summary = json.loads((tmp_path / "product.summary.json").read_text())
        assert summary["result"]["pass"] is True
        assert summary["config"]["eps"] == [0.25, 0.125, 0.0625, 0.03125]

    def test_csv_is_identical_across_worker_counts(self, runner, tmp_path):
        outputs = []
        for workers in ("1", "3"):
            out = tmp_path / f"run{workers}.csv"
            result = invoke(runner, "sweep", "zoo:product_s2_s1", "--i", "1", "--eps", "0.25:0.5:4",
                            "--workers", workers, "--out", str(out))
            assert result.exit_code == 0, result.output
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_json_is_identical_across_worker_counts(self, runner, tmp_path):
        outputs = []
        out = tmp_path / "run.json"
        for workers in ("1", "3"):
            result = invoke(runner, "sweep", "zoo:product_s2_s1", "--i", "1", "--eps", "0.25:0.5:4",
                            "--workers", workers, "--format", "json", "--out", str(out))
            assert result.exit_code == 0, result.output
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]
        assert "workers" not in json.loads(outputs[0])["config"]

    def test_short_schedule_exits_4(self, runner):
        result = invoke(runner, "sweep", "zoo:product_s2_s1", "--i", "1", "--eps", "0.25,0.125")
        assert result.exit_code == 4

    def test_bad_eps_spec_exits_4(self, runner):
        assert invoke(runner, "sweep", "zoo:product_s2_s1", "--i", "1", "--eps", "0.25:x:4").exit_code == 4


class TestOtherCommands:

    def test_sectional_table(self, runner):
        result = invoke(runner, "sectional", "zoo:torus_fiber_bundle", "--eps", "0.25:0.5:4", "--samples", "32")
        assert result.exit_code == 0, result.output
        lines = result.output.splitlines()
        assert lines[0] == "eps,class,min_k"
        assert {line.split(",")[1] for line in lines[1:]} == {"base-fiber", "fiber-fiber"}

    def test_tube_json(self, runner):
        result = invoke(runner, "tube", "zoo:sphere2_embedded", "--eps", "0.1", "--samples", "100000", "--seed", "3")
        assert result.exit_code == 0, result.output
        document = json.loads(result.output)
        estimate = document["result"]["estimates"][0]
        assert estimate["eps"] == 0.1 and estimate["seed"] == 3
        assert document["result"]["steiner"][0] == pytest.approx(2.52165, abs=1e-5)
        assert abs(estimate["estimate"] - 2.52165) <= 5.0 * estimate["sigma"]

    def test_tube_needs_an_embedding(self, runner):
        assert invoke(runner, "tube", "zoo:sphere", "--eps", "0.1").exit_code == 4

    @pytest.mark.parametrize("suite", ["parity", "block-inverse", "validate-zoo"])
    def test_check_suites_pass(self, runner, suite):
        result = invoke(runner, "check", suite)
        assert result.exit_code == 0, result.output
        assert "all checks passed" in result.output

    def test_zoo_listing(self, runner):
        result = invoke(runner, "zoo", "--json")
        assert result.exit_code == 0, result.output
        listing = json.loads(result.output)
        assert set(listing) == set(zoo.CATALOGUE)
        assert listing["sphere"]["references"]["V_0"]["value"] == pytest.approx(2.0)


class TestUsageErrors:

    @pytest.mark.parametrize("args", [
        ["compute", "zoo:sphere"],
        ["compute", "zoo:sphere", "--i", "x"],
        ["compute", "zoo:sphere", "--i", "0", "--format", "yaml"],
        ["sweep", "zoo:product_s2_s1"],
        ["tube", "zoo:sphere2_embedded"],
        ["check", "nosuch"],
        ["zoo", "--bogus"],
    ])
    def test_bad_flags_exit_4(self, runner, args):
        result = invoke(runner, *args)
        assert result.exit_code == 4, result.output

    def test_help_still_exits_0(self, runner):
        result = invoke(runner, "compute", "--help")
        assert result.exit_code == 0
        assert "--i" in result.output
