"""
场景配置与场景注册表测试
"""
import glob
import json
import os

import pytest

from cachepilot.errors import CachePilotError, ErrorCodes, ExitCodes, FormatError, InvalidArgumentError
from cachepilot.models import AdminAlert
from cachepilot.scenario_config import build_scenario, load_scenario, save_scenario
from cachepilot.scenario_manager import ScenarioOutput, ScenarioRegistry, scenario_registry

from conftest import SCENARIO_DIR

SINGLE = {"kind": "single_resize", "tenants": [{"tenant_id": "t1", "family": "zipf", "param": 0.7}]}


class TestBuildScenario:

    def test_defaults_from_global_config(self, default_config):
        default_config.set("controller.delta1", 3.0)
        cfg = build_scenario(SINGLE)
        assert cfg.report_window == 10000
        assert cfg.pool_total_gb == 18.0
        assert cfg.tenants[0].delta1_pct == 3.0
        assert cfg.tenants[0].delta2_pct == 5.0
        assert cfg.tenants[0].initial_alloc_gb == 0.3

    def test_controller_section_sets_pool_and_grid(self, default_config):
        default_config.set("controller.pool_total_gb", 9.0)
        default_config.set("controller.max_gb", 2.0)
        default_config.set("controller.delta2", 1.0)
        cfg = build_scenario(SINGLE)
        assert cfg.pool_total_gb == 9.0
        assert cfg.max_gb == 2.0
        assert cfg.grid_step_gb == 0.1
        assert cfg.tenants[0].delta2_pct == 1.0

    def test_overrides_win_and_none_is_ignored(self):
        cfg = build_scenario({**SINGLE, "seed": 4}, {"seed": 9, "out_dir": None})
        assert cfg.seed == 9
        assert cfg.out_dir == "reports"

    def test_unknown_family(self):
        with pytest.raises(InvalidArgumentError):
            build_scenario({"kind": "single_resize", "tenants": [{"tenant_id": "t1", "family": "pareto"}]})

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            build_scenario({"kind": "nightly"})

    def test_single_resize_needs_tenants(self):
        with pytest.raises(InvalidArgumentError):
            build_scenario({"kind": "single_resize"})

    def test_multi_phase_needs_phases(self):
        with pytest.raises(InvalidArgumentError):
            build_scenario({**SINGLE, "kind": "multi_phase"})

    def test_two_tenants_required(self):
        with pytest.raises(InvalidArgumentError):
            build_scenario({**SINGLE, "kind": "two_tenant_ratio"})

    def test_ratio_range(self):
        tenants = [{"tenant_id": "a"}, {"tenant_id": "b"}]
        with pytest.raises(InvalidArgumentError):
            build_scenario({"kind": "two_tenant_ratio", "tenants": tenants, "ratios": [0, 5]})

    def test_duplicate_tenant_ids(self):
        with pytest.raises(InvalidArgumentError):
            build_scenario({"kind": "single_resize", "tenants": [{"tenant_id": "a"}, {"tenant_id": "a"}]})

    def test_tenant_must_be_object(self):
        with pytest.raises(FormatError):
            build_scenario({"kind": "single_resize", "tenants": ["t1"]})


class TestScenarioFiles:

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(FormatError):
            load_scenario(path)

    def test_top_level_must_be_object(self, tmp_path):
        path = tmp_path / "list.json"
        path.write_text("[]", encoding="utf-8")
        with pytest.raises(FormatError):
            load_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            load_scenario(tmp_path / "absent.json")

    def test_save_and_reload(self, tmp_path):
        cfg = build_scenario(SINGLE)
        path = save_scenario(cfg, tmp_path / "scenario.json")
        assert load_scenario(path) == cfg
        assert json.loads(path.read_text(encoding="utf-8"))["kind"] == "single_resize"

    @pytest.mark.parametrize("path", sorted(glob.glob(os.path.join(SCENARIO_DIR, "*.json"))),
                             ids=os.path.basename)
    def test_shipped_scenarios_are_valid(self, path):
        cfg = load_scenario(path)
        assert cfg.kind in {s["name"] for s in scenario_registry.list_scenarios()}

    def test_shipped_multi_phase_layout(self):
        cfg = load_scenario(os.path.join(SCENARIO_DIR, "multi_phase.json"))
        phases = cfg.tenants[0].phases
        assert [p.spec().label for p in phases] == ["Exponential(0.9)", "Zipf(1.1)", "Uniform", "Gaussian(1.3)"]
        assert sum(p.queries for p in phases) == 1_000_000
        assert cfg.report_window == 2500


class TestRegistry:

    @pytest.fixture
    def registry(self):
        reg = ScenarioRegistry()
        reg.register("ok", lambda cfg, **kw: ScenarioOutput(summary="done"), "成功")
        reg.register("alert", lambda cfg, **kw: ScenarioOutput(
            alerts=[AdminAlert(tenant_id="t1", requested_gb=2.0, shortfall_gb=1.0)]), "上报")
        reg.register("data", self._raise(FormatError("坏文件")), "格式错误")
        reg.register("crash", self._raise(RuntimeError("boom")), "异常")
        return reg

    @staticmethod
    def _raise(error):
        def func(cfg, **kwargs):
            raise error
        return func

    def test_success(self, registry):
        result = registry.execute("ok", build_scenario(SINGLE))
        assert result.success
        assert result.exit_code == ExitCodes.OK
        assert result.to_string() == "done"
        assert result.to_dict()["parameters"]["kind"] == "single_resize"

    def test_alert_exit_code(self, registry):
        result = registry.execute("alert", None)
        assert result.success
        assert result.alert_count == 1
        assert result.exit_code == ExitCodes.QOS

    def test_business_error(self, registry):
        result = registry.execute("data", None)
        assert not result.success
        assert result.error_code == ErrorCodes.FORMAT_ERROR
        assert result.exit_code == ExitCodes.DATA

    def test_unexpected_error(self, registry):
        result = registry.execute("crash", None)
        assert result.error_code == ErrorCodes.EXECUTION_ERROR
        assert "boom" in result.error_message

    def test_unknown_scenario(self, registry):
        result = registry.execute("nope", None)
        assert result.error_code == ErrorCodes.SCENARIO_NOT_FOUND
        assert result.exit_code == ExitCodes.USAGE
        assert "ok" in result.error_message

    def test_duplicate_registration_keeps_first(self, registry):
        registry.register("ok", lambda cfg, **kw: ScenarioOutput(summary="other"), "重复")
        assert registry.execute("ok", None).data == "done"

    def test_builtin_scenarios_registered(self):
        names = {s["name"] for s in scenario_registry.list_scenarios()}
        assert names >= {"single_resize", "multi_phase", "two_tenant_ratio", "accuracy_study", "train_eval"}


def test_error_string_and_exit_code():
    error = CachePilotError("x", ErrorCodes.QOS_UNSATISFIABLE)
    assert str(error) == "错误[QOS_UNSATISFIABLE]: x"
    assert error.exit_code == ExitCodes.QOS
    assert isinstance(InvalidArgumentError("y"), ValueError)
