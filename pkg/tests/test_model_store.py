"""
模型文件编解码测试
"""
import struct

import numpy as np
import pytest

from cachepilot.errors import FormatError, StateError
from cachepilot.model_store import MODEL_MAGIC, load_model, load_models, model_path, save_model
from cachepilot.models import Family, FcnConfig
from cachepilot.predictor import FcnModel, ModelKind, TrainingSet, fit_log, train_fcn, train_gpr

GRID = np.array([0.1, 0.5, 1.0, 2.0, 3.5])


@pytest.fixture
def training_set():
    rows = [(d, round(0.1 * k, 1), 1.0) for d in (1.0, 2.0) for k in range(1, 21)]
    y = [min(100.0, 100.0 * c / d) for d, c, _ in rows]
    return TrainingSet(family=Family.ZIPF, X=np.array(rows), y=np.array(y))


class TestSaveLoad:

    def test_fcn(self, tmp_path, training_set):
        model = train_fcn(training_set, FcnConfig(hidden_neurons=16, epochs=500, seed=1))
        loaded = load_model(save_model(model, tmp_path / "m.cpm"))
        assert isinstance(loaded, FcnModel)
        assert loaded.config == model.config
        assert loaded.loss_history == model.loss_history
        assert np.array_equal(loaded.curve(1.5, 1.0, GRID), model.curve(1.5, 1.0, GRID))

    def test_gpr(self, tmp_path, training_set):
        model = train_gpr(training_set, cv=100.0, ls=1.0)
        loaded = load_model(save_model(model, tmp_path / "m.cpm"))
        assert (loaded.cv, loaded.ls, loaded.noise) == (100.0, 1.0, 1e-6)
        assert np.array_equal(loaded.curve(1.5, 1.0, GRID), model.curve(1.5, 1.0, GRID))

    def test_logfit(self, tmp_path):
        model = fit_log([(0.1, 20.0), (1.0, 80.0)], Family.GAUSSIAN)
        loaded = load_model(save_model(model, tmp_path / "m.cpm"))
        assert loaded.family == Family.GAUSSIAN
        assert loaded.kind == ModelKind.LOGFIT
        assert (loaded.a, loaded.b) == (model.a, model.b)

    def test_file_is_deterministic(self, tmp_path):
        model = fit_log([(0.1, 20.0), (1.0, 80.0)])
        a = save_model(model, tmp_path / "a.cpm").read_bytes()
        b = save_model(model, tmp_path / "b.cpm").read_bytes()
        assert a == b
        assert a[:4] == MODEL_MAGIC

    def test_untrained_model(self, tmp_path):
        with pytest.raises(FormatError):
            save_model(FcnModel(Family.ZIPF), tmp_path / "m.cpm")


class TestCorruptFiles:

    @pytest.fixture
    def saved(self, tmp_path):
        return save_model(fit_log([(0.1, 20.0), (1.0, 80.0)]), tmp_path / "m.cpm")

    def test_version_mismatch_names_both_versions(self, saved):
        raw = bytearray(saved.read_bytes())
        raw[4:6] = struct.pack("<H", 7)
        saved.write_bytes(bytes(raw))
        with pytest.raises(FormatError) as excinfo:
            load_model(saved)
        assert "7" in str(excinfo.value) and "1" in str(excinfo.value)

    def test_truncated(self, saved):
        saved.write_bytes(saved.read_bytes()[:-5])
        with pytest.raises(FormatError):
            load_model(saved)

    def test_trailing_bytes(self, saved):
        saved.write_bytes(saved.read_bytes() + b"\x00")
        with pytest.raises(FormatError):
            load_model(saved)

    def test_bad_magic(self, saved):
        saved.write_bytes(b"NOPE" + saved.read_bytes()[4:])
        with pytest.raises(FormatError):
            load_model(saved)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            load_model(tmp_path / "absent.cpm")


class TestModelDirectory:

    def test_path_naming(self, tmp_path):
        assert model_path(tmp_path, Family.ZIPF, ModelKind.GPR).name == "zipf.gpr.cpm"

    def test_missing_families_listed(self, tmp_path):
        save_model(fit_log([(0.1, 20.0), (1.0, 80.0)], Family.UNIFORM),
                   model_path(tmp_path, Family.UNIFORM, ModelKind.LOGFIT))
        with pytest.raises(StateError) as excinfo:
            load_models(tmp_path, ModelKind.LOGFIT)
        message = str(excinfo.value)
        assert "gaussian" in message and "exponential" in message and "zipf" in message
        assert "uniform" not in message.split(":")[-1]

    def test_load_all(self, logfit_models_dir):
        models = load_models(logfit_models_dir, ModelKind.LOGFIT)
        assert set(models) == set(Family)
        assert all(m.family == f for f, m in models.items())
