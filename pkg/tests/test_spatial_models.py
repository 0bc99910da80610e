import numpy as np
import pytest

from _gradcheck import gradcheck, max_relative_error, model_graph
from sdcnn.basisgen import BasisConfig, build_resolutions
from sdcnn.neuralcore import Dense, ShapeError
from sdcnn.spatial_models import (
    ModelInput,
    ModelSpec,
    build_baseline_dnn,
    build_deepkriging,
    build_model,
    build_sdcnn,
    forward,
    mc_predict,
)

RES = build_resolutions(BasisConfig((0.0, 1.0, 0.0, 1.0)))


def spec(kind, **kw):
    return ModelSpec(kind, resolutions=[] if kind == "baseline_dnn" else RES, **kw)


def coords(n, seed=0):
    return np.random.default_rng(seed).uniform(size=(n, 2))


class TestBaseline:
    def test_dense_parameter_count(self):
        m = build_baseline_dnn(spec("baseline_dnn"), np.random.default_rng(0))
        n = sum(layer.params["W"].size + layer.params["b"].size
                for _, layer in m.network.named_layers() if isinstance(layer, Dense))
        assert n == 30701

    def test_shape_manifest(self):
        m = build_baseline_dnn(spec("baseline_dnn"))
        assert m.dense_shapes() == [(2, 100), (100, 100), (100, 100), (100, 100), (100, 1)]
        bn = [s for k, s in m.shape_manifest() if k.endswith(".gamma")]
        assert bn == [(100,)] * 4

    def test_forward_finite(self):
        m = build_model(spec("baseline_dnn"), np.random.default_rng(1))
        out = forward(m, ModelInput.from_coords(m.spec, coords(7)))
        assert out.shape == (7,) and np.all(np.isfinite(out))

    def test_p_zero_equals_no_dropout(self):
        m = build_model(spec("baseline_dnn", dropout_rate=0.0), np.random.default_rng(2))
        inp = ModelInput.from_coords(m.spec, coords(9))
        off = forward(m, inp)
        mc = forward(m, inp, mode="mc_predict", rng=np.random.default_rng(3))
        assert np.array_equal(off, mc)


class TestDeepKriging:
    def test_input_width(self):
        m = build_deepkriging(spec("deepkriging"))
        assert m.dense_shapes() == [(191, 100), (100, 100), (100, 100), (100, 1)]

    def test_zero_basis_reduces_to_coords(self):
        m = build_model(spec("deepkriging"), np.random.default_rng(0))
        c = coords(5)
        inp = ModelInput(c, np.zeros((5, 189)))
        W0 = m.network.parameters()["inputs.0.W"]
        ref = forward(m, inp)
        W0[2:] = np.random.default_rng(1).normal(size=W0[2:].shape)
        assert np.array_equal(forward(m, inp), ref)

    def test_requires_resolutions(self):
        with pytest.raises(ValueError):
            ModelSpec("deepkriging")

    def test_output_width(self):
        m = build_model(spec("deepkriging"), np.random.default_rng(0))
        assert m.dense_shapes()[-1] == (100, 1)


class TestSDCNN:
    def test_shape_manifest(self):
        m = build_sdcnn(spec("sdcnn"))
        man = dict(m.shape_manifest())
        for name, n in zip(("basis1", "basis2", "basis3"), (3, 6, 12)):
            assert man[f"{name}.0.F"] == (128, 2, 2)
            assert man[f"{name}.0.b"] == (128,)
            assert man[f"{name}.3.W"] == (128 * (n - 1) ** 2, 100)
            assert man[f"{name}.6.W"] == (100, 100)
            assert man[f"{name}.9.W"] == (100, 100)
        assert man["coords.0.W"] == (2, 100)
        assert man["head.1.W"] == (400, 1)

    def test_coarsest_flatten_512(self):
        m = build_sdcnn(spec("sdcnn"), np.random.default_rng(0))
        inp = ModelInput.from_coords(m.spec, coords(2))
        conv = dict(m.network.named_layers())["basis1.0"]
        out = conv.forward(inp.basis_images[0])
        assert out.shape == (2, 128, 2, 2)
        assert out.reshape(2, -1).shape[1] == 512

    def test_general_r(self):
        res = build_resolutions(BasisConfig((0, 1, 0, 1), num_resolutions=2))
        m = build_sdcnn(ModelSpec("sdcnn", hidden_width=10, n_filters=3, resolutions=res))
        assert m.dense_shapes()[-1] == (30, 1)

    def test_image_too_small(self):
        res = build_resolutions(BasisConfig((0, 1, 0, 1)))
        tiny = type(res[0])(1, 1, 2, 0.5, np.array([0.0, 1.0]), np.array([0.5]))
        with pytest.raises(ShapeError):
            build_sdcnn(ModelSpec("sdcnn", resolutions=[tiny]))

    def test_zero_filters_invariant_to_images(self):
        m = build_model(spec("sdcnn", hidden_width=16, n_filters=8), np.random.default_rng(0))
        for k, v in m.network.parameters().items():
            if k.endswith(".0.F") or (k.startswith("basis") and k.endswith(".0.b")):
                v[...] = 0.0
        c = coords(6)
        inp = ModelInput.from_coords(m.spec, c)
        other = ModelInput(c, basis_images=[np.random.default_rng(1).uniform(size=im.shape)
                                            for im in inp.basis_images])
        assert np.array_equal(forward(m, inp), forward(m, other))

    def test_missing_images(self):
        m = build_model(spec("sdcnn", hidden_width=4, n_filters=2))
        with pytest.raises(ShapeError):
            forward(m, ModelInput(coords(2)))


class TestForward:
    @pytest.mark.parametrize("kind", ["baseline_dnn", "deepkriging", "sdcnn"])
    def test_all_zero_params_give_zero(self, kind):
        m = build_model(spec(kind, hidden_width=8, n_filters=4))
        out = forward(m, ModelInput.from_coords(m.spec, coords(3)))
        assert np.array_equal(out, np.zeros(3))

    def test_pure_when_dropout_off(self):
        m = build_model(spec("sdcnn", hidden_width=8, n_filters=4), np.random.default_rng(0))
        inp = ModelInput.from_coords(m.spec, coords(4))
        ref = forward(m, inp)
        for _ in range(1000):
            assert np.array_equal(forward(m, inp), ref)

    def test_mc_mode_stochastic(self):
        m = build_model(spec("baseline_dnn"), np.random.default_rng(0))
        inp = ModelInput.from_coords(m.spec, coords(4))
        rng = np.random.default_rng(1)
        assert not np.array_equal(forward(m, inp, "mc_predict", rng), forward(m, inp, "mc_predict", rng))


class TestMCPredict:
    def test_shape_default(self):
        m = build_model(spec("deepkriging", hidden_width=8), np.random.default_rng(0))
        s = mc_predict(m, ModelInput.from_coords(m.spec, coords(5)), rng=np.random.default_rng(1))
        assert s.shape == (5, 100)

    def test_p_zero_single_sample(self):
        m = build_model(spec("sdcnn", hidden_width=8, n_filters=4, dropout_rate=0.0), np.random.default_rng(0))
        inp = ModelInput.from_coords(m.spec, coords(5))
        s = mc_predict(m, inp, 1, np.random.default_rng(1))
        assert np.array_equal(s[:, 0], forward(m, inp))
        s = mc_predict(m, inp, 20, np.random.default_rng(1))
        assert np.all(s == s[:, :1])

    def test_mean_converges_to_off_forward(self):
        # a single dropout site before a linear output keeps the ensemble mean unbiased
        m = build_model(ModelSpec("baseline_dnn", hidden_width=6), np.random.default_rng(0))
        for k, layer in m.network.named_layers():
            if k.startswith("coords") and type(layer).__name__ == "Dropout":
                layer.rate = 0.0
        inp = ModelInput.from_coords(m.spec, coords(3))
        S = 10_000
        s = mc_predict(m, inp, S, np.random.default_rng(2))
        off = forward(m, inp)
        se = s.std(axis=1, ddof=1) / np.sqrt(S)
        assert np.all(np.abs(s.mean(axis=1) - off) < 3 * se)

    def test_batchnorm_frozen(self):
        m = build_model(spec("baseline_dnn"), np.random.default_rng(0))
        before = {k: v.copy() for k, v in m.network.buffers().items()}
        mc_predict(m, ModelInput.from_coords(m.spec, coords(8)), 5, np.random.default_rng(1))
        for k, v in m.network.buffers().items():
            assert np.array_equal(before[k], v)

    def test_bad_n_samples(self):
        m = build_model(spec("baseline_dnn"))
        with pytest.raises(ValueError):
            mc_predict(m, ModelInput.from_coords(m.spec, coords(2)), 0)


@pytest.mark.parametrize("kind", ["baseline_dnn", "deepkriging", "sdcnn"])
@pytest.mark.parametrize("seed", [0, 1])
def test_assembled_gradient_check(kind, seed):
    net, inputs, y = model_graph(kind, np.random.default_rng(seed))
    res = gradcheck(net, inputs, y, n_params=25, seed=seed)
    assert len(res) == 25
    assert max_relative_error(res) < 1e-4


def test_sdcnn_gradient_check_four_samples():
    net, inputs, y = model_graph("sdcnn", np.random.default_rng(11), B=4)
    assert max_relative_error(gradcheck(net, inputs, y, n_params=25, seed=11)) < 1e-4
