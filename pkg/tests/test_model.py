from collections import OrderedDict

import numpy as np
import pytest
from pydantic import ValidationError

from chorus.core.errors import ShapeMismatch, TooFewFrames
from chorus.nn import Network, NetworkConfig
from chorus.nn.layers import batch_norm, conv2d, dense, global_average_pool, softmax, swish
from chorus.nn.model import BlockSpec, count_parameters, model_backward, model_forward, parameter_shapes


def _batch(n, n_mels, frames, seed=0, dtype=np.float32):
    return np.random.default_rng(seed).standard_normal((n, 1, n_mels, frames)).astype(dtype)


def test_default_network_logits_shape():
    net = Network(NetworkConfig(), seed=0)
    for frames in (40, 80):
        probs = net.predict_proba(_batch(2, 64, frames))
        assert probs.shape == (2, 182)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-5)


@pytest.mark.parametrize(
    "config",
    [
        NetworkConfig(),
        NetworkConfig.micro(),
        NetworkConfig(
            n_classes=7,
            n_mels=32,
            stem_channels=8,
            blocks=[BlockSpec(expand_ratio=3, out_channels=12, stride=2, repeats=3, se_ratio=0.1, kernel_size=5)],
            head_channels=20,
        ),
    ],
)
def test_parameter_count_matches_declared_shapes(config):
    shapes = parameter_shapes(config)
    assert count_parameters(config) == sum(int(np.prod(s)) for s in shapes.values())
    net = Network(config)
    assert sum(p.size for p in net.params.values()) == count_parameters(config)


def test_gradients_cover_every_parameter(micro_config):
    net = Network(micro_config, seed=3)
    loss, grads, probs = net.loss_and_gradients(_batch(3, 8, 12), [0, 1, 0])
    assert isinstance(grads, OrderedDict)
    assert list(grads) == list(net.params)
    for name, g in grads.items():
        assert g.shape == net.params[name].shape, name
    assert np.isfinite(loss)
    assert probs.shape == (3, 2)


def test_infer_mode_is_deterministic_and_stateless(micro_config):
    net = Network(micro_config, seed=1).set_mode("infer")
    x = _batch(2, 8, 16)
    before = {k: v.copy() for k, v in net.buffers().items()}
    a = net.forward(x)
    b = net.forward(x)
    assert np.array_equal(a, b)
    for name, value in net.buffers().items():
        assert np.array_equal(value, before[name])


def test_predict_proba_restores_mode(micro_config):
    net = Network(micro_config)
    net.predict_proba(_batch(1, 8, 8))
    assert net.mode == "train"


def test_same_seed_same_weights(micro_config):
    a, b, c = Network(micro_config, seed=5), Network(micro_config, seed=5), Network(micro_config, seed=6)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    assert not np.array_equal(a.params["stem.conv.weight"], c.params["stem.conv.weight"])


def test_input_validation(micro_config):
    net = Network(micro_config)
    with pytest.raises(TooFewFrames):
        net.forward(_batch(1, 8, micro_config.total_stride - 1))
    with pytest.raises(ShapeMismatch):
        net.forward(_batch(1, 16, 12))
    with pytest.raises(ShapeMismatch):
        net.forward(np.zeros((1, 8, 12)))


def test_residual_blocks_with_zero_projection_are_identity():
    config = NetworkConfig(
        n_classes=3,
        n_mels=8,
        stem_channels=4,
        blocks=[BlockSpec(expand_ratio=1, out_channels=4, stride=1, repeats=2, se_ratio=0.5)],
        head_channels=6,
    )
    net = Network(config, seed=2, dtype=np.float64).set_mode("infer")
    for name in net.params:
        if name.endswith("project.conv.weight"):
            net.params[name][...] = 0.0
    x = _batch(2, 8, 10, dtype=np.float64)

    p = net.params
    h = swish(batch_norm(conv2d(x, p["stem.conv.weight"], None, 2, 1), p["stem.bn.gamma"], p["stem.bn.beta"], net.bn["stem.bn"], "infer"))
    h = swish(batch_norm(conv2d(h, p["head.conv.weight"], None, 1, 0), p["head.bn.gamma"], p["head.bn.beta"], net.bn["head.bn"], "infer"))
    expected = dense(global_average_pool(h), p["classifier.weight"], p["classifier.bias"])
    assert np.allclose(net.forward(x), expected, atol=1e-12)


def test_classifier_gradient_hand_case(micro_config):
    net = Network(micro_config, seed=4, dtype=np.float64).set_mode("infer")
    x = _batch(3, 8, 12, dtype=np.float64)
    labels = [1, 0, 1]
    _, grads, probs = net.loss_and_gradients(x, labels)
    pooled = net.forward_features(x)
    onehot = np.eye(2)[labels]
    assert np.allclose(grads["classifier.weight"], (probs - onehot).T @ pooled / 3)
    assert np.allclose(grads["classifier.bias"], (probs - onehot).mean(axis=0))


def test_confident_correct_prediction_has_zero_bias_gradient(micro_config):
    net = Network(micro_config, seed=4, dtype=np.float64).set_mode("infer")
    net.params["classifier.weight"][...] = 0.0
    net.params["classifier.bias"][...] = [1000.0, 0.0]
    grads = model_backward(net, _batch(2, 8, 12, dtype=np.float64), [0, 0])
    assert np.allclose(grads["classifier.bias"], 0.0, atol=1e-9)
    assert np.allclose(softmax(model_forward(net, _batch(1, 8, 12, dtype=np.float64))), [[1.0, 0.0]])


def test_state_dict_round_trip(micro_config):
    a = Network(micro_config, seed=1)
    a.loss_and_gradients(_batch(4, 8, 12), [0, 1, 1, 0])
    b = Network(micro_config, seed=99)
    b.load_state_dict(a.state_dict())
    for name, value in a.state_dict().items():
        assert np.array_equal(value, b.state_dict()[name])
    with pytest.raises(ShapeMismatch):
        Network(NetworkConfig.micro(n_classes=5, n_mels=8)).load_state_dict(a.state_dict())


def test_config_validation():
    with pytest.raises(ValidationError):
        BlockSpec(out_channels=8, stride=3)
    with pytest.raises(ValidationError):
        BlockSpec(out_channels=8, se_ratio=0.0)
    with pytest.raises(ValidationError):
        NetworkConfig(n_classes=1)
