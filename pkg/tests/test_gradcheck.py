import numpy as np

from chorus.nn.gradcheck import TOLERANCE, layer_checks, numeric_gradient, relative_error, run_gradcheck


def test_numeric_gradient_of_quadratic():
    x = np.array([1.0, -2.0, 0.5])
    grad = numeric_gradient(lambda: float(np.sum(x**2)), x)
    assert np.allclose(grad, 2 * x, atol=1e-8)
    assert np.array_equal(x, [1.0, -2.0, 0.5])


def test_relative_error_is_scale_free():
    assert relative_error(np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 0.0
    assert relative_error(np.array([2.0]), np.array([1.0])) == 0.5


def test_every_layer_kernel_passes():
    rows = layer_checks(seed=1)
    checks = {row["check"] for row in rows}
    assert {"conv2d", "depthwise_conv2d", "swish", "squeeze_excite", "dense", "softmax_cross_entropy"} <= checks
    worst = max(rows, key=lambda r: r["rel_error"])
    assert worst["rel_error"] < TOLERANCE, worst


def test_full_audit_passes_on_micro_network():
    report = run_gradcheck(seed=0)
    assert report["dtype"] == "float64"
    assert report["passed"] is True
    assert report["max_rel_error"] < 1e-4
    assert any(row["tensor"] == "classifier.weight" for row in report["checks"])
