import json

import numpy as np
import pytest

from backend.errors import DegenerateDataError, InvalidArgumentError, NumericalFailureError
from backend.gp import (
    OptimSettings,
    RqKernelParams,
    TrainingSet,
    classify,
    dump_model,
    elbo_and_gradient,
    exact_gp_predict,
    exact_gp_predict_many,
    fit_svgp,
    grid_inducing_inputs,
    jittered_cholesky,
    predict_arrays,
    rq_kernel,
    squared_distances,
    svgp_predict,
)

FROZEN = OptimSettings(learn_hyperparameters=False)


def random_set(rng, n: int, noise: float = 0.05) -> TrainingSet:
    inputs = np.column_stack([rng.uniform(-np.pi, np.pi, n), rng.uniform(-0.3, 0.3, n)])
    targets = np.sin(2 * inputs[:, 0]) + 3 * inputs[:, 1] + rng.normal(0, 0.1, n)
    return TrainingSet(inputs, targets, noise)


def test_kernel_at_zero_distance_is_signal_variance():
    params = RqKernelParams(2.5, 0.3, 1.7)
    assert rq_kernel([0.4, -0.1], [0.4, -0.1], params) == 2.5


def test_kernel_is_symmetric_and_decays():
    params = RqKernelParams(1.0, 0.2, 1.0)
    a, b, c = [0.0, 0.0], [0.1, 0.05], [0.5, 0.2]
    assert rq_kernel(a, b, params) == pytest.approx(rq_kernel(b, a, params))
    assert 0 < rq_kernel(a, c, params) < rq_kernel(a, b, params) < 1.0


def test_kernel_rejects_non_finite_input():
    with pytest.raises(InvalidArgumentError):
        rq_kernel([np.nan, 0.0], [0.0, 0.0], RqKernelParams(1.0, 1.0, 1.0))


def test_wrapped_azimuth_distance():
    a = np.array([[-np.pi + 0.01, 0.0]])
    b = np.array([[np.pi - 0.01, 0.0]])
    assert squared_distances(a, b, wrap_azimuth=True)[0, 0] == pytest.approx(0.02**2)
    assert squared_distances(a, b)[0, 0] == pytest.approx((2 * np.pi - 0.02) ** 2)


@pytest.mark.parametrize("params", [(0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, np.inf)])
def test_kernel_params_must_be_positive(params):
    with pytest.raises(InvalidArgumentError):
        RqKernelParams(*params)


def test_training_set_validation():
    with pytest.raises(InvalidArgumentError):
        TrainingSet(np.empty((0, 2)), np.empty(0), 0.1)
    with pytest.raises(InvalidArgumentError):
        TrainingSet([[0.0, 0.0], [0.1, 0.0]], [1.0], 0.1)
    with pytest.raises(InvalidArgumentError):
        TrainingSet([[0.0, np.inf]], [1.0], 0.1)
    with pytest.raises(InvalidArgumentError):
        TrainingSet([[0.0, 0.0]], [1.0], 0.0)
    with pytest.raises(InvalidArgumentError):
        TrainingSet([[4.0, 0.0]], [1.0], 0.1)
    with pytest.raises(InvalidArgumentError):
        TrainingSet([[np.pi, 0.0]], [1.0], 0.1)
    assert len(TrainingSet([[-np.pi, 0.0]], [1.0], 0.1)) == 1


def test_subsample_keeps_endpoints():
    inputs = np.column_stack([np.linspace(-1, 1, 100), np.zeros(100)])
    subset = TrainingSet(inputs, np.arange(100.0), 0.1).subsample(10)
    assert len(subset) == 10
    assert subset.targets[0] == 0 and subset.targets[-1] == 99


def test_exact_gp_reverts_to_prior_far_from_data():
    train = TrainingSet([[0.0, 0.0], [0.05, 0.0]], [1.0, 1.2], 0.01)
    params = RqKernelParams(1.0, 0.01, 1.0)
    prediction = exact_gp_predict(train, params, [2.0, 0.5])
    assert prediction.mean == pytest.approx(0.0, abs=1e-3)
    assert prediction.variance == pytest.approx(1.01, abs=1e-3)


def test_exact_gp_interpolates_with_small_noise():
    train = TrainingSet([[0.0, 0.0], [0.5, 0.1], [-0.4, -0.2]], [1.0, -2.0, 0.5], 1e-8)
    mean, _ = exact_gp_predict_many(train, RqKernelParams(1.0, 0.3, 1.0), train.inputs)
    np.testing.assert_allclose(mean, train.targets, atol=1e-4)


def test_sparse_prediction_matches_exact_gp():
    rng = np.random.default_rng(7)
    params = RqKernelParams(1.0, 0.5, 1.0)
    for _ in range(20):
        train = random_set(rng, int(rng.integers(5, 40)))
        model = fit_svgp(train, params, len(train), FROZEN, inducing_inputs=train.inputs)
        queries = np.column_stack([rng.uniform(-np.pi, np.pi, 25), rng.uniform(-0.4, 0.4, 25)])
        mean, variance = predict_arrays(model, queries)
        exact_mean, exact_variance = exact_gp_predict_many(train, params, queries)
        np.testing.assert_allclose(mean, exact_mean, atol=1e-5)
        np.testing.assert_allclose(variance, exact_variance, atol=1e-5)


def test_analytic_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    train = random_set(rng, 30, noise=0.1)
    kernel = RqKernelParams(1.5, 0.4, 2.0)
    inducing = grid_inducing_inputs(train.inputs, 10)
    _, gradient = elbo_and_gradient(train, kernel, inducing)

    def bound(log_params: np.ndarray) -> float:
        perturbed = TrainingSet(train.inputs, train.targets, float(np.exp(log_params[3])))
        value, _ = elbo_and_gradient(perturbed, RqKernelParams.from_log(log_params), inducing)
        return value

    base = np.append(kernel.to_log(), np.log(train.noise_variance))
    h = 1e-5
    numeric = np.array([(bound(base + h * e) - bound(base - h * e)) / (2 * h) for e in np.eye(4)])
    np.testing.assert_allclose(gradient, numeric, rtol=1e-3, atol=1e-6)


def test_optimised_bound_never_decreases():
    rng = np.random.default_rng(11)
    train = random_set(rng, 80)
    model = fit_svgp(train, RqKernelParams(0.5, 1.0, 1.0), 20, OptimSettings(max_iterations=40))
    trace = np.array(model.elbo_trace)
    assert len(trace) > 1
    assert np.all(np.diff(trace) >= 0)
    assert model.elbo == trace[-1]


def test_fitted_model_has_valid_posterior():
    rng = np.random.default_rng(5)
    train = random_set(rng, 60)
    model = fit_svgp(train, RqKernelParams(1.0, 0.5, 1.0), 15, OptimSettings(max_iterations=10, inducing_init="subset"))
    assert model.num_inducing == 15
    assert np.all(np.diag(model.variational_cov_factor) > 0)
    queries = np.column_stack([np.linspace(-np.pi, np.pi, 50), np.linspace(-1.0, 1.0, 50)])
    predictions = svgp_predict(model, queries)
    assert len(predictions) == 50
    assert all(0 <= p.variance <= model.prior_variance + 1e-9 for p in predictions)


def test_far_query_variance_signals_free_space():
    rng = np.random.default_rng(2)
    inputs = np.column_stack([rng.uniform(-1.0, 1.0, 50), rng.uniform(-0.2, 0.0, 50)])
    train = TrainingSet(inputs, np.full(50, 10.0), 0.05)
    model = fit_svgp(train, RqKernelParams(1.0, 0.05, 1.0), 50, FROZEN, inducing_inputs=inputs)
    _, variance = predict_arrays(model, np.array([[2.5, 1.2]]))
    assert 0.5 * model.prior_variance < variance[0] <= model.prior_variance + 1e-9


def test_classify_by_side():
    azimuth = np.linspace(-1.0, 1.0, 41)
    inputs = np.column_stack([azimuth, np.zeros_like(azimuth)])
    targets = (azimuth < 0).astype(float)
    train = TrainingSet(inputs, targets, 0.01)
    params = RqKernelParams(0.25, 0.1, 1.0)
    model = fit_svgp(train, params, len(train), FROZEN, inducing_inputs=inputs)

    assert classify(model, [-0.6, 0.0])
    assert not classify(model, [0.6, 0.0])
    assert exact_gp_predict(train, params, [-0.6, 0.0]).mean > 0.5
    assert exact_gp_predict(train, params, [0.6, 0.0]).mean < 0.5


def test_classify_threshold_is_strict():
    train = TrainingSet([[0.0, 0.0], [0.2, 0.0]], [1.0, 1.0], 0.01)
    model = fit_svgp(train, RqKernelParams(0.25, 0.1, 1.0), 2, FROZEN)
    mean = svgp_predict(model, [[0.1, 0.0]])[0].mean
    assert not classify(model, [0.1, 0.0], threshold=mean)
    assert classify(model, [0.1, 0.0], threshold=mean - 1e-9)


def test_identical_inputs_are_degenerate():
    train = TrainingSet([[0.1, 0.1]] * 5, [1, 2, 3, 4, 5], 0.1)
    with pytest.raises(DegenerateDataError):
        fit_svgp(train, RqKernelParams(1.0, 1.0, 1.0), 2)


@pytest.mark.parametrize("num_inducing", [0, 11])
def test_inducing_count_out_of_range(num_inducing):
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidArgumentError):
        fit_svgp(random_set(rng, 10), RqKernelParams(1.0, 1.0, 1.0), num_inducing)


def test_jitter_escalates_for_singular_matrix():
    factor, jitter = jittered_cholesky(np.ones((3, 3)))
    assert jitter >= 1e-8
    np.testing.assert_allclose(factor @ factor.T, np.ones((3, 3)) + jitter * np.eye(3), atol=1e-12)


def test_jitter_gives_up_on_negative_definite_matrix():
    with pytest.raises(NumericalFailureError):
        jittered_cholesky(-np.eye(3))


def test_grid_inducing_inputs_cover_the_data_box():
    rng = np.random.default_rng(1)
    inputs = np.column_stack([rng.uniform(-3, 3, 200), rng.uniform(-0.2, 0.1, 200)])
    grid = grid_inducing_inputs(inputs, 37)
    assert grid.shape == (37, 2)
    assert np.all(grid.min(axis=0) >= inputs.min(axis=0))
    assert np.all(grid.max(axis=0) <= inputs.max(axis=0))
    assert len(np.unique(grid, axis=0)) == 37


def test_dump_model(tmp_path):
    rng = np.random.default_rng(4)
    model = fit_svgp(random_set(rng, 20), RqKernelParams(1.0, 0.5, 1.0), 5, OptimSettings(max_iterations=3))
    path = tmp_path / "model.json"
    dump_model(model, path)
    document = json.loads(path.read_text())
    assert document["kernel"]["length_scale"] == pytest.approx(model.kernel.length_scale)
    assert len(document["inducing_inputs"]) == 5
    assert document["elbo_trace"] == list(model.elbo_trace)


def test_fixed_hyperparameters_are_not_learned():
    rng = np.random.default_rng(13)
    train = random_set(rng, 80)
    settings = OptimSettings(max_iterations=30, fixed=("signal_variance",))
    model = fit_svgp(train, RqKernelParams(20.0, 0.3, 1.0), 20, settings)
    assert model.kernel.signal_variance == pytest.approx(20.0, rel=1e-12)
    assert np.all(np.diff(model.elbo_trace) >= 0)


def test_learned_hyperparameters_stay_within_bounds():
    rng = np.random.default_rng(17)
    train = random_set(rng, 80)
    settings = OptimSettings(
        max_iterations=40, bounds={"length_scale": (0.05, 0.08), "mixture_weight": [0.5, 2.0]}
    )
    model = fit_svgp(train, RqKernelParams(1.0, 0.5, 1.0), 20, settings)
    assert 0.05 * (1 - 1e-9) <= model.kernel.length_scale <= 0.08 * (1 + 1e-9)
    assert 0.5 * (1 - 1e-9) <= model.kernel.mixture_weight <= 2.0 * (1 + 1e-9)


def test_everything_fixed_behaves_like_frozen():
    rng = np.random.default_rng(19)
    train = random_set(rng, 40)
    settings = OptimSettings(fixed=("signal_variance", "length_scale", "mixture_weight", "noise_variance"))
    model = fit_svgp(train, RqKernelParams(1.0, 0.5, 1.0), 10, settings)
    frozen = fit_svgp(train, RqKernelParams(1.0, 0.5, 1.0), 10, FROZEN)
    assert model.kernel == frozen.kernel
    assert model.elbo == pytest.approx(frozen.elbo)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"fixed": ("lengthscale",)},
        {"bounds": {"signal": (1.0, 2.0)}},
        {"bounds": {"length_scale": (0.2, 0.1)}},
        {"bounds": {"length_scale": (0.0, 0.1)}},
        {"bounds": {"length_scale": (100.0, 200.0)}},
    ],
)
def test_invalid_optimiser_bounds(kwargs):
    with pytest.raises(InvalidArgumentError):
        OptimSettings(**kwargs)
