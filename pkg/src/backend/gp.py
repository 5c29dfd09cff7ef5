"""Sparse variational Gaussian process regression with a Rational Quadratic kernel.

Inputs are directions on a sphere, `(azimuth, elevation)` in radians. The sparse
model uses the collapsed variational bound, so the inducing-point posterior is
computed in closed form from the inducing inputs and the hyperparameters, and
only the four log-hyperparameters are optimised.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from backend.errors import (
    DegenerateDataError,
    InvalidArgumentError,
    NumericalFailureError,
    OutputError,
)

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2 * np.pi)

JITTER_START = 1e-8
JITTER_MAX = 1e-2

HYPERPARAMETERS = ("signal_variance", "length_scale", "mixture_weight", "noise_variance")

# bounds on the log-hyperparameters, in HYPERPARAMETERS order
LOG_BOUNDS = np.log(
    np.array([[1e-4, 1e4], [1e-3, 10.0], [1e-2, 1e3], [1e-6, 1e2]])
)


@dataclass(frozen=True)
class RqKernelParams:
    """Rational Quadratic kernel hyperparameters."""

    signal_variance: float
    length_scale: float
    mixture_weight: float

    def __post_init__(self) -> None:
        for name in ("signal_variance", "length_scale", "mixture_weight"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidArgumentError(f"{name} must be finite and positive, got {value}")
            object.__setattr__(self, name, float(value))

    def to_log(self) -> np.ndarray:
        return np.log([self.signal_variance, self.length_scale, self.mixture_weight])

    @classmethod
    def from_log(cls, values: np.ndarray) -> "RqKernelParams":
        signal_variance, length_scale, mixture_weight = np.exp(values[:3])
        return cls(signal_variance, length_scale, mixture_weight)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Regression data on the sphere.

    Attributes:
        inputs: (n, 2) array of (azimuth, elevation) in radians
        targets: (n,) array of targets (occupancy, range or navigability)
        noise_variance: Gaussian observation noise variance
    """

    inputs: np.ndarray
    targets: np.ndarray
    noise_variance: float

    def __post_init__(self) -> None:
        inputs = np.asarray(self.inputs, dtype=float).reshape(-1, 2)
        targets = np.asarray(self.targets, dtype=float).reshape(-1)
        if len(inputs) == 0 or len(inputs) != len(targets):
            raise InvalidArgumentError(
                f"inputs and targets need equal, nonzero length, got {len(inputs)} and {len(targets)}"
            )
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise InvalidArgumentError("training data must be finite")
        if np.any(inputs[:, 0] < -np.pi) or np.any(inputs[:, 0] >= np.pi):
            raise InvalidArgumentError("azimuth must lie in [-pi, pi)")
        if np.any(np.abs(inputs[:, 1]) > np.pi / 2):
            raise InvalidArgumentError("elevation must lie in [-pi/2, pi/2]")
        if not np.isfinite(self.noise_variance) or self.noise_variance <= 0:
            raise InvalidArgumentError("noise_variance must be finite and positive")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    def __len__(self) -> int:
        return len(self.targets)

    def subsample(self, max_points: int) -> "TrainingSet":
        """Evenly strided subset of at most `max_points` points."""

        if max_points <= 0 or len(self) <= max_points:
            return self
        index = np.linspace(0, len(self) - 1, max_points).round().astype(int)
        return TrainingSet(self.inputs[index], self.targets[index], self.noise_variance)


@dataclass(frozen=True)
class Prediction:
    """Posterior predictive mean and variance at one input."""

    mean: float
    variance: float


@dataclass(frozen=True)
class OptimSettings:
    """Settings for the bound optimiser.

    Attributes:
        max_iterations: iteration budget
        tolerance: an accepted step improving the bound by less than this counts as stalled
        patience: number of consecutive stalled steps before stopping
        initial_step: initial step size in log-space
        learn_hyperparameters: false to keep the initial hyperparameters frozen
        inducing_init: "grid" for a uniform grid over the input rectangle, "subset"
            for an evenly strided subset of the training inputs
        bounds: per-hyperparameter (low, high) limits, narrowing the global ones
        fixed: hyperparameters held at their initial values
    """

    max_iterations: int = 100
    tolerance: float = 1e-6
    patience: int = 5
    initial_step: float = 0.1
    learn_hyperparameters: bool = True
    inducing_init: str = "grid"
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict, compare=False)
    fixed: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise InvalidArgumentError("the iteration budget must be at least 1")
        if self.inducing_init not in ("grid", "subset"):
            raise InvalidArgumentError(f"unknown inducing initialisation '{self.inducing_init}'")
        unknown = [name for name in [*self.bounds, *self.fixed] if name not in HYPERPARAMETERS]
        if unknown:
            raise InvalidArgumentError(f"unknown hyperparameter(s): {', '.join(unknown)}")
        bounds = {}
        for name, (low, high) in self.bounds.items():
            low, high = float(low), float(high)
            if not 0 < low <= high:
                raise InvalidArgumentError(f"bounds of {name} must satisfy 0 < low <= high")
            bounds[name] = (low, high)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "fixed", tuple(self.fixed))
        log_bounds = self.log_bounds()
        if np.any(log_bounds[:, 0] > log_bounds[:, 1]):
            raise InvalidArgumentError("hyperparameter bounds fall outside the supported range")

    def log_bounds(self) -> np.ndarray:
        """(4, 2) log-space bounds: the global ones narrowed by `bounds`."""

        log_bounds = LOG_BOUNDS.copy()
        for name, (low, high) in self.bounds.items():
            row = HYPERPARAMETERS.index(name)
            log_bounds[row] = max(log_bounds[row, 0], np.log(low)), min(log_bounds[row, 1], np.log(high))
        return log_bounds

    def free_mask(self) -> np.ndarray:
        return np.array([name not in self.fixed for name in HYPERPARAMETERS])


@dataclass(frozen=True, eq=False)
class SgpModel:
    """A fitted sparse GP.

    The variational posterior is stored in whitened form: with `L` the Cholesky
    factor of the inducing Gram matrix, `u = L v` and `q(v) = N(variational_mean, R R^T)`
    where `R` is `variational_cov_factor`.
    """

    kernel: RqKernelParams
    inducing_inputs: np.ndarray
    variational_mean: np.ndarray
    variational_cov_factor: np.ndarray
    noise_variance: float
    wrap_azimuth: bool = False
    elbo_trace: tuple[float, ...] = ()
    inducing_cholesky: np.ndarray = field(default=None, repr=False)

    @property
    def num_inducing(self) -> int:
        return len(self.inducing_inputs)

    @property
    def prior_variance(self) -> float:
        """Predictive variance far from all data."""

        return self.kernel.signal_variance + self.noise_variance

    @property
    def elbo(self) -> float:
        return self.elbo_trace[-1] if self.elbo_trace else float("nan")


def _check_finite(values: np.ndarray, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError(f"{name} must be finite")
    return values


def squared_distances(a: np.ndarray, b: np.ndarray, wrap_azimuth: bool = False) -> np.ndarray:
    """Pairwise squared angular distances between two sets of directions.

    Args:
        a: (n, 2) directions
        b: (m, 2) directions
        wrap_azimuth: measure the azimuth difference on the circle

    Returns:
        (n, m) squared distances
    """

    d_az = np.abs(a[:, None, 0] - b[None, :, 0])
    if wrap_azimuth:
        d_az = np.minimum(d_az, 2 * np.pi - d_az)
    d_el = a[:, None, 1] - b[None, :, 1]
    return d_az**2 + d_el**2


def _rq_terms(r2: np.ndarray, params: RqKernelParams) -> tuple[np.ndarray, np.ndarray]:
    u = 1.0 + r2 / (2.0 * params.mixture_weight * params.length_scale**2)
    return params.signal_variance * u ** (-params.mixture_weight), u


def rq_gram(a: np.ndarray, b: np.ndarray, params: RqKernelParams, wrap_azimuth: bool = False) -> np.ndarray:
    """Rational Quadratic Gram matrix between two sets of directions."""

    return _rq_terms(squared_distances(a, b, wrap_azimuth), params)[0]


def rq_kernel(a, b, params: RqKernelParams, wrap_azimuth: bool = False) -> float:
    """Rational Quadratic kernel between two directions.

    k(a, b) = s2 * (1 + |a - b|^2 / (2 * alpha * l^2))^(-alpha)

    Args:
        a: (azimuth, elevation)
        b: (azimuth, elevation)
        params: kernel hyperparameters
        wrap_azimuth: measure the azimuth difference on the circle

    Returns:
        kernel value in (0, signal_variance]

    Raises:
        InvalidArgumentError: if either input is not finite
    """

    a = _check_finite(a, "kernel input").reshape(1, 2)
    b = _check_finite(b, "kernel input").reshape(1, 2)
    return float(rq_gram(a, b, params, wrap_azimuth)[0, 0])


def _rq_log_gradients(K: np.ndarray, r2: np.ndarray, u: np.ndarray, params: RqKernelParams):
    """Derivatives of a Gram matrix w.r.t. log signal variance, log length scale and log mixture weight."""

    mixture = params.mixture_weight
    d_signal = K
    d_length = K * (r2 / params.length_scale**2) / u
    d_mixture = K * mixture * ((u - 1.0) / u - np.log(u))
    return d_signal, d_length, d_mixture


def jittered_cholesky(matrix: np.ndarray, start: float = JITTER_START, maximum: float = JITTER_MAX) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of `matrix` with escalating diagonal jitter.

    The jitter starts at `start` and grows tenfold up to `maximum`.

    Returns:
        (lower factor, jitter used)

    Raises:
        NumericalFailureError: if the factorisation fails at the largest jitter
    """

    jitter = start
    eye = np.eye(len(matrix))
    while jitter <= maximum * (1 + 1e-9):
        try:
            factor = cholesky(matrix + jitter * eye, lower=True, check_finite=False)
            if jitter > start:
                logger.warning("Cholesky needed jitter %.1e", jitter)
            return factor, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalFailureError(f"Cholesky failed with jitter up to {maximum:.0e}")


def exact_gp_predict(train: TrainingSet, kernel: RqKernelParams, query, wrap_azimuth: bool = False) -> Prediction:
    """Full GP posterior at one query direction.

    mean = K_qn (s I + K_nn)^-1 y, variance = k(q, q) - K_qn (s I + K_nn)^-1 K_nq + s

    Args:
        train: training data; its noise variance is `s`
        kernel: kernel hyperparameters
        query: (azimuth, elevation)
        wrap_azimuth: measure the azimuth difference on the circle

    Returns:
        predictive mean and variance

    Raises:
        NumericalFailureError: if the Gram matrix cannot be factorised
    """

    query = _check_finite(query, "query").reshape(1, 2)
    mean, variance = exact_gp_predict_many(train, kernel, query, wrap_azimuth)
    return Prediction(float(mean[0]), float(variance[0]))


def exact_gp_predict_many(train: TrainingSet, kernel: RqKernelParams, queries: np.ndarray, wrap_azimuth: bool = False):
    """Vectorised form of `exact_gp_predict`; returns (means, variances) arrays."""

    queries = _check_finite(queries, "queries").reshape(-1, 2)
    K = rq_gram(train.inputs, train.inputs, kernel, wrap_azimuth)
    K[np.diag_indices_from(K)] += train.noise_variance
    L, _ = jittered_cholesky(K)
    Kqn = rq_gram(queries, train.inputs, kernel, wrap_azimuth)
    weights = cho_solve((L, True), train.targets)
    mean = Kqn @ weights
    tmp = solve_triangular(L, Kqn.T, lower=True)
    variance = kernel.signal_variance - np.sum(tmp**2, axis=0) + train.noise_variance
    return mean, np.maximum(variance, 0.0)


def grid_inducing_inputs(inputs: np.ndarray, num_inducing: int) -> np.ndarray:
    """Uniform cell-centred grid of exactly `num_inducing` points over the bounding box of `inputs`.

    The grid aspect follows the box aspect; when the grid has more nodes than
    requested, evenly spaced nodes are kept.
    """

    lo = inputs.min(axis=0)
    hi = inputs.max(axis=0)
    width, height = hi - lo
    if height <= 0 or width <= 0:
        rows, cols = (1, num_inducing) if height <= 0 else (num_inducing, 1)
    else:
        cols = int(np.clip(round(np.sqrt(num_inducing * width / height)), 1, num_inducing))
        rows = int(np.ceil(num_inducing / cols))
    az = lo[0] + (np.arange(cols) + 0.5) * width / cols
    el = lo[1] + (np.arange(rows) + 0.5) * height / rows
    grid = np.stack(np.meshgrid(az, el), axis=-1).reshape(-1, 2)
    keep = np.linspace(0, len(grid) - 1, num_inducing).round().astype(int)
    return grid[keep]


def subset_inducing_inputs(inputs: np.ndarray, num_inducing: int) -> np.ndarray:
    """Evenly strided subset of the training inputs."""

    keep = np.linspace(0, len(inputs) - 1, num_inducing).round().astype(int)
    return inputs[keep].copy()


@dataclass
class _BoundTerms:
    """Intermediate quantities of the collapsed bound shared by value, gradient and posterior."""

    elbo: float
    L: np.ndarray
    A: np.ndarray
    LB: np.ndarray
    c: np.ndarray
    params: RqKernelParams
    noise: float
    # (r2, K, u) for the inducing-inducing and inducing-data blocks
    mm: tuple[np.ndarray, np.ndarray, np.ndarray]
    mn: tuple[np.ndarray, np.ndarray, np.ndarray]
    gradient: np.ndarray | None = None


def _collapsed_bound(
    inputs: np.ndarray,
    targets: np.ndarray,
    inducing: np.ndarray,
    log_params: np.ndarray,
    wrap_azimuth: bool,
    with_gradient: bool,
) -> _BoundTerms:
    """Collapsed variational lower bound, optionally with its log-hyperparameter gradient.

    F = log N(y | 0, Q_nn + s I) - tr(K_nn - Q_nn) / (2 s),  Q_nn = K_nm K_mm^-1 K_mn
    """

    params = RqKernelParams.from_log(log_params)
    s = float(np.exp(log_params[3]))
    n, m = len(targets), len(inducing)

    r2_mm = squared_distances(inducing, inducing, wrap_azimuth)
    r2_mn = squared_distances(inducing, inputs, wrap_azimuth)
    Kmm, u_mm = _rq_terms(r2_mm, params)
    Kmn, u_mn = _rq_terms(r2_mn, params)

    L, _ = jittered_cholesky(Kmm)
    A = solve_triangular(L, Kmn, lower=True, check_finite=False)
    B = np.eye(m) + (A @ A.T) / s
    try:
        LB = cholesky(B, lower=True, check_finite=False)
    except np.linalg.LinAlgError as err:
        raise NumericalFailureError("posterior factorisation failed") from err
    Ay = A @ targets
    c = solve_triangular(LB, Ay, lower=True, check_finite=False)

    trace_q = float(np.sum(A**2))
    trace_k = n * params.signal_variance
    yy = float(targets @ targets)
    cc = float(c @ c)
    elbo = (
        -0.5 * n * LOG_2PI
        - 0.5 * n * np.log(s)
        - np.sum(np.log(np.diag(LB)))
        - 0.5 * (yy / s - cc / s**2)
        - 0.5 * (trace_k - trace_q) / s
    )
    terms = _BoundTerms(float(elbo), L, A, LB, c, params, s, (r2_mm, Kmm, u_mm), (r2_mn, Kmn, u_mn))
    if with_gradient:
        _add_gradient(terms, targets)
    return terms


def _add_gradient(terms: _BoundTerms, targets: np.ndarray) -> None:
    """Fill in the gradient of the bound w.r.t. (log s2, log l, log alpha, log noise)."""

    L, A, LB, c, s = terms.L, terms.A, terms.LB, terms.c, terms.noise
    n, m = len(targets), len(L)
    trace_q = float(np.sum(A**2))
    trace_k = n * terms.params.signal_variance

    # alpha = (Q_nn + s I)^-1 y
    binv_ay = solve_triangular(LB.T, c, lower=False, check_finite=False)
    alpha = targets / s - (A.T @ binv_ay) / s**2
    P = solve_triangular(L.T, A, lower=False, check_finite=False)
    binv_a = cho_solve((LB, True), A, check_finite=False)
    M1 = 0.5 * np.outer(P @ alpha, alpha) + (0.5 / s) * solve_triangular(
        L.T, A - binv_a, lower=False, check_finite=False
    )
    M2 = M1 @ P.T

    r2_mm, Kmm, u_mm = terms.mm
    r2_mn, Kmn, u_mn = terms.mn
    d_mm = _rq_log_gradients(Kmm, r2_mm, u_mm, terms.params)
    d_mn = _rq_log_gradients(Kmn, r2_mn, u_mn, terms.params)
    gradient = np.empty(4)
    for i in range(3):
        gradient[i] = 2.0 * np.sum(M1 * d_mn[i]) - np.sum(M2 * d_mm[i])
    gradient[0] -= 0.5 * trace_k / s

    lb_inv = solve_triangular(LB, np.eye(m), lower=True, check_finite=False)
    trace_binv = float(np.sum(lb_inv**2))
    trace_sigma_inv = n / s - (m - trace_binv) / s
    d_noise = 0.5 * float(alpha @ alpha) - 0.5 * trace_sigma_inv + 0.5 * (trace_k - trace_q) / s**2
    gradient[3] = s * d_noise

    terms.gradient = gradient


def elbo_and_gradient(
    train: TrainingSet,
    kernel: RqKernelParams,
    inducing_inputs: np.ndarray,
    wrap_azimuth: bool = False,
) -> tuple[float, np.ndarray]:
    """Collapsed bound and its gradient w.r.t. (log s2, log l, log alpha, log noise).

    The noise variance is taken from `train`.
    """

    log_params = np.append(kernel.to_log(), np.log(train.noise_variance))
    terms = _collapsed_bound(
        train.inputs, train.targets, np.asarray(inducing_inputs, dtype=float), log_params, wrap_azimuth, True
    )
    return terms.elbo, terms.gradient


def _check_degenerate(train: TrainingSet) -> None:
    if len(train) > 1 and np.all(np.ptp(train.inputs, axis=0) == 0):
        raise DegenerateDataError("all training inputs are identical")


def _optimise(train: TrainingSet, inducing: np.ndarray, log_params: np.ndarray, optim: OptimSettings, wrap_azimuth: bool):
    """Sign-based gradient ascent with per-parameter adaptive steps.

    A proposal is accepted only if it does not lower the bound, so the recorded
    trace of accepted bounds is non-decreasing. Gradients are only evaluated at
    accepted points; fixed hyperparameters never move.
    """

    free = optim.free_mask()
    learn = optim.learn_hyperparameters and free.any()
    terms = _collapsed_bound(train.inputs, train.targets, inducing, log_params, wrap_azimuth, learn)
    trace = [terms.elbo]
    if not learn:
        return log_params, terms, trace

    bounds = optim.log_bounds()
    steps = np.where(free, optim.initial_step, 0.0)
    stalled = 0
    for iteration in range(optim.max_iterations):
        proposal = np.clip(log_params + steps * np.sign(terms.gradient), bounds[:, 0], bounds[:, 1])
        proposal = np.where(free, proposal, log_params)
        if np.allclose(proposal, log_params):
            break
        try:
            candidate = _collapsed_bound(train.inputs, train.targets, inducing, proposal, wrap_azimuth, False)
        except NumericalFailureError:
            candidate = None

        if candidate is not None and np.isfinite(candidate.elbo) and candidate.elbo >= terms.elbo:
            _add_gradient(candidate, train.targets)
            same_sign = np.sign(candidate.gradient) == np.sign(terms.gradient)
            steps = np.where(free, np.clip(np.where(same_sign, steps * 1.2, steps * 0.5), 1e-6, 1.0), 0.0)
            improvement = candidate.elbo - terms.elbo
            log_params, terms = proposal, candidate
            trace.append(terms.elbo)
            stalled = stalled + 1 if improvement < optim.tolerance else 0
            if stalled >= optim.patience:
                break
        else:
            steps *= 0.5
            if np.all(steps[free] < 1e-6):
                break
        logger.debug("iteration %d: elbo %.6f", iteration, terms.elbo)

    return log_params, terms, trace


def fit_svgp(
    train: TrainingSet,
    initial_kernel: RqKernelParams,
    num_inducing: int,
    optim: OptimSettings = OptimSettings(),
    inducing_inputs: np.ndarray | None = None,
    wrap_azimuth: bool = False,
) -> SgpModel:
    """Fit a sparse variational GP by maximising the collapsed bound.

    Args:
        train: training data; its noise variance seeds the noise hyperparameter
        initial_kernel: starting hyperparameters (previous cycle's for warm starts)
        num_inducing: number of inducing inputs, in [1, len(train)]
        optim: optimiser settings
        inducing_inputs: explicit inducing inputs, overriding `optim.inducing_init`
        wrap_azimuth: measure azimuth differences on the circle (360 degree surfaces)

    Returns:
        fitted model

    Raises:
        InvalidArgumentError: if `num_inducing` is out of range
        DegenerateDataError: if all training inputs are identical
        NumericalFailureError: if the factorisations fail
    """

    if not 1 <= num_inducing <= len(train):
        raise InvalidArgumentError(f"num_inducing must be in [1, {len(train)}], got {num_inducing}")
    _check_degenerate(train)

    if inducing_inputs is not None:
        inducing = _check_finite(inducing_inputs, "inducing inputs").reshape(-1, 2)
    elif optim.inducing_init == "subset":
        inducing = subset_inducing_inputs(train.inputs, num_inducing)
    else:
        inducing = grid_inducing_inputs(train.inputs, num_inducing)

    log_params = np.clip(
        np.append(initial_kernel.to_log(), np.log(train.noise_variance)), *optim.log_bounds().T
    )
    log_params, terms, trace = _optimise(train, inducing, log_params, optim, wrap_azimuth)
    noise = float(np.exp(log_params[3]))

    # optimal whitened posterior: mean B^-1 A y / s, covariance B^-1
    mean = solve_triangular(terms.LB.T, terms.c, lower=False, check_finite=False) / noise
    lb_inv = solve_triangular(terms.LB, np.eye(len(inducing)), lower=True, check_finite=False)
    cov_factor, _ = jittered_cholesky(lb_inv.T @ lb_inv, start=1e-12)

    logger.debug(
        "fitted sgp: n=%d m=%d elbo=%.4f after %d steps", len(train), len(inducing), trace[-1], len(trace) - 1
    )
    return SgpModel(
        kernel=RqKernelParams.from_log(log_params),
        inducing_inputs=inducing,
        variational_mean=mean,
        variational_cov_factor=cov_factor,
        noise_variance=noise,
        wrap_azimuth=wrap_azimuth,
        elbo_trace=tuple(trace),
        inducing_cholesky=terms.L,
    )


def predict_arrays(model: SgpModel, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Predictive means and variances (noise included) for an (n, 2) array of queries."""

    queries = _check_finite(queries, "queries").reshape(-1, 2)
    if len(queries) == 0:
        return np.empty(0), np.empty(0)
    L = model.inducing_cholesky
    if L is None:
        K = rq_gram(model.inducing_inputs, model.inducing_inputs, model.kernel, model.wrap_azimuth)
        L, _ = jittered_cholesky(K)
    Kmq = rq_gram(model.inducing_inputs, queries, model.kernel, model.wrap_azimuth)
    Aq = solve_triangular(L, Kmq, lower=True, check_finite=False)
    mean = Aq.T @ model.variational_mean
    spread = model.variational_cov_factor.T @ Aq
    variance = (
        model.kernel.signal_variance
        - np.sum(Aq**2, axis=0)
        + np.sum(spread**2, axis=0)
        + model.noise_variance
    )
    return mean, np.maximum(variance, 0.0)


def svgp_predict(model: SgpModel, queries) -> list[Prediction]:
    """Sparse posterior prediction, one `Prediction` per query in order."""

    mean, variance = predict_arrays(model, np.asarray(queries, dtype=float))
    return [Prediction(float(mu), float(var)) for mu, var in zip(mean, variance)]


def classify(model: SgpModel, query, threshold: float = 0.5) -> bool:
    """Threshold the predicted navigability; navigable iff the mean is strictly above `threshold`."""

    return bool(classify_many(model, np.asarray(query, dtype=float).reshape(1, 2), threshold)[0])


def classify_many(model: SgpModel, queries: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Vectorised `classify`."""

    mean, _ = predict_arrays(model, queries)
    return mean > threshold


def dump_model(model: SgpModel, path: str | Path) -> None:
    """Write hyperparameters, inducing inputs and the bound trace to a JSON file."""

    document = {
        "kernel": {
            "signal_variance": model.kernel.signal_variance,
            "length_scale": model.kernel.length_scale,
            "mixture_weight": model.kernel.mixture_weight,
        },
        "noise_variance": model.noise_variance,
        "wrap_azimuth": model.wrap_azimuth,
        "inducing_inputs": model.inducing_inputs.tolist(),
        "elbo_trace": list(model.elbo_trace),
    }
    try:
        Path(path).write_text(json.dumps(document, indent=2))
    except OSError as err:
        raise OutputError(path, err.strerror or str(err)) from err
