"""Monte Carlo estimators for the Markov semigroup of the Galerkin SDE.

Trajectories are simulated in ``u`` form,

    u <- e^{-h} u - dt phi1(h) Theta_R(||A^{1/4} u||^2) B(u) + sigma xi,

with ``sigma`` the exact OU transition scale.  With ``Theta = 1`` this is
the same sequence of states as ``v + z`` from :func:`stochns.solver.integrate`
driven by the OU path of the same stream.  Trajectory ``i`` of an
estimator seeded with ``seed`` draws from ``Streams(seed)`` with
``traj = i``, so results do not depend on how the batch is chunked.
"""

import json
from dataclasses import asdict, dataclass
from functools import partial
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from .noise import Coloring, ou_coefficients, _step_count
from .nonlinearity import TriadTable
from .parallel import map_trajectories
from .rng import Streams
from .solver import Cutoff, _check_finite, _fit, phi1, step_v
from .spectral import Spectrum, fractional_norm

OBSERVABLE_KINDS = ("mode", "norm", "tanh", "constant")


@dataclass(frozen=True)
class Observable:
    """Test function on coefficient vectors.

    ``mode``: ``u_k ** power``; ``norm``: ``||A^gamma u||`` (needs the
    spectrum); ``tanh``: ``tanh(u_k / scale)``; ``constant``: ``value``.
    Evaluation is batched over leading axes.
    """

    kind: str
    k: int = 0
    power: int = 1
    gamma: float = 0.0
    scale: float = 1.0
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in OBSERVABLE_KINDS:
            raise ValueError(f"observable kind must be one of {OBSERVABLE_KINDS}")
        if self.k < 0:
            raise ValueError("mode index must be nonnegative")
        if self.kind == "tanh" and not self.scale > 0:
            raise ValueError("tanh scale must be positive")

    @property
    def bounded(self):
        return self.kind in ("tanh", "constant")

    @property
    def sup(self):
        """``||phi||_inf`` (infinite for the unbounded kinds)."""
        if self.kind == "tanh":
            return 1.0
        if self.kind == "constant":
            return abs(self.value)
        return np.inf

    def __call__(self, u, s=None):
        u = np.asarray(u, dtype=float)
        if self.kind == "mode":
            return u[..., self.k] ** self.power
        if self.kind == "tanh":
            return np.tanh(u[..., self.k] / self.scale)
        if self.kind == "constant":
            return np.full(u.shape[:-1], float(self.value))
        if s is None:
            raise ValueError("norm observable needs the spectrum")
        return fractional_norm(u, s.truncate(u.shape[-1]), self.gamma)

    def describe(self):
        return asdict(self)


@dataclass(frozen=True)
class MCConfig:
    """Monte Carlo plumbing: sample count, horizon, burn-in, thinning, seed."""

    M: int
    t: float = 1.0
    burn_in: float = 0.0
    thinning: int = 1
    seed: int = 0
    chunk: int = 512

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("need M >= 2 samples for a standard error")
        if self.t < 0:
            raise ValueError("horizon must be nonnegative")
        if self.burn_in < 0 or (self.t > 0 and self.burn_in >= self.t):
            raise ValueError("burn-in must lie in [0, t)")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.chunk < 1:
            raise ValueError("chunk must be >= 1")


@dataclass(frozen=True)
class Model:
    """Everything that defines the simulated dynamics.

    ``cutoff=None`` means the untruncated system (``Theta = 1``).
    """

    spectrum: Spectrum
    table: TriadTable
    coloring: Coloring
    dt: float
    cutoff: Cutoff = None

    def __post_init__(self):
        if not self.spectrum.n == self.table.n == self.coloring.n:
            raise ValueError("spectrum, table and coloring sizes differ")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def n(self):
        return self.spectrum.n

    def with_(self, **kw):
        d = {"spectrum": self.spectrum, "table": self.table, "coloring": self.coloring,
             "dt": self.dt, "cutoff": self.cutoff}
        d.update(kw)
        return Model(**d)

    def describe(self):
        return {"spectrum": self.spectrum.describe(), "nnz": self.table.nnz,
                "coloring": self.coloring.descriptor, "dt": self.dt,
                "R": None if self.cutoff is None else self.cutoff.R}


def _steps(model, t):
    return 0 if t == 0 else _step_count(t, model.dt)


def _drift(model, u):
    f = model.table.bilinear(u, u)
    if model.cutoff is None:
        return f
    r = np.sum(model.spectrum.eigenvalues ** 0.5 * u ** 2, axis=-1)
    return model.cutoff(r)[..., None] * f


def _step(model, u, xi, coeff):
    decay, weight, sigma = coeff
    return decay * u - weight * _drift(model, u) + sigma * xi


def _coefficients(model):
    h = model.spectrum.eigenvalues * model.dt
    decay, sigma = ou_coefficients(model.dt, model.coloring, model.spectrum)
    return decay, model.dt * phi1(h), sigma


def _run(model, x, t, seed, traj, visit=None):
    """March a batch to time ``t``; ``visit(m, u)`` sees every state."""
    streams = Streams(seed)
    traj = np.asarray(traj)
    u = np.broadcast_to(_fit(x, model.n), traj.shape + (model.n,)).copy()
    coeff = _coefficients(model)
    if visit is not None:
        visit(0, u)
    for m in range(_steps(model, t)):
        xi = streams.normals(m, model.n, traj)
        nxt = _step(model, u, xi, coeff)
        _check_finite(nxt, m + 1, u)
        u = nxt
        if visit is not None:
            visit(m + 1, u)
    return u


def simulate_u(model, x, t, seed, traj=0):
    """Endpoint ``u(t)`` for trajectories ``traj`` of stream family ``seed``."""
    return _run(model, x, t, seed, traj)


def _endpoint_block(model, x, t, seed, block):
    return _run(model, x, t, seed, block)


def endpoints(model, x, t, mc, seed=None, workers=None):
    """``(M, n)`` endpoint samples, chunked over the worker pool."""
    seed = mc.seed if seed is None else seed
    fn = partial(_endpoint_block, model, x, t, seed)
    return map_trajectories(fn, mc.M, mc.chunk, workers)


def _summary(samples):
    samples = np.asarray(samples, dtype=float)
    M = samples.shape[0]
    return {"mean": float(np.mean(samples)),
            "stderr": float(np.std(samples, ddof=1) / np.sqrt(M)), "M": int(M)}


def semigroup_estimate(phi, model, x, t, mc, workers=None):
    """``P_t phi(x)`` by plain Monte Carlo: ``{mean, stderr, M}``."""
    if t == 0:
        val = float(phi(_fit(x, model.n), model.spectrum))
        return {"mean": val, "stderr": 0.0, "M": mc.M}
    u = endpoints(model, x, t, mc, workers=workers)
    return _summary(phi(u, model.spectrum))


def _time_average_block(phi, model, x, T, burn, thin, seed, block):
    start = int(round(burn / model.dt))
    acc = np.zeros(len(block))
    count = [0]

    def visit(m, u):
        if m >= start and (m - start) % thin == 0:
            acc[:] += phi(u, model.spectrum)
            count[0] += 1

    _run(model, x, T, seed, block, visit)
    return acc / count[0]


def time_average(phi, model, x, T, mc, workers=None):
    """Per-trajectory time average of ``phi(u(t))`` over ``[burn_in, T]``.

    Each of the ``M`` trajectories contributes one average over its grid
    states after burn-in (every ``thinning``-th state); mean and standard
    error are taken across trajectories.
    """
    if not mc.burn_in < T:
        raise ValueError("burn-in must be shorter than the horizon")
    fn = partial(_time_average_block, phi, model, x, T, mc.burn_in, mc.thinning, mc.seed)
    return _summary(map_trajectories(fn, mc.M, mc.chunk, workers))


def default_burn_in(s):
    """Ten relaxation times of the slowest mode."""
    return 10.0 / s.eigenvalues[0]


def decorrelation_time(series, dt):
    """First lag where the autocorrelation of ``series`` drops below ``1/e``."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    var = np.dot(x, x)
    if var == 0:
        return dt
    for lag in range(1, x.size // 2):
        if np.dot(x[:-lag], x[lag:]) / var < np.exp(-1):
            return lag * dt
    return x.size // 2 * dt


def histogram_tv(a, b, edges=None):
    """Half-L1 distance of two normalized histograms on common bins.

    Bins default to the Freedman-Diaconis rule on the pooled sample.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if edges is None:
        pooled = np.concatenate([a, b])
        if np.ptp(pooled) == 0:
            return 0.0, np.array([pooled[0] - 0.5, pooled[0] + 0.5]), \
                np.array([a.size]), np.array([b.size])
        edges = np.histogram_bin_edges(pooled, bins="fd")
    ca, _ = np.histogram(a, edges)
    cb, _ = np.histogram(b, edges)
    tv = 0.5 * np.sum(np.abs(ca / a.size - cb / b.size))
    return float(tv), edges, ca, cb


def tv_distance_proxy(model, x, y, t, observables, mc, workers=None):
    """Histogram total-variation proxy between the laws of ``u_x(t)`` and ``u_y(t)``.

    The two ensembles use independent stream families, so ``x = y`` shows
    the Monte Carlo floor rather than an exact zero.  Returns the max over
    observables plus the histograms behind each value.
    """
    if len(observables) < 2:
        raise ValueError("need at least two observables")
    root = Streams(mc.seed)
    ux = endpoints(model, x, t, mc, seed=root.split(0).seed, workers=workers)
    uy = endpoints(model, y, t, mc, seed=root.split(1).seed, workers=workers)
    per, hists = [], []
    for phi in observables:
        tv, edges, ca, cb = histogram_tv(phi(ux, model.spectrum), phi(uy, model.spectrum))
        per.append(tv)
        hists.append({"edges": edges, "counts_x": ca, "counts_y": cb})
    return {"value": float(max(per)), "per_observable": per, "histograms": hists,
            "floor": 2.0 / np.sqrt(mc.M)}


# ---------------------------------------------------------------------------
# derivative flow


def _tangent_step(model, u, U, coeff):
    """Exact derivative of one ``u`` step in direction ``U``."""
    decay, weight, _ = coeff
    lam = model.spectrum.eigenvalues
    t = model.table
    dB = t.bilinear(U, u) + t.bilinear(u, U)
    if model.cutoff is None:
        return decay * U - weight * dB
    r = np.sum(lam ** 0.5 * u ** 2, axis=-1)
    dr = 2.0 * np.sum(lam ** 0.5 * u * U, axis=-1)
    lin = (model.cutoff.derivative(r) * dr)[..., None] * t.bilinear(u, u) \
        + model.cutoff(r)[..., None] * dB
    return decay * U - weight * lin


def derivative_flow(model, x, h, T, seed, traj=0):
    """Nominal states ``u`` and tangents ``U = D_x u . h`` on the grid.

    Both arrays have shape ``(steps+1,) + traj.shape + (n,)``.  ``U``
    is the exact Jacobian-vector product of the discrete scheme, which is
    the exponential-Euler discretization of the linearized equation.
    """
    streams = Streams(seed)
    traj = np.asarray(traj)
    shape = traj.shape + (model.n,)
    u = np.broadcast_to(_fit(x, model.n), shape).copy()
    U = np.broadcast_to(_fit(h, model.n), shape).copy()
    coeff = _coefficients(model)
    us, Us = [u], [U]
    for m in range(_steps(model, T)):
        xi = streams.normals(m, model.n, traj)
        U = _tangent_step(model, u, U, coeff)
        nxt = _step(model, u, xi, coeff)
        _check_finite(nxt, m + 1, u)
        _check_finite(U, m + 1, Us[-1])
        u = nxt
        us.append(u)
        Us.append(U)
    return np.array(us), np.array(Us)


def gronwall_flow_check(U, u, h, times, s, cutoff, c0, form="displayed"):
    """Compare ``int_0^T ||A^{1/2} U||^2`` with ``C_R(T) ||h||^2``.

    ``K(t) = 2 c0 max(1, sup|Theta'|) (S(t)^3 + S(t))`` with ``S`` the
    running sup of ``||A^{1/4} u||``.  ``form="displayed"`` uses
    ``C = 2 [1 + int K^4 e^{K^4}]``; ``form="integrated"`` uses the
    Gronwall-consistent ``C = 2 [1 + int K^4(s) exp(int_0^s K^4)]``.
    The constant overflows quickly, so the comparison is made on logs.
    """
    times = np.asarray(times, dtype=float)
    lam = s.eigenvalues[: U.shape[-1]]
    lhs = float(trapezoid(np.sum(lam * U ** 2, axis=-1), times))
    hh = float(np.sum(np.asarray(h, dtype=float) ** 2))
    theta = 1.0 if cutoff is None else max(1.0, cutoff.sup_derivative)
    S = np.maximum.accumulate(np.sqrt(np.sum(lam ** 0.5 * u ** 2, axis=-1)))
    K4 = (2.0 * c0 * theta * (S ** 3 + S)) ** 4
    if form == "displayed":
        expo = K4
    elif form == "integrated":
        expo = np.concatenate([[0.0], np.cumsum(0.5 * (K4[1:] + K4[:-1]) * np.diff(times))])
    else:
        raise ValueError("form must be 'displayed' or 'integrated'")
    # log of int K^4 e^{expo} by the trapezoid rule, then log(2 (1 + I))
    with np.errstate(divide="ignore"):
        logf = np.log(K4) + expo
    logw = np.log(np.concatenate([[0.5], np.ones(times.size - 2), [0.5]]) if times.size > 1
                  else np.zeros(1))
    dt = np.diff(times).mean() if times.size > 1 else 0.0
    log_int = np.logaddexp.reduce(logf + logw) + np.log(dt) if dt > 0 else -np.inf
    log_C = np.log(2.0) + np.logaddexp(0.0, log_int)
    if hh == 0:
        return {"lhs": lhs, "log_rhs": -np.inf, "rhs": 0.0, "ok": lhs == 0.0}
    log_rhs = float(log_C + np.log(hh))
    ok = bool(lhs == 0 or np.log(lhs) <= log_rhs + 1e-12)
    return {"lhs": lhs, "log_rhs": log_rhs, "rhs": float(np.exp(min(log_rhs, 700.0))),
            "ok": ok}


def noise_inverse_bound_check(coloring, s, samples, rng, growth_tol=0.05):
    """Sampled ``max (sum x^2/g^2) / (sum lambda x^2)`` and its n-stability.

    The exact supremum over ``x`` is ``max_k 1/(g_k^2 lambda_k)``; ``ok``
    compares the sampled maxima at ``n`` and ``n/2`` modes.
    """
    lam = s.eigenvalues
    g2 = coloring.g ** 2

    def sampled(m):
        x = rng.standard_normal((samples, m))
        return float(np.max(np.sum(x ** 2 / g2[:m], axis=1) / np.sum(lam[:m] * x ** 2, axis=1)))

    full = sampled(s.n)
    half = sampled(max(s.n // 2, 1))
    exact = float(np.max(1.0 / (g2 * lam)))
    growth = full / half - 1.0
    return {"max_ratio": full, "max_ratio_half": half, "exact_sup": exact,
            "growth": growth, "ok": bool(np.isfinite(full) and growth < growth_tol)}


def ratio_single_mode(coloring, s, k):
    return float(1.0 / (coloring.g[k] ** 2 * s.eigenvalues[k]))


# ---------------------------------------------------------------------------
# gradient estimators


def _bismut_block(phi, model, x, h, t, seed, block):
    streams = Streams(seed)
    shape = block.shape + (model.n,)
    u = np.broadcast_to(_fit(x, model.n), shape).copy()
    U = np.broadcast_to(_fit(h, model.n), shape).copy()
    coeff = _coefficients(model)
    sigma = coeff[2]
    weight = np.zeros(block.shape)
    steps = _steps(model, t)
    for m in range(steps):
        xi = streams.normals(m, model.n, block)
        # the noise of step m enters u_{m+1}; U_{m+1} depends on u_m only
        U = _tangent_step(model, u, U, coeff)
        weight += np.sum(U * xi / sigma, axis=-1)
        nxt = _step(model, u, xi, coeff)
        _check_finite(nxt, m + 1, u)
        u = nxt
    return phi(u, model.spectrum), weight / steps


def bismut_gradient(phi, model, x, h, t, mc, workers=None):
    """Bismut-Elworthy-Li estimate of ``d/de P_t phi(x + e h)``.

    The weight ``S = (1/N) sum_m sum_k U_{m+1,k} xi_{m,k} / sigma_k`` is
    the exact integration-by-parts weight of the discrete chain, with
    ``sigma_k`` the per-step noise scale, so the estimator is unbiased for
    the gradient of the simulated scheme at every step size.  ``S`` has
    mean zero; ``phi`` is centered before multiplying to cut variance.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    fn = partial(_bismut_block, phi, model, x, h, t, mc.seed)
    vals, S = map_trajectories(fn, mc.M, mc.chunk, workers)
    prod = (vals - vals.mean()) * S
    out = _summary(prod)
    return {"estimate": out["mean"], "stderr": out["stderr"], "M": out["M"]}


def _fd_block(phi, model, x, h, t, delta, seed, block):
    xp = _fit(x, model.n) + delta * _fit(h, model.n)
    a = phi(_run(model, xp, t, seed, block), model.spectrum)
    b = phi(_run(model, x, t, seed, block), model.spectrum)
    return (a - b) / delta


def finite_difference_gradient(phi, model, x, h, t, mc, delta, workers=None):
    """Forward difference of ``P_t phi`` with common random numbers."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    fn = partial(_fd_block, phi, model, x, h, t, delta, mc.seed)
    out = _summary(map_trajectories(fn, mc.M, mc.chunk, workers))
    return {"estimate": out["mean"], "stderr": out["stderr"], "M": out["M"]}


def _pair_block(phi, model, x, y, t, seed, block):
    a = phi(_run(model, x, t, seed, block), model.spectrum)
    b = phi(_run(model, y, t, seed, block), model.spectrum)
    return a - b


def sf_lipschitz_probe(phi, model, t, pairs, mc, workers=None):
    """``|P_t phi(x) - P_t phi(y)| / ||x - y||`` over pairs, with error bars.

    Pairs share noise (common random numbers); coincident pairs are
    skipped.  Returns per-pair ratios, their standard errors and the max.
    """
    rows = []
    for x, y in pairs:
        x = _fit(x, model.n)
        y = _fit(y, model.n)
        dist = float(np.linalg.norm(x - y))
        if dist == 0:
            continue
        fn = partial(_pair_block, phi, model, x, y, t, mc.seed)
        d = _summary(map_trajectories(fn, mc.M, mc.chunk, workers))
        rows.append({"distance": dist, "ratio": abs(d["mean"]) / dist,
                     "stderr": d["stderr"] / dist})
    if not rows:
        return {"pairs": [], "max": np.nan}
    return {"pairs": rows, "max": float(max(r["ratio"] for r in rows))}


def clopper_pearson(hits, M, level=0.95):
    """Exact two-sided binomial confidence interval."""
    a = 1.0 - level
    lo = 0.0 if hits == 0 else float(stats.beta.ppf(a / 2, hits, M - hits + 1))
    hi = 1.0 if hits == M else float(stats.beta.ppf(1 - a / 2, hits + 1, M - hits))
    return lo, hi


def _hit_block(model, x, y, T, delta, control, seed, block):
    if control is None:
        u = _run(model, x, T, seed, block)
    else:
        u = _controlled_endpoint(model, x, T, control, seed, block)
    lam = model.spectrum.eigenvalues
    dist = np.sqrt(np.sum(lam ** 0.5 * (u - _fit(y, model.n)) ** 2, axis=-1))
    return dist


def _controlled_endpoint(model, x, T, control, seed, block):
    """``v`` equation driven by ``z = z_bar + Z`` with ``Z`` the model's OU."""
    streams = Streams(seed)
    steps = _step_count(T, model.dt)
    stride = int(round(model.dt / control.dt))
    if stride < 1 or abs(stride * control.dt - model.dt) > 1e-9 * model.dt:
        raise ValueError("control grid must refine the model step")
    zbar = _fit(control.fields[::stride], model.n)
    if zbar.shape[0] < steps + 1:
        raise ValueError("control path is shorter than the horizon")
    decay, sigma = ou_coefficients(model.dt, model.coloring, model.spectrum)
    Z = np.zeros(block.shape + (model.n,))
    v = np.broadcast_to(_fit(x, model.n), Z.shape).copy()
    for m in range(steps):
        xi = streams.normals(m, model.n, block)
        Z_next = decay * Z + sigma * xi
        nxt = step_v(v, zbar[m] + Z, model.dt, model.spectrum, model.table)
        _check_finite(nxt, m + 1, v)
        v, Z = nxt, Z_next
    return v + zbar[steps] + Z


def irreducibility_probe(model, x, y, T, delta, mc, control=None, workers=None):
    """Fraction of trajectories with ``||A^{1/4}(u(T) - y)|| < delta``.

    With ``control`` (a path ``z_bar`` from
    :func:`stochns.solver.synthesize_control`) the driving noise is the
    shifted path ``z_bar + Z``.  In finite dimensions that law is
    equivalent to the law of ``Z``, so a positive hit frequency under the
    shift certifies a positive hitting probability for the model itself.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    fn = partial(_hit_block, model, x, y, T, delta, control, mc.seed)
    dist = map_trajectories(fn, mc.M, mc.chunk, workers)
    hits = int(np.sum(dist < delta))
    lo, hi = clopper_pearson(hits, mc.M)
    return {"hits": hits, "M": mc.M, "frequency": hits / mc.M, "ci": [lo, hi],
            "max_distance": float(np.max(dist)), "min_distance": float(np.min(dist))}


# ---------------------------------------------------------------------------
# linear-case oracles (B = 0: every mode is an independent Gaussian)


def linear_endpoint_law(x, t, coloring, s):
    """Per-mode mean and variance of ``u(t)`` when ``B = 0``."""
    lam = s.eigenvalues
    mean = np.exp(-lam * t) * _fit(x, s.n)
    var = coloring.g ** 2 * -np.expm1(-2 * lam * t) / (2 * lam)
    return mean, var


def gaussian_expectation(f, mean, var, nodes=80):
    """``E f(X)`` for ``X ~ N(mean, var)`` by Gauss-Hermite quadrature."""
    z, w = np.polynomial.hermite_e.hermegauss(nodes)
    return float(np.sum(w * f(mean + np.sqrt(var) * z)) / np.sqrt(2 * np.pi))


def linear_tanh_gradient(phi, x, h, t, coloring, s):
    """Exact ``d/de P_t tanh(u_k/scale)(x + e h)`` for ``B = 0``."""
    mean, var = linear_endpoint_law(x, t, coloring, s)
    k, c = phi.k, phi.scale
    dphi = gaussian_expectation(lambda v: (1 - np.tanh(v / c) ** 2) / c, mean[k], var[k])
    return dphi * np.exp(-s.eigenvalues[k] * t) * _fit(h, s.n)[k]


def linear_tanh_lipschitz(phi, t, coloring, s):
    """Sup over starting points of ``|grad P_t phi|`` for ``B = 0``.

    ``P_t phi(x)`` depends on ``x_k`` only through the Gaussian mean
    ``e^{-lambda t} x_k``; the derivative of the smoothed ``tanh`` peaks
    at mean zero.
    """
    k, c = phi.k, phi.scale
    var = coloring.g[k] ** 2 * -np.expm1(-2 * s.eigenvalues[k] * t) / (2 * s.eigenvalues[k])
    peak = gaussian_expectation(lambda v: (1 - np.tanh(v / c) ** 2) / c, 0.0, var)
    return float(peak * np.exp(-s.eigenvalues[k] * t))


# ---------------------------------------------------------------------------
# reports


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def estimator_record(estimator, config_hash, value, stderr, M, seed, **extra):
    rec = {"estimator": estimator, "config_hash": config_hash, "value": value,
           "stderr": stderr, "M": M, "seed": seed}
    rec.update(extra)
    return _jsonable(rec)


def write_report(path, record):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")


def write_histogram_csv(path, edges, *counts, names=None):
    """Bin edges and counts, one row per bin."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = names or [f"counts_{i}" for i in range(len(counts))]
    lines = [",".join(["left", "right"] + list(names))]
    for b in range(len(edges) - 1):
        row = [repr(float(edges[b])), repr(float(edges[b + 1]))]
        row += [str(int(c[b])) for c in counts]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")


def calibrated_delta(control_error, coloring, s, T, margin=1.0):
    """Ball radius for the irreducibility probe.

    Ten times the deterministic control error plus ``margin`` times the
    root-mean-square ``||A^{1/4} Z(T)||`` of the (scaled) noise, the
    part of the endpoint spread that the control cannot steer.
    """
    var = coloring.g ** 2 * -np.expm1(-2 * s.eigenvalues * T) / (2 * s.eigenvalues)
    rms = float(np.sqrt(np.sum(s.eigenvalues ** 0.5 * var)))
    return 10.0 * control_error + margin * rms
