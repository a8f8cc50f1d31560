"""Time integration of the Galerkin system for ``v = u - z``.

For a fixed noise path ``z`` the finite-dimensional system is

    v' + A v + B_n(v + z) = 0,        v(0) = Pi_n x,

integrated with exponential integrators: the linear part is exact and
the nonlinearity is frozen (exponential Euler) or linearly corrected
(ETD2, Cox-Matthews RK form).  The same machinery drives the smoothly
truncated SDE ``du + (Au + Theta_R(||A^{1/4}u||^2) B_n(u)) dt = G dW`` used
by the gradient estimators.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid

from .noise import PathSample, ou_coefficients, _step_count
from .spectral import embed, fractional_norm, semigroup_apply

log = logging.getLogger(__name__)

INTEGRATORS = ("exp-euler", "etd2")


class BlowUpError(FloatingPointError):
    """Non-finite state during time stepping."""

    def __init__(self, step, norms):
        self.step = step
        self.norms = norms
        super().__init__(f"non-finite state at step {step}; last finite norms {norms}")


@dataclass(frozen=True)
class SolverConfig:
    n: int
    dt: float
    T: float
    integrator: str = "exp-euler"
    eps: float = 0.25
    gamma_monitor: tuple = (0.25,)
    p: float = 4.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T >= self.dt:
            raise ValueError("horizon T must be at least dt")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if not 0 < self.eps <= 0.25:
            raise ValueError("eps must lie in (0, 1/4]")
        if not 4 <= self.p < 4 / (1 - 2 * self.eps):
            raise ValueError(f"p must lie in [4, {4 / (1 - 2 * self.eps):g})")
        object.__setattr__(self, "gamma_monitor", tuple(self.gamma_monitor))
        for g in self.gamma_monitor:
            if not 0 <= g < 0.25 + self.eps:
                raise ValueError(f"monitor exponent {g} outside [0, 1/4+eps)")
        _step_count(self.T, self.dt)

    @property
    def steps(self):
        return _step_count(self.T, self.dt)

    @property
    def times(self):
        return self.dt * np.arange(self.steps + 1)

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class Cutoff:
    """Quintic smoothstep cutoff: 1 on ``[0, R]``, 0 on ``[R+1, inf)``."""

    R: float
    sup_derivative: float = field(default=15.0 / 8.0, init=False)

    def __post_init__(self):
        if not self.R >= 0:
            raise ValueError("cutoff radius must be nonnegative")

    def __call__(self, r):
        s = np.clip(np.asarray(r, dtype=float) - self.R, 0.0, 1.0)
        return 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s ** 2)

    def derivative(self, r):
        s = np.clip(np.asarray(r, dtype=float) - self.R, 0.0, 1.0)
        return -30.0 * s ** 2 * (1.0 - s) ** 2


def cutoff_eval(cutoff, r):
    return cutoff(r)


def cutoff_derivative(cutoff, r):
    return cutoff.derivative(r)


def phi1(h):
    """``(1 - e^-h) / h``."""
    return -np.expm1(-h) / h


def phi2(h):
    """``(e^-h - 1 + h) / h^2``, with a series branch for small ``h``."""
    h = np.asarray(h, dtype=float)
    small = h < 1e-3
    hs = np.where(small, 1.0, h)
    exact = (np.expm1(-hs) + hs) / hs ** 2
    series = 0.5 - h / 6.0 + h ** 2 / 24.0 - h ** 3 / 120.0
    return np.where(small, series, exact)


def _psi(h):
    """``(1 - e^-h (1 + h)) / h^2``, the weight of the left endpoint."""
    h = np.asarray(h, dtype=float)
    small = h < 1e-3
    hs = np.where(small, 1.0, h)
    exact = (-np.expm1(-hs) - hs * np.exp(-hs)) / hs ** 2
    series = 0.5 - h / 3.0 + h ** 2 / 8.0 - h ** 3 / 30.0
    return np.where(small, series, exact)


def _check_finite(state, step, prev):
    if not np.all(np.isfinite(state)):
        raise BlowUpError(step, {"norm": float(np.linalg.norm(prev))})


def step_v(v, z, dt, s, table, integrator="exp-euler", z_next=None):
    """One step of the ``v`` equation with ``z`` frozen at the left end.

    ETD2 also needs ``z_next``, the noise at the end of the step.
    """
    h = s.eigenvalues * dt
    decay = np.exp(-h)
    n0 = -table.bilinear(v + z, v + z)
    a = decay * v + dt * phi1(h) * n0
    if integrator == "exp-euler":
        return a
    if integrator == "etd2":
        z_next = z if z_next is None else z_next
        n1 = -table.bilinear(a + z_next, a + z_next)
        return a + dt * phi2(h) * (n1 - n0)
    raise ValueError(f"unknown integrator {integrator!r}")


def _noise_on_grid(z_path, cfg):
    n = cfg.n
    if z_path is None:
        return np.zeros((cfg.steps + 1, n))
    ratio = cfg.dt / z_path.dt if len(z_path) > 1 else 1.0
    stride = int(round(ratio))
    if stride < 1 or abs(stride - ratio) > 1e-9 * ratio:
        raise ValueError("noise path grid must refine the solver grid")
    if z_path.times[-1] < cfg.T - 1e-9 * cfg.T:
        raise ValueError("noise path is shorter than the horizon")
    z = z_path.fields[::stride][: cfg.steps + 1]
    if z.shape[1] >= n:
        return z[:, :n]
    return embed(z, n)


def _fit(x, n):
    x = np.asarray(x, dtype=float)
    return x[..., :n] if x.shape[-1] >= n else embed(x, n)


def integrate(x, z_path, cfg, s, table):
    """Trajectories ``(v_n, u_n = v_n + z)`` on the solver grid.

    ``z_path`` may be finer than the solver grid (it is subsampled) and
    may carry more modes (it is projected); ``None`` means ``z = 0``.
    """
    s = s.truncate(cfg.n) if s.n > cfg.n else s
    table = table.truncate(cfg.n) if table.n > cfg.n else table
    z = _noise_on_grid(z_path, cfg)
    v = np.empty_like(z)
    v[0] = _fit(x, cfg.n)
    for m in range(cfg.steps):
        v[m + 1] = step_v(v[m], z[m], cfg.dt, s, table, cfg.integrator, z[m + 1])
        _check_finite(v[m + 1], m + 1, v[m])
    seed = dict(z_path.seed) if z_path is not None else {}
    times = cfg.times
    return PathSample(times, v, seed), PathSample(times, v + z, seed)


def mild_residual(v_path, z_path, x, s, table, t):
    """H-norm defect of the variation-of-constants identity at grid time ``t``.

    The convolution integral uses exact exponential weights with the
    nonlinearity interpolated linearly between grid points, so the defect
    vanishes identically when ``B = 0`` and measures the integrator's
    consistency error otherwise.
    """
    times = v_path.times
    m = int(np.argmin(np.abs(times - t)))
    if abs(times[m] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError("t must be a grid time of the trajectory")
    n = v_path.n
    s = s.truncate(n) if s.n > n else s
    table = table.truncate(n) if table.n > n else table
    dt = v_path.dt if len(v_path) > 1 else 0.0
    cfg_like = SolverConfig(n, dt, times[-1]) if len(v_path) > 1 else None
    z = _noise_on_grid(z_path, cfg_like) if cfg_like else np.zeros((1, n))
    x = _fit(x, n)
    defect = v_path.fields[m] - semigroup_apply(x, s, times[m])
    if m > 0:
        u = v_path.fields[: m + 1] + z[: m + 1]
        f = table.bilinear(u, u)
        h = s.eigenvalues * dt
        w_right = dt * phi1(h)
        w_left = dt * _psi(h)
        # interval [t_j, t_j+1] carries decay exp(-lambda (t - t_{j+1}))
        lag = times[m] - times[1: m + 1]
        carry = np.exp(-np.outer(lag, s.eigenvalues))
        pieces = w_right * f[1:] + w_left * (f[:-1] - f[1:])
        defect = defect + np.sum(carry * pieces, axis=0)
    return float(np.linalg.norm(defect))


def apriori_lp_monitor(v_path, s, p):
    """``int_0^T ||A^{1/4} v(t)||^p dt`` by the trapezoid rule."""
    norms = fractional_norm(v_path.fields, s.truncate(v_path.n), 0.25)
    return float(trapezoid(norms ** p, v_path.times))


def apriori_sup_monitor(v_path, s, gamma, eps=None):
    """``max_t ||A^gamma v(t)||`` over the grid."""
    if eps is not None and not 0.25 <= gamma < 0.25 + eps:
        raise ValueError("gamma must lie in [1/4, 1/4+eps)")
    return float(np.max(fractional_norm(v_path.fields, s.truncate(v_path.n), gamma)))


def galerkin_convergence_probe(x, z_path, levels, cfg, s, table, gamma):
    """Sup-in-time Cauchy differences between consecutive truncation levels."""
    levels = list(levels)
    if sorted(levels) != levels or len(set(levels)) != len(levels):
        raise ValueError("levels must be strictly increasing")
    paths = []
    for n in levels:
        v, _ = integrate(x, z_path, cfg.with_(n=n), s.truncate(n), table.truncate(n))
        paths.append(v.fields)
    diffs = []
    for lo, hi, n_hi in zip(paths, paths[1:], levels[1:]):
        d = fractional_norm(hi - embed(lo, n_hi), s.truncate(n_hi), gamma)
        diffs.append(float(np.max(d)))
    return {"levels": levels, "gamma": gamma, "d": diffs}


def regularization_probe(x, z_path, cfg, s, table, t0, gamma):
    """``sup_{t in [t0, T]} ||A^gamma u(t)||`` for rough initial data.

    ``t0 = 0`` is accepted so the unregularized monitor can be reported
    as a negative control.
    """
    if not t0 >= 0:
        raise ValueError("t0 must be nonnegative")
    _, u = integrate(x, z_path, cfg, s, table)
    sel = u.times >= t0 - 1e-12
    return float(np.max(fractional_norm(u.fields[sel], s.truncate(cfg.n), gamma)))


def slow_decay_field(n, decay=0.51, norm=1.0):
    """Coefficients ``k^-decay`` (1-based), scaled to the given H-norm.

    A finite stand-in for data that is in H but in no ``D(A^gamma)`` with
    ``gamma`` above ``(decay - 1/2) / 2`` (for linear eigenvalue growth).
    """
    x = np.arange(1, n + 1, dtype=float) ** -decay
    return norm * x / np.linalg.norm(x) if norm is not None else x


def step_truncated(u, dt, cutoff, coloring, s, table, xi):
    """Exponential-Euler step of the truncated SDE with exact OU noise.

    ``cutoff=None`` disables the truncation (``Theta = 1``).
    """
    h = s.eigenvalues * dt
    decay, scale = ou_coefficients(dt, coloring, s)
    drift = table.bilinear(u, u)
    if cutoff is not None:
        r = np.sum(s.eigenvalues ** 0.5 * u ** 2, axis=-1)
        drift = cutoff(r)[..., None] * drift
    return decay * u - dt * phi1(h) * drift + scale * xi


def integrate_truncated(x, cfg, cutoff, coloring, s, table, streams, traj=0, record=True):
    """Truncated SDE from ``x``; trajectories may be batched via ``traj``.

    Step ``m`` draws ``streams.normals(m, n, traj)``, the same variates
    that :func:`stochns.noise.ou_sample_path` uses, so with ``cutoff=None``
    this reproduces ``integrate`` applied to the OU path of that stream.
    Returns the array of states, shape ``(steps+1,) + traj.shape + (n,)``,
    or only the final state when ``record`` is false.
    """
    s = s.truncate(cfg.n) if s.n > cfg.n else s
    table = table.truncate(cfg.n) if table.n > cfg.n else table
    coloring = coloring.truncate(cfg.n) if coloring.n > cfg.n else coloring
    traj = np.asarray(traj)
    u = np.broadcast_to(_fit(x, cfg.n), traj.shape + (cfg.n,)).copy()
    out = [u] if record else None
    for m in range(cfg.steps):
        xi = streams.normals(m, cfg.n, traj)
        nxt = step_truncated(u, cfg.dt, cutoff, coloring, s, table, xi)
        _check_finite(nxt, m + 1, u)
        u = nxt
        if record:
            out.append(u)
    return np.array(out) if record else u


def suggest_dt(c0, cutoff, sup_quarter_norm):
    """Heuristic step bound ``0.5 / (c0 max(1, ||Theta'||) sup ||A^{1/4}u||^2)``."""
    theta = 1.0 if cutoff is None else max(1.0, cutoff.sup_derivative)
    return 0.5 / (c0 * theta * max(sup_quarter_norm, 1e-12) ** 2)


def energy_increments(v_path):
    """Discrete ``d/dt ||v||^2`` along a trajectory."""
    e = np.sum(v_path.fields ** 2, axis=1)
    return np.diff(e) / v_path.dt


# ---------------------------------------------------------------------------
# steering control


def control_profile(x, y, times, T, t0, t1, s):
    """Piecewise reference path: heat flow from ``x``, linear bridge, heat flow into ``y``."""
    if not 0 < t0 < t1 < T:
        raise ValueError("need 0 < t0 < t1 < T")
    lam = s.eigenvalues
    t = np.asarray(times)[:, None]
    head = np.exp(-t * lam) * x
    tail = np.exp(-(T - t) * lam) * y
    a = np.exp(-t0 * lam) * x
    b = np.exp(-(T - t1) * lam) * y
    bridge = a + (t - t0) / (t1 - t0) * (b - a)
    return np.where(t <= t0, head, np.where(t >= t1, tail, bridge))


def synthesize_control(x, y, T, t0, t1, gamma, s, table, dt):
    """Noise path ``z_bar`` whose controlled solution ends at ``y``.

    Returns a dict with the paths ``z`` (the control, ``z(0) = 0``), ``u``
    (the reference path) and ``v`` (solution of ``v' + Av = -B(u)``,
    ``v(0) = x``, by exponential Euler).
    """
    if not 0.25 < gamma < 0.5:
        raise ValueError("gamma must lie in (1/4, 1/2)")
    x = _fit(x, s.n)
    y = _fit(y, s.n)
    steps = _step_count(T, dt)
    times = dt * np.arange(steps + 1)
    u = control_profile(x, y, times, T, t0, t1, s)
    h = s.eigenvalues * dt
    decay, w = np.exp(-h), dt * phi1(h)
    forcing = table.bilinear(u, u)
    v = np.empty_like(u)
    v[0] = x
    for m in range(steps):
        v[m + 1] = decay * v[m] - w * forcing[m]
    z = u - v
    meta = {"control": {"t0": t0, "t1": t1, "gamma": gamma, "dt": dt}}
    return {"z": PathSample(times, z, meta), "u": PathSample(times, u, meta),
            "v": PathSample(times, v, meta)}


def verify_control(z_bar, x, y, cfg, s, table):
    """``||A^{1/4}(u(T) - y)||`` for the solution driven by ``z_bar``."""
    _, u = integrate(x, z_bar, cfg, s, table)
    s_n = s.truncate(cfg.n) if s.n > cfg.n else s
    return float(fractional_norm(u.fields[-1] - _fit(y, cfg.n), s_n, 0.25))


# ---------------------------------------------------------------------------
# modified Gronwall comparator


def gronwall_weights(times, beta):
    """Lower-triangular ``w[m, j] = int_{t_{j-1}}^{t_j} (t_m - s)^-beta ds`` for ``j < m``.

    ``times`` are the grid points ``t_1 < ... < t_N`` with ``t_0 = 0``
    implied; row ``m`` only uses intervals that end before ``t_m``.
    """
    t = np.asarray(times, dtype=float)
    left = np.concatenate([[0.0], t[:-1]])
    gap_left = t[:, None] - left[None, :]
    gap_right = t[:, None] - t[None, :]
    with np.errstate(invalid="ignore"):
        w = (np.clip(gap_left, 0, None) ** (1 - beta)
             - np.clip(gap_right, 0, None) ** (1 - beta)) / (1 - beta)
    return np.tril(np.nan_to_num(w), k=-1)


def modified_gronwall_constant(a, b, alpha, beta, times):
    """Grid constant ``M`` with ``u <= a M t^-alpha`` for every admissible ``u``.

    The extremal sequence solves the hypothesis with equality; strict
    lower triangularity makes any ``u`` satisfying the inequality lie
    below it (induction on the grid index).
    """
    if not (0 <= alpha < 1 and 0 <= beta < 1):
        raise ValueError("alpha and beta must lie in [0, 1)")
    t = np.asarray(times, dtype=float)
    w = gronwall_weights(t, beta)
    extremal = np.empty_like(t)
    forcing = a * t ** -alpha
    for m in range(t.size):
        extremal[m] = forcing[m] + b * w[m, :m] @ extremal[:m]
    if a == 0:
        return 1.0, extremal
    return float(np.max(extremal * t ** alpha / a)), extremal


def gronwall_comparator(u, times, a, b, alpha, beta):
    """Check hypothesis and conclusion of the singular Gronwall inequality on a grid."""
    t = np.asarray(times, dtype=float)
    u = np.asarray(u, dtype=float)
    w = gronwall_weights(t, beta)
    rhs = a * t ** -alpha + b * (w @ u)
    hyp = bool(np.all(u >= 0) and np.all(u <= rhs * (1 + 1e-12) + 1e-300))
    M, _ = modified_gronwall_constant(a, b, alpha, beta, t)
    bound = a * M * t ** -alpha
    concl = bool(np.all(u <= bound * (1 + 1e-12) + 1e-300))
    return {"hypothesis": hyp, "conclusion": concl, "M": M,
            "violated": hyp and not concl}
