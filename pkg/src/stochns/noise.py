"""Colored additive noise and the Ornstein-Uhlenbeck stochastic convolution.

The coloring operator is diagonal in the eigenbasis, ``G e_k = g_k e_k``,
so the stochastic convolution ``dZ + AZ dt = G dW`` decouples into scalar
OU processes that are sampled exactly.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special



@dataclass(frozen=True)
class Coloring:
    """Per-mode noise amplitudes ``g_k`` and their range-condition bounds.

    ``upper`` is ``max_k lambda_k^(1/4+eps) g_k`` and ``lower`` is
    ``max_k lambda_k^(-1/2) / g_k``; both finite and n-stable is what the
    admissibility hypothesis asks of a diagonal coloring.
    """

    g: np.ndarray
    descriptor: dict
    eps: float
    upper: float = field(default=np.nan, compare=False)
    lower: float = field(default=np.nan, compare=False)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        g.setflags(write=False)
        object.__setattr__(self, "g", g)
        if not np.all(g > 0):
            raise ValueError("coloring must be injective: all g_k > 0")

    @property
    def n(self):
        return self.g.size

    def truncate(self, m):
        return Coloring(self.g[:m], self.descriptor, self.eps, self.upper, self.lower)

    def scaled(self, factor):
        desc = dict(self.descriptor, amplitude=self.descriptor.get("amplitude", 1.0) * factor)
        return Coloring(self.g * factor, desc, self.eps, self.upper * factor,
                        self.lower / factor)


def _range_bounds(g, lam, eps):
    return (float(np.max(lam ** (0.25 + eps) * g)),
            float(np.max(lam ** -0.5 / g)))


def make_coloring(desc, s):
    """Build a :class:`Coloring` from a descriptor dict.

    Descriptor kinds:

    ``{"kind": "power", "gamma": g, "eps": e, "amplitude": a}``
        ``g_k = a lambda_k^-gamma`` with ``gamma`` in (1/4, 1/2]; ``eps``
        defaults to ``gamma - 1/4`` (the sharp range exponent).
    ``{"kind": "sigma", "sigma": [...], "eps": e, "a": a, "b": b}``
        ``g_k = 1/sigma_k`` with ``a k^(1/4+eps) <= sigma_k <= b k^(1/2)``.
    ``{"kind": "custom", "g": [...], "eps": e}``
        any positive amplitudes, e.g. the cylindrical ``g_k = 1`` used as a
        negative control.  No band is enforced.
    """
    desc = dict(desc)
    kind = desc.get("kind", "power")
    lam = s.eigenvalues
    k = np.arange(1, s.n + 1, dtype=float)
    if kind == "power":
        gamma = float(desc["gamma"])
        if not 0.25 < gamma <= 0.5:
            raise ValueError(f"power-law exponent gamma={gamma} outside (1/4, 1/2]")
        eps = float(desc.get("eps", min(gamma - 0.25, 0.25)))
        amp = float(desc.get("amplitude", 1.0))
        if not amp > 0:
            raise ValueError("amplitude must be positive")
        g = amp * lam ** -gamma
        desc.update(kind="power", gamma=gamma, eps=eps, amplitude=amp)
    elif kind == "sigma":
        sigma = np.asarray(desc["sigma"], dtype=float)[: s.n]
        if sigma.size != s.n:
            raise ValueError("sigma sequence shorter than the truncation")
        eps = float(desc["eps"])
        a, b = float(desc.get("a", 1.0)), float(desc.get("b", 1.0))
        if np.any(sigma <= 0):
            raise ValueError("sigma_k must be positive")
        lo, hi = a * k ** (0.25 + eps), b * k ** 0.5
        if np.any(sigma < lo * (1 - 1e-12)) or np.any(sigma > hi * (1 + 1e-12)):
            raise ValueError("sigma_k violates the band a k^(1/4+eps) <= sigma_k <= b k^(1/2)")
        g = 1.0 / sigma
        desc.update(kind="sigma", eps=eps, a=a, b=b, sigma=sigma.tolist())
    elif kind == "custom":
        g = np.asarray(desc["g"], dtype=float)[: s.n]
        if g.size != s.n:
            raise ValueError("custom amplitudes shorter than the truncation")
        if np.any(g <= 0):
            raise ValueError("all g_k must be positive")
        eps = float(desc.get("eps", 0.25))
        desc.update(kind="custom", eps=eps, g=g.tolist())
    else:
        raise ValueError(f"unknown coloring kind {kind!r}")
    if not 0 < eps <= 0.25:
        raise ValueError("eps must lie in (0, 1/4]")
    upper, lower = _range_bounds(g, lam, eps)
    return Coloring(g, desc, eps, upper, lower)


def validate_range_condition(c, s, eps=None, growth_tol=0.05):
    """Check finiteness and n-stability of both range bounds.

    ``ok`` requires each maximum to grow by less than ``growth_tol``
    (relative) between the first ``n/2`` modes and all ``n``.
    """
    eps = c.eps if eps is None else eps
    lam = s.eigenvalues
    upper, lower = _range_bounds(c.g, lam, eps)
    half = max(s.n // 2, 1)
    upper_h, lower_h = _range_bounds(c.g[:half], lam[:half], eps)
    growth_upper = upper / upper_h - 1
    growth_lower = lower / lower_h - 1
    ok = bool(np.isfinite(upper) and np.isfinite(lower)
              and growth_upper < growth_tol and growth_lower < growth_tol)
    return {"upper": upper, "lower": lower, "growth_upper": growth_upper,
            "growth_lower": growth_lower, "ok": ok}


def ou_coefficients(dt, c, s):
    """Per-mode ``(decay, scale)`` of the exact OU transition over ``dt``."""
    lam = s.eigenvalues
    decay = np.exp(-lam * dt)
    scale = c.g * np.sqrt(-np.expm1(-2.0 * lam * dt) / (2.0 * lam))
    return decay, scale


def ou_step(state, dt, c, s, xi):
    """Exact OU transition ``z <- e^{-lambda dt} z + g sqrt((1-e^{-2 lambda dt})/(2 lambda)) xi``.

    ``xi`` are the standard normals for this step (any leading batch shape).
    """
    if not dt > 0:
        raise ValueError("time step must be positive")
    decay, scale = ou_coefficients(dt, c, s)
    return decay * state + scale * xi


@dataclass
class PathSample:
    """Time-stamped coefficient trajectory, ``fields[m]`` at ``times[m]``."""

    times: np.ndarray
    fields: np.ndarray
    seed: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.fields = np.asarray(self.fields, dtype=float)
        if self.fields.ndim != 2 or self.fields.shape[0] != self.times.size:
            raise ValueError("fields must have shape (len(times), n)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def n(self):
        return self.fields.shape[1]

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else np.nan

    def __len__(self):
        return self.times.size

    def subsample(self, stride):
        return PathSample(self.times[::stride], self.fields[::stride], dict(self.seed))

    def truncate(self, m):
        return PathSample(self.times, self.fields[:, :m], dict(self.seed))

    def to_csv(self, path, sidecar=None):
        """CSV with ``time, c0..c{n-1}`` plus a JSON sidecar next to it."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time"] + [f"c{k}" for k in range(self.n)])
            for t, row in zip(self.times, self.fields):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        meta = {"seed": self.seed}
        meta.update(sidecar or {})
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        side = path.with_suffix(".json")
        seed = json.loads(side.read_text()).get("seed", {}) if side.exists() else {}
        return cls(data[:, 0], data[:, 1:], seed)


def _step_count(T, dt):
    steps = int(round(T / dt))
    if steps < 1 or abs(steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"dt={dt} does not divide the horizon T={T}")
    return steps


def ou_sample_path(T, dt, c, s, streams, traj=0, stride=1):
    """OU path from ``Z_0 = 0`` by repeated :func:`ou_step`.

    Step ``m`` uses ``streams.normals(m, n, traj)``; every ``stride``-th
    state is kept.
    """
    steps = _step_count(T, dt)
    if steps % stride:
        raise ValueError("stride must divide the number of steps")
    xi = streams.block(np.arange(steps), s.n, traj)
    decay, scale = ou_coefficients(dt, c, s)
    out = np.empty((steps // stride + 1, s.n))
    z = np.zeros(s.n)
    out[0] = z
    for m in range(steps):
        z = decay * z + scale * xi[m]
        if (m + 1) % stride == 0:
            out[(m + 1) // stride] = z
    times = dt * stride * np.arange(out.shape[0])
    seed = dict(streams.describe(), traj=int(traj), dt=dt)
    return PathSample(times, out, seed)


def increment_moment_oracle(c, s, gamma, t, h):
    """Closed form of ``E ||A^gamma (Z(t+h) - Z(t))||^2``."""
    lam = s.eigenvalues
    weight = lam ** (2 * gamma) * c.g ** 2 / (2 * lam)
    carried = np.expm1(-lam * h) ** 2 * -np.expm1(-2 * lam * np.asarray(t)[..., None])
    fresh = -np.expm1(-2 * lam * h)
    return np.sum(weight * (carried + fresh), axis=-1)


def stationary_variance(c, s):
    return c.g ** 2 / (2 * s.eigenvalues)


def marginal_variance(c, s, t):
    return c.g ** 2 * -np.expm1(-2 * s.eigenvalues * t) / (2 * s.eigenvalues)


def dyadic_lags(num_points, min_lag=1, max_fraction=0.125):
    top = max(int(num_points * max_fraction), min_lag)
    lags = []
    lag = min_lag
    while lag <= top:
        lags.append(lag)
        lag *= 2
    return np.array(lags)


def _fit_slope(h, m):
    x, y = np.log(h), np.log(m)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss if ss > 0 else 1.0
    return float(slope), float(r2)


def holder_exponent_estimate(path, s, gamma, lags=None):
    """Hölder exponent from the path's empirical increment moments.

    For each dyadic lag ``h`` the squared ``A^gamma`` increment norm is
    averaged over all start times; half the log-log slope is returned as
    ``beta``.
    """
    if len(path) < 100:
        raise ValueError("need at least 100 grid points")
    lags = dyadic_lags(len(path)) if lags is None else np.asarray(lags)
    w = s.eigenvalues ** (2 * gamma)
    moments = []
    for lag in lags:
        inc = path.fields[lag:] - path.fields[:-lag]
        moments.append(np.mean(np.sum(w * inc ** 2, axis=1)))
    moments = np.array(moments)
    if not np.all(moments > 0):
        raise ValueError("degenerate path: zero increments")
    h = lags * path.dt
    slope, r2 = _fit_slope(h, moments)
    return {"beta": slope / 2, "r2": r2, "h": h, "moments": moments}


def oracle_holder_exponent(c, s, gamma, h, times=None):
    """Same regression as :func:`holder_exponent_estimate` on exact moments.

    With ``times`` (the start times that the empirical estimate averages
    over) the oracle is averaged over the same set, so it is the exact
    expectation of the empirical moment at every lag; without it the
    stationary moments are used.
    """
    h = np.asarray(h, dtype=float)
    moments = []
    for hh in h:
        if times is None:
            m = increment_moment_oracle(c, s, gamma, np.inf, hh)
        else:
            starts = np.asarray(times)
            starts = starts[starts + hh <= starts[-1] + 1e-12]
            m = np.mean(increment_moment_oracle(c, s, gamma, starts, hh))
        moments.append(m)
    moments = np.array(moments)
    slope, r2 = _fit_slope(h, moments)
    return {"beta": slope / 2, "r2": r2, "h": h, "moments": moments}


def hs_time_integral(c, s, alpha):
    """``int_0^1 t^(-2 alpha) sum_k g_k^2 exp(-2 t lambda_k) dt`` in closed form."""
    if alpha >= 0.5:
        raise ValueError("time integral diverges for alpha >= 1/2")
    a = 1.0 - 2.0 * alpha
    x = 2.0 * s.eigenvalues
    per_mode = x ** (-a) * special.gamma(a) * special.gammainc(a, x)
    return float(np.sum(c.g ** 2 * per_mode))


def hs_integral_check(c, s, alpha, growth_tol=0.05):
    """Compare the Hilbert-Schmidt time integral at ``n`` and ``n/2`` modes."""
    half = max(s.n // 2, 1)
    full = hs_time_integral(c, s, alpha)
    part = hs_time_integral(c.truncate(half), s.truncate(half), alpha)
    growth = full / part - 1.0
    return {"value_n": full, "value_half": part, "growth": growth,
            "saturating": bool(growth < growth_tol)}


def stationary_norm_trend(c, s, gammas, levels):
    """Stationary ``E ||A^gamma Z||^2`` across truncations (soft diagnostic).

    Growth with the level as ``gamma`` approaches 1/2 illustrates the loss
    of continuity in ``V``; no pass/fail is attached.
    """
    out = {}
    var = stationary_variance(c, s)
    for gamma in gammas:
        out[gamma] = [float(np.sum(s.eigenvalues[:m] ** (2 * gamma) * var[:m]))
                      for m in levels]
    return out
