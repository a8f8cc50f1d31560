"""Colored noise on the torus and the Ornstein-Uhlenbeck convolution.

Run with ``python demos/01_noise_and_ou_paths.py``.
"""

import numpy as np

from stochns.noise import (hs_integral_check, holder_exponent_estimate, make_coloring,
                           oracle_holder_exponent, ou_sample_path, stationary_variance,
                           validate_range_condition)
from stochns.rng import Streams
from stochns.spectral import build_spectrum

# %% The Stokes spectrum on the torus
# Modes are ordered by |k|^2, so a truncation to the first n modes is a
# Galerkin space and smaller truncations nest inside larger ones.
s = build_spectrum("torus", 64)
print("first eigenvalues:", s.eigenvalues[:12])
print("multiplicity of |k|^2 = 1:", np.sum(s.eigenvalues == 1.0))

# %% A power-law coloring g_k = lambda_k^{-gamma}
# gamma = 1/2 is the borderline covariance; eps = gamma - 1/4 measures
# how much spatial regularity the noise leaves room for.
c = make_coloring({"kind": "power", "gamma": 0.5, "amplitude": 1.0}, s)
print("range condition:", validate_range_condition(c, s))

# %% Sampling the stochastic convolution exactly
# Each mode is an independent OU process, so steps are exact in law for
# any dt.  The counter-based streams make mode k of trajectory i the same
# numbers whatever the truncation.
path = ou_sample_path(10.0, 1e-3, c, s, Streams(7))
print("path shape:", path.fields.shape)
# Steps are exact, so a coarse grid over a long horizon samples the
# stationary law faithfully.
long = ou_sample_path(2000.0, 0.1, c, s, Streams(8))
emp = np.var(long.fields[100:], axis=0)[[0, 8, 40]]
print("stationary variance, empirical vs exact:", np.round(emp, 4),
      np.round(stationary_variance(c, s)[[0, 8, 40]], 4))

low = ou_sample_path(10.0, 1e-3, c.truncate(16), s.truncate(16), Streams(7))
print("low modes agree across truncations:",
      np.array_equal(low.fields, path.fields[:, :16]))

# %% Temporal regularity
# The log-log slope of the mean squared increment gives a Holder exponent;
# the oracle slope comes from the closed-form increment moments.
est = holder_exponent_estimate(path, s, 0.0)
ora = oracle_holder_exponent(c, s, 0.0, est["h"], path.times)
print(f"Holder exponent: estimate {est['beta']:.3f}, oracle {ora['beta']:.3f}")

# %% Space-time integrability
# int_0^1 t^{-2 alpha} ||e^{-tA} G||_HS^2 dt stays bounded in n only
# for alpha below 1/4 + eps (0.3 for gamma = 0.3).
big = build_spectrum("torus", 4096)
cb = make_coloring({"kind": "power", "gamma": 0.3}, big)
for alpha in (0.1, 0.15, 0.3, 0.4):
    r = hs_integral_check(cb, big, alpha)
    print(f"alpha={alpha}: saturating={r['saturating']}")
