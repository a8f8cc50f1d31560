"""Diagonal (spectral) representation of the Stokes operator.

A velocity field is represented by its coefficient vector against the
orthonormal eigenbasis, so every operator function of ``A`` acts
mode-by-mode.  Fields are plain ``numpy`` arrays whose last axis has
length ``n``; leading axes are treated as a batch.
"""

from dataclasses import dataclass, field

import numpy as np

# relative slack for floating point in the inequality checks
SLACK = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Ordered Stokes eigenvalues of an ``n``-mode truncation.

    ``backend`` is ``"torus"`` (eigenvalues ``|k|^2`` of the periodic
    divergence-free modes) or ``"synthetic"`` (``lambda_k = c k``).
    """

    eigenvalues: np.ndarray
    backend: str = "synthetic"
    c: float = 1.0
    wavevectors: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("eigenvalues must be a non-empty 1-d sequence")
        if not np.all(lam > 0):
            raise ValueError("eigenvalues must be strictly positive")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be nondecreasing")

    @property
    def n(self):
        return self.eigenvalues.size

    def truncate(self, m):
        """Spectrum of the first ``m`` modes."""
        if not 1 <= m <= self.n:
            raise ValueError(f"cannot truncate {self.n} modes to {m}")
        wv = None if self.wavevectors is None else self.wavevectors[:m]
        return Spectrum(self.eigenvalues[:m], self.backend, self.c, wv)

    def describe(self):
        return {"backend": self.backend, "n": self.n, "c": self.c}


def build_spectrum(backend, n, c=1.0):
    """Eigenvalues for ``n`` modes of the requested backend."""
    n = int(n)
    if n < 1:
        raise ValueError("truncation level n must be >= 1")
    if backend == "synthetic":
        if not c > 0:
            raise ValueError("synthetic slope c must be positive")
        return Spectrum(c * np.arange(1, n + 1, dtype=float), "synthetic", float(c))
    if backend == "torus":
        # local import: the torus basis lives with the nonlinearity
        from .nonlinearity import torus_modes

        modes = torus_modes(n)
        return Spectrum(modes.eigenvalues, "torus", 1.0 / np.pi, modes.wavevectors)
    raise ValueError(f"unknown backend {backend!r}")


def _check_shape(x, s):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != s.n:
        raise ValueError(f"field has {x.shape[-1]} coefficients, spectrum has {s.n}")
    return x


def fractional_apply(x, s, alpha):
    """``A^alpha x``; negative ``alpha`` smooths."""
    x = _check_shape(x, s)
    return s.eigenvalues ** alpha * x


def fractional_norm(x, s, alpha):
    """``||A^alpha x||`` over the last axis."""
    return np.linalg.norm(fractional_apply(x, s, alpha), axis=-1)


def semigroup_apply(x, s, t):
    """``exp(-tA) x``."""
    if t < 0:
        raise ValueError("semigroup time must be nonnegative")
    x = _check_shape(x, s)
    return np.exp(-t * s.eigenvalues) * x


def smoothing_bound(alpha, t):
    """Operator-norm bound ``(alpha/e)^alpha t^-alpha`` on ``A^alpha exp(-tA)``."""
    return (alpha / np.e) ** alpha * t ** (-alpha)


def smoothing_bound_check(s, alpha, t):
    if not (alpha > 0 and t > 0):
        raise ValueError("alpha and t must be positive")
    lam = s.eigenvalues
    lhs = float(np.max(lam ** alpha * np.exp(-t * lam)))
    rhs = float(smoothing_bound(alpha, t))
    return {"lhs": lhs, "rhs": rhs, "ok": lhs <= rhs * (1 + SLACK)}


def interpolation_check(x, s, p, q, lam):
    """Compare ``||A^r x||`` with ``||A^p x||^lam ||A^q x||^(1-lam)``."""
    if not (0 <= p < q):
        raise ValueError("need 0 <= p < q")
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    r = lam * p + (1 - lam) * q
    lhs = float(fractional_norm(x, s, r))
    rhs = float(fractional_norm(x, s, p) ** lam * fractional_norm(x, s, q) ** (1 - lam))
    return {"lhs": lhs, "rhs": rhs, "r": r, "ok": lhs <= rhs * (1 + SLACK)}


def hilbert_schmidt_tail(s, alpha):
    """Partial sum of ``lambda_k^(-2 alpha)`` over the truncation."""
    return float(np.sum(s.eigenvalues ** (-2.0 * alpha)))


def project(x, m):
    """Keep the first ``m`` coefficients."""
    return np.asarray(x)[..., :m]


def embed(x, n):
    """Zero-pad coefficients up to ``n`` modes."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1] + (n,))
    out[..., : x.shape[-1]] = x
    return out


def basis_vector(s, k):
    """Unit coefficient at (zero-based) index ``k``."""
    e = np.zeros(s.n)
    e[k] = 1.0
    return e
