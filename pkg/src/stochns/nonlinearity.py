"""Divergence-free torus basis and the Galerkin nonlinearity.

The domain is the torus ``[0, 2 pi)^2``.  For every wavevector ``k`` in
the half lattice (``k1 > 0``, or ``k1 == 0`` and ``k2 > 0``) there are two
real modes

    e(x) = k_perp / |k| * cos(k.x) / (sqrt(2) pi)
    e(x) = k_perp / |k| * sin(k.x) / (sqrt(2) pi)

with ``k_perp = (-k2, k1)``.  Both are divergence free, have unit L2 norm
and are eigenfunctions of the Stokes operator with eigenvalue ``|k|^2``.

The trilinear form ``b(u, v, w) = int (u . grad v) . w`` restricted to the
basis is stored as a sparse table of structure constants ``b_ijl``.
"""

import hashlib
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .spectral import Spectrum, fractional_apply

COS, SIN = 0, 1
MODE_NORM = 1.0 / (np.sqrt(2.0) * np.pi)
_AREA = 4.0 * np.pi ** 2


@dataclass(frozen=True)
class BasisMode:
    wavevector: tuple
    parity: int
    norm: float = MODE_NORM

    @property
    def eigenvalue(self):
        return float(self.wavevector[0] ** 2 + self.wavevector[1] ** 2)

    @property
    def direction(self):
        k1, k2 = self.wavevector
        return np.array([-k2, k1], dtype=float) / np.hypot(k1, k2)


@dataclass(frozen=True)
class TorusModes:
    wavevectors: np.ndarray  # (n, 2) int
    parity: np.ndarray  # (n,) COS / SIN

    @property
    def n(self):
        return len(self.parity)

    @property
    def eigenvalues(self):
        return np.sum(self.wavevectors.astype(float) ** 2, axis=1)


def torus_modes(n):
    """First ``n`` real modes ordered by ``|k|^2``, then ``k``, then cos/sin."""
    if n < 1:
        raise ValueError("need at least one mode")
    radius = 1
    while True:
        r = np.arange(-radius, radius + 1)
        k1, k2 = np.meshgrid(r, r, indexing="ij")
        k1, k2 = k1.ravel(), k2.ravel()
        half = (k1 > 0) | ((k1 == 0) & (k2 > 0))
        k1, k2 = k1[half], k2[half]
        norm2 = k1 ** 2 + k2 ** 2
        inside = norm2 <= radius ** 2  # complete shells only
        if 2 * np.count_nonzero(inside) >= n:
            break
        radius *= 2
    k1, k2, norm2 = k1[inside], k2[inside], norm2[inside]
    order = np.lexsort((k2, k1, norm2))
    wv = np.repeat(np.stack([k1[order], k2[order]], axis=1), 2, axis=0)
    parity = np.tile([COS, SIN], len(order))
    return TorusModes(wv[:n].copy(), parity[:n].copy())


def assemble_torus_basis(n):
    """Basis modes and matching spectrum for the ``n``-mode torus truncation."""
    modes = torus_modes(n)
    basis = [BasisMode((int(k[0]), int(k[1])), int(p))
             for k, p in zip(modes.wavevectors, modes.parity)]
    spectrum = Spectrum(modes.eigenvalues, "torus", 1.0 / np.pi, modes.wavevectors)
    return basis, spectrum


def mode_field(mode, grid_points):
    """Velocity of one basis mode sampled on a uniform periodic grid.

    Returns an array of shape ``(2, N, N)``.  Only used by quadrature
    oracles.
    """
    x = 2 * np.pi * np.arange(grid_points) / grid_points
    X, Y = np.meshgrid(x, x, indexing="ij")
    phase = mode.wavevector[0] * X + mode.wavevector[1] * Y
    profile = np.cos(phase) if mode.parity == COS else np.sin(phase)
    return mode.norm * mode.direction[:, None, None] * profile


def quadrature_structure_constant(basis, i, j, l, grid_points=64):
    """``int (e_i . grad) e_j . e_l`` by the rectangle rule on a uniform grid.

    Derivatives are spectral (FFT); the rule is exact for trigonometric
    polynomials whose degree is below the grid size, so this is an
    independent oracle for the analytic table.
    """
    N = grid_points
    ei, ej, el = (mode_field(basis[q], N) for q in (i, j, l))
    freq = np.fft.fftfreq(N, d=1.0 / N)
    kx, ky = np.meshgrid(freq, freq, indexing="ij")
    hat = np.fft.fft2(ej)
    dx = np.real(np.fft.ifft2(1j * kx * hat))
    dy = np.real(np.fft.ifft2(1j * ky * hat))
    adv = ei[0] * dx + ei[1] * dy  # (e_i . grad) e_j, both components
    return float(np.sum(adv * el) * _AREA / N ** 2)


class TriadTable:
    """Sparse structure constants ``b_ijl`` with ``b_ijl = -b_ilj``.

    Entries are stored in both antisymmetric orientations and sorted by
    ``(l, i, j)``.  ``B(x)_l = sum_ij x_i x_j b_ijl``.
    """

    def __init__(self, n, i, j, l, c, backend="synthetic", meta=None):
        self.n = int(n)
        i, j, l = (np.asarray(a, dtype=np.int64) for a in (i, j, l))
        c = np.asarray(c, dtype=float)
        order = np.lexsort((j, i, l))
        self.i, self.j, self.l, self.c = i[order], j[order], l[order], c[order]
        if self.i.size and (max(self.i.max(), self.j.max(), self.l.max()) >= self.n
                            or min(self.i.min(), self.j.min(), self.l.min()) < 0):
            raise ValueError("triad index out of range")
        self.backend = backend
        self.meta = dict(meta or {})
        # gather matrix: entry e contributes c_e to output l_e
        self._gather = sp.csr_matrix(
            (self.c, (np.arange(self.c.size), self.l)), shape=(self.c.size, self.n))

    @property
    def nnz(self):
        return self.c.size

    def __repr__(self):
        return f"TriadTable(n={self.n}, nnz={self.nnz}, backend={self.backend!r})"

    def bilinear(self, x, y):
        """``sum_ij x_i y_j b_ijl`` for each ``l``; batched over leading axes."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        batch = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
        if self.nnz == 0:
            return np.zeros(batch + (self.n,))
        prod = x[..., self.i] * y[..., self.j]
        flat = prod.reshape(-1, self.nnz)
        return np.asarray(flat @ self._gather).reshape(batch + (self.n,))

    def dense(self):
        out = np.zeros((self.n, self.n, self.n))
        np.add.at(out, (self.i, self.j, self.l), self.c)
        return out

    def truncate(self, m):
        keep = (self.i < m) & (self.j < m) & (self.l < m)
        return TriadTable(m, self.i[keep], self.j[keep], self.l[keep], self.c[keep],
                          self.backend, self.meta)

    def content_hash(self):
        h = hashlib.sha256()
        h.update(json.dumps([self.backend, self.n]).encode())
        for a in (self.i, self.j, self.l):
            h.update(a.astype("<i4").tobytes())
        h.update(self.c.astype("<f8").tobytes())
        return h.hexdigest()


def empty_table(n):
    """Table with no entries: the linear (``B = 0``) backend."""
    z = np.zeros(0, dtype=np.int64)
    return TriadTable(n, z, z, z, np.zeros(0), backend="linear")


def table_from_dense(b, tol=1e-12):
    """Synthetic table from a dense ``(n, n, n)`` tensor.

    Rejects tensors that are not antisymmetric in the last two slots; the
    stored table is the exact antisymmetric part.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if b.shape != (n, n, n):
        raise ValueError("structure tensor must have shape (n, n, n)")
    defect = np.max(np.abs(b + b.transpose(0, 2, 1)), initial=0.0)
    scale = max(np.max(np.abs(b), initial=0.0), 1.0)
    if defect > tol * scale:
        raise ValueError(f"tensor is not antisymmetric in its last two slots "
                         f"(defect {defect:.3e})")
    anti = 0.5 * (b - b.transpose(0, 2, 1))
    i, j, l = np.nonzero(anti)
    return TriadTable(n, i, j, l, anti[i, j, l], backend="synthetic")


def random_antisymmetric_table(n, density, rng):
    """Random sparse synthetic table, handy for shell-model style toys."""
    b = np.where(rng.random((n, n, n)) < density, rng.standard_normal((n, n, n)), 0.0)
    return table_from_dense(0.5 * (b - b.transpose(0, 2, 1)))


# complex Fourier coefficients (of e^{+i theta}, e^{-i theta}) of cos, sin
# and of their derivatives
_TRIG = {
    (COS, False): (0.5, 0.5),
    (SIN, False): (-0.5j, 0.5j),
    (COS, True): (0.5j, -0.5j),  # d/dtheta cos = -sin
    (SIN, True): (0.5, 0.5),  # d/dtheta sin = cos
}


def _triple_integral(p1, k1, p2, k2, p3, k3):
    """Vectorized ``int f1(k1.x) f2'(k2.x) f3(k3.x) dx`` over the torus.

    ``f2'`` is the derivative of the second profile.  Arguments are arrays
    of parities and ``(m, 2)`` wavevectors.
    """
    coef = []
    for p, deriv in ((p1, False), (p2, True), (p3, False)):
        plus = np.where(p == COS, _TRIG[(COS, deriv)][0], _TRIG[(SIN, deriv)][0])
        minus = np.where(p == COS, _TRIG[(COS, deriv)][1], _TRIG[(SIN, deriv)][1])
        coef.append((plus, minus))
    total = np.zeros(len(p1), dtype=complex)
    for s1 in (0, 1):
        for s2 in (0, 1):
            for s3 in (0, 1):
                sgn = np.array([1, -1])
                q = sgn[s1] * k1 + sgn[s2] * k2 + sgn[s3] * k3
                hit = np.all(q == 0, axis=1)
                total += hit * coef[0][s1] * coef[1][s2] * coef[2][s3]
    return _AREA * total.real


def _canonical(q):
    """Map wavevectors to the half lattice; returns (canonical, valid)."""
    flip = (q[:, 0] < 0) | ((q[:, 0] == 0) & (q[:, 1] < 0))
    out = np.where(flip[:, None], -q, q)
    valid = np.any(q != 0, axis=1)
    return out, valid


def torus_structure_constants(modes):
    """Raw analytic ``b_ijl`` for every closed triad of a torus truncation.

    Returns ``(i, j, l, value)`` with both orientations ``(j, l)`` present;
    no antisymmetrization is applied here.
    """
    n = modes.n
    wv = modes.wavevectors.astype(np.int64)
    par = modes.parity
    radius = int(np.abs(wv).max()) if n else 0
    size = 4 * radius + 1
    lookup = -np.ones((size, size, 2), dtype=np.int64)
    lookup[wv[:, 0] + 2 * radius, wv[:, 1] + 2 * radius, par] = np.arange(n)

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    cand_i, cand_j, cand_l = [], [], []
    for sign in (1, -1):
        q, valid = _canonical(wv[ii] + sign * wv[jj])
        for p in (COS, SIN):
            idx = np.full(ii.size, -1)
            ok = valid & np.all(np.abs(q) <= 2 * radius, axis=1)
            idx[ok] = lookup[q[ok, 0] + 2 * radius, q[ok, 1] + 2 * radius, p]
            hit = idx >= 0
            cand_i.append(ii[hit])
            cand_j.append(jj[hit])
            cand_l.append(idx[hit])
    i = np.concatenate(cand_i)
    j = np.concatenate(cand_j)
    l = np.concatenate(cand_l)

    kf = wv.astype(float)
    direction = np.stack([-kf[:, 1], kf[:, 0]], axis=1) / np.linalg.norm(kf, axis=1)[:, None]
    amp = MODE_NORM * direction
    advect = np.sum(amp[i] * kf[j], axis=1)  # (a_i . k_j)
    align = np.sum(amp[j] * amp[l], axis=1)  # (a_j . a_l)
    integral = _triple_integral(par[i], wv[i], par[j], wv[j], par[l], wv[l])
    return i, j, l, advect * align * integral


def assemble_structure_constants(basis, zero_tol=1e-13):
    """Antisymmetric :class:`TriadTable` for a torus basis.

    ``basis`` is the list returned by :func:`assemble_torus_basis` or a
    :class:`TorusModes`.  Each unordered pair ``(j, l)`` is evaluated in
    both orientations, the antisymmetric part is stored, and exact zeros
    (``b_iil``, ``b_ijj``) are dropped.
    """
    if isinstance(basis, TorusModes):
        modes = basis
    else:
        modes = TorusModes(np.array([m.wavevector for m in basis], dtype=np.int64),
                           np.array([m.parity for m in basis]))
    n = modes.n
    i, j, l, val = torus_structure_constants(modes)
    dense_key = (i * n + j) * n + l
    lookup = dict(zip(dense_key.tolist(), val.tolist()))
    upper = j < l
    i, j, l, val = i[upper], j[upper], l[upper], val[upper]
    partner = np.array([lookup.get(k, 0.0) for k in ((i * n + l) * n + j).tolist()])
    anti = 0.5 * (val - partner)
    keep = np.abs(anti) > zero_tol
    i, j, l, anti = i[keep], j[keep], l[keep], anti[keep]
    raw_defect = float(np.max(np.abs(val + partner), initial=0.0))
    return TriadTable(n, np.concatenate([i, i]), np.concatenate([j, l]),
                      np.concatenate([l, j]), np.concatenate([anti, -anti]),
                      backend="torus", meta={"raw_antisymmetry_defect": raw_defect})


def torus_table(n, cache_dir=None):
    """Torus structure constants, optionally cached on disk by content key."""
    modes = torus_modes(n)
    if cache_dir is None:
        return assemble_structure_constants(modes)
    key = _basis_key(modes)
    path = Path(cache_dir) / f"triads-torus-{n}-{key[:16]}.bin"
    if path.exists():
        table = load_table(path)
        if table.meta.get("basis_key") == key:
            return table
    table = assemble_structure_constants(modes)
    table.meta["basis_key"] = key
    save_table(table, path)
    return table


def _basis_key(modes):
    h = hashlib.sha256()
    h.update(modes.wavevectors.astype("<i4").tobytes())
    h.update(modes.parity.astype("<i1").tobytes())
    return h.hexdigest()


_MAGIC = b"TRIADTABLE1\n"
_RECORD = np.dtype([("i", "<i4"), ("j", "<i4"), ("l", "<i4"), ("c", "<f8")])


def save_table(table, path):
    """Write ``header line (JSON) + packed (i, j, l, c) records``."""
    header = {"backend": table.backend, "n": table.n, "nnz": table.nnz,
              "hash": table.content_hash(), "meta": table.meta}
    rec = np.empty(table.nnz, dtype=_RECORD)
    rec["i"], rec["j"], rec["l"], rec["c"] = table.i, table.j, table.l, table.c
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(json.dumps(header, sort_keys=True).encode() + b"\n")
    buf.write(rec.tobytes())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(buf.getvalue())
    os.replace(tmp, path)


def load_table(path):
    data = Path(path).read_bytes()
    if not data.startswith(_MAGIC):
        raise ValueError(f"{path} is not a triad table file")
    rest = data[len(_MAGIC):]
    end = rest.index(b"\n")
    header = json.loads(rest[:end])
    rec = np.frombuffer(rest[end + 1:], dtype=_RECORD, count=header["nnz"])
    table = TriadTable(header["n"], rec["i"], rec["j"], rec["l"], rec["c"],
                       backend=header["backend"], meta=header.get("meta"))
    if table.content_hash() != header["hash"]:
        raise ValueError(f"{path}: content hash mismatch")
    return table


def B_apply(x, table):
    """Galerkin nonlinearity ``B_n(x)``."""
    return table.bilinear(x, x)


def b_eval(x, y, z, table):
    """``b(x, y, z) = sum x_i y_j z_l b_ijl``."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    return np.sum(x[..., table.i] * y[..., table.j] * z[..., table.l] * table.c, axis=-1)


def b_dense_oracle(x, y, z, table):
    """Unoptimized triple loop over the dense tensor (test oracle)."""
    dense = table.dense()
    n = table.n
    total = 0.0
    for i in range(n):
        for j in range(n):
            for l in range(n):
                total += x[i] * y[j] * z[l] * dense[i, j, l]
    return total


def admissible_exponents(theta, rho, delta):
    return (0 <= delta < 1 and theta > 0 and rho > 0
            and rho + theta + delta >= 1 and rho + delta > 0.5)


def b_ratio(x, y, z, table, s, theta, rho, delta):
    """``|b(x,y,z)| / (||A^theta x|| ||A^rho y|| ||A^delta z||)``, 0 when degenerate."""
    den = (np.linalg.norm(fractional_apply(x, s, theta), axis=-1)
           * np.linalg.norm(fractional_apply(y, s, rho), axis=-1)
           * np.linalg.norm(fractional_apply(z, s, delta), axis=-1))
    num = np.abs(b_eval(x, y, z, table))
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def b_contract(table, slot, a, b):
    """Gradient of ``b`` with respect to one slot, the other two held fixed.

    ``slot`` is 0, 1 or 2; ``a`` and ``b`` fill the remaining slots in
    order.  Since ``b`` is linear in each slot, ``b(x, y, z)`` equals the
    dot product of this vector with the free argument.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    idx = (table.i, table.j, table.l)
    free = idx[slot]
    rest = [idx[k] for k in range(3) if k != slot]
    w = a[rest[0]] * b[rest[1]] * table.c
    return np.bincount(free, weights=w, minlength=table.n)


def _sphere(v, s, alpha):
    nrm = np.linalg.norm(fractional_apply(v, s, alpha))
    return v / nrm if nrm > 0 else v


def b_bound_constant_probe(table, s, theta, rho, delta, m, rng, sweeps=30):
    """Empirical trilinear bound constant from ``m`` random triples.

    Each slot starts uniformly on the unit sphere of its own fractional
    norm (``A^-theta w`` for Gaussian ``w``) and the triple is then pushed
    uphill by ``sweeps`` rounds of exact per-slot maximization: for fixed
    ``y, z`` the best ``x`` is ``A^(-2 theta) grad_x b``.  Unrefined
    samples concentrate near zero as ``n`` grows, refined ones approach
    the truncation's true constant from below.
    """
    if not admissible_exponents(theta, rho, delta):
        raise ValueError(f"inadmissible exponents theta={theta}, rho={rho}, delta={delta}")
    n = s.n
    exps = (theta, rho, delta)
    best = 0.0
    for _ in range(m):
        xyz = [_sphere(fractional_apply(rng.standard_normal(n), s, -e), s, e)
               for e in exps]
        for _ in range(sweeps):
            for k in range(3):
                others = [xyz[q] for q in range(3) if q != k]
                g = b_contract(table, k, *others)
                cand = fractional_apply(g, s, -2 * exps[k])
                if np.any(cand):
                    xyz[k] = _sphere(cand, s, exps[k])
        best = max(best, float(b_ratio(*xyz, table, s, theta, rho, delta)))
    return best
