import numpy as np
import pytest

from stochns.nonlinearity import (B_apply, TriadTable, admissible_exponents,
                                  assemble_structure_constants, assemble_torus_basis,
                                  b_bound_constant_probe, b_contract, b_dense_oracle, b_eval,
                                  b_ratio, empty_table, load_table, mode_field,
                                  quadrature_structure_constant, random_antisymmetric_table,
                                  save_table, table_from_dense, torus_modes, torus_table)
from stochns.spectral import build_spectrum


def test_basis_modes_are_orthonormal_and_divergence_free():
    basis, s = assemble_torus_basis(12)
    N = 32
    fields = np.array([mode_field(m, N) for m in basis])
    gram = np.einsum("aixy,bixy->ab", fields, fields) * (4 * np.pi ** 2 / N ** 2)
    assert np.allclose(gram, np.eye(12), atol=1e-13)
    for m in basis:
        assert np.dot(m.direction, m.wavevector) == pytest.approx(0.0)
        assert m.eigenvalue == np.dot(m.wavevector, m.wavevector)


def test_torus_ordering_and_first_shell():
    modes = torus_modes(8)
    assert modes.wavevectors[:4].tolist() == [[0, 1], [0, 1], [1, 0], [1, 0]]
    assert modes.parity[:2].tolist() == [0, 1]


def test_table_matches_quadrature_oracle(torus16):
    _, table = torus16
    basis, _ = assemble_torus_basis(16)
    for e in range(0, table.nnz, 7):
        i, j, l = table.i[e], table.j[e], table.l[e]
        assert quadrature_structure_constant(basis, i, j, l, 32) == pytest.approx(table.c[e], abs=1e-12)


def test_table_antisymmetric_and_energy_conserving(torus32, rng):
    _, table = torus32
    d = table.dense()
    assert np.array_equal(d, -d.transpose(0, 2, 1))
    u = rng.standard_normal((50, 32))
    assert np.max(np.abs(np.sum(u * B_apply(u, table), axis=1))) < 1e-12
    assert table.meta["raw_antisymmetry_defect"] < 1e-13


def test_sparse_equals_dense_oracle(torus16, rng):
    _, table = torus16
    x, y, z = rng.standard_normal((3, 16))
    assert b_eval(x, y, z, table) == pytest.approx(b_dense_oracle(x, y, z, table), abs=1e-13)


def test_bilinear_is_batched(torus16, rng):
    _, table = torus16
    x = rng.standard_normal((3, 4, 16))
    out = table.bilinear(x, x)
    assert out.shape == (3, 4, 16)
    assert np.allclose(out[1, 2], table.bilinear(x[1, 2], x[1, 2]))


def test_truncation_matches_direct_assembly():
    big = torus_table(48).truncate(20)
    small = torus_table(20)
    assert np.array_equal(big.dense(), small.dense())


def test_empty_table_is_linear_backend():
    t = empty_table(5)
    assert t.nnz == 0 and t.backend == "linear"
    assert np.array_equal(B_apply(np.ones((2, 5)), t), np.zeros((2, 5)))


def test_table_from_dense_rejects_non_antisymmetric(rng):
    b = rng.standard_normal((4, 4, 4))
    with pytest.raises(ValueError, match="antisymmetric"):
        table_from_dense(b)
    t = table_from_dense(b - b.transpose(0, 2, 1))
    assert np.allclose(t.dense(), b - b.transpose(0, 2, 1))


def test_table_rejects_out_of_range_indices():
    with pytest.raises(ValueError):
        TriadTable(3, [0], [1], [3], [1.0])


def test_random_table_conserves_energy(rng):
    t = random_antisymmetric_table(10, 0.2, rng)
    u = rng.standard_normal(10)
    assert abs(u @ B_apply(u, t)) < 1e-12


def test_cache_roundtrip(tmp_path):
    t = torus_table(24, cache_dir=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    again = torus_table(24, cache_dir=tmp_path)
    assert again.content_hash() == t.content_hash()
    loaded = load_table(files[0])
    assert np.array_equal(loaded.dense(), t.dense())


def test_cache_detects_corruption(tmp_path, torus16):
    _, table = torus16
    path = tmp_path / "t.bin"
    save_table(table, path)
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        load_table(path)


def test_assemble_from_basis_list_equals_modes():
    basis, _ = assemble_torus_basis(16)
    a = assemble_structure_constants(basis)
    b = assemble_structure_constants(torus_modes(16))
    assert np.array_equal(a.dense(), b.dense())


@pytest.mark.parametrize("exps,ok", [((0.25, 0.25, 0.5), True), ((0.5, 0.0, 0.5), False),
                                     ((0.1, 0.1, 0.2), False), ((0.25, 0.25, 1.0), False)])
def test_admissible_exponents(exps, ok):
    assert admissible_exponents(*exps) is ok


def test_contraction_reproduces_trilinear_form(torus16, rng):
    _, table = torus16
    x, y, z = rng.standard_normal((3, 16))
    ref = b_eval(x, y, z, table)
    assert b_contract(table, 0, y, z) @ x == pytest.approx(ref)
    assert b_contract(table, 1, x, z) @ y == pytest.approx(ref)
    assert b_contract(table, 2, x, y) @ z == pytest.approx(ref)


def test_bound_probe_refines_random_samples(torus32):
    s, table = torus32
    rng = np.random.default_rng(0)
    w = rng.standard_normal((3, 200, 32))
    raw = np.max(b_ratio(w[0], w[1], w[2], table, s, 0.25, 0.25, 0.5))
    c0 = b_bound_constant_probe(table, s, 0.25, 0.25, 0.5, 5, np.random.default_rng(1))
    assert np.isfinite(c0) and c0 > raw


def test_bound_probe_stable_in_samples_and_levels():
    vals = {}
    for n in (16, 32, 64):
        s, t = build_spectrum("torus", n), torus_table(n)
        a = b_bound_constant_probe(t, s, 0.25, 0.25, 0.5, 5, np.random.default_rng(1))
        b = b_bound_constant_probe(t, s, 0.25, 0.25, 0.5, 20, np.random.default_rng(2))
        assert abs(a / b - 1) < 0.01
        vals[n] = b
    # nested truncations: the constant can only grow, and it saturates
    assert vals[16] <= vals[32] <= vals[64]
    assert vals[32] / vals[16] - 1 < 0.25 and vals[64] / vals[32] - 1 < 0.25


def test_bound_probe_rejects_inadmissible(torus16):
    s, table = torus16
    with pytest.raises(ValueError):
        b_bound_constant_probe(table, s, 0.1, 0.1, 0.1, 3, np.random.default_rng(0))
