import numpy as np
from scipy import stats

from stochns.rng import Streams, counter_normals


def test_normals_are_pure_functions_of_the_counter():
    a = Streams(7).normals(3, 10, traj=np.arange(4))
    b = Streams(7).normals(3, 10, traj=np.arange(4))
    assert np.array_equal(a, b)
    assert a.shape == (4, 10)


def test_low_modes_independent_of_truncation():
    s = Streams(11)
    assert np.array_equal(s.normals(5, 16)[:8], s.normals(5, 8))


def test_batch_matches_single_trajectories():
    s = Streams(3)
    batch = s.normals(2, 6, traj=np.arange(5))
    for t in range(5):
        assert np.array_equal(batch[t], s.normals(2, 6, traj=t))


def test_block_matches_per_step_draws():
    s = Streams(3)
    blk = s.block(np.arange(4), 5, traj=2)
    for m in range(4):
        assert np.array_equal(blk[m], s.normals(m, 5, traj=2))


def test_split_gives_distinct_families():
    root = Streams(1)
    assert root.split(0) != root.split(1)
    assert root.split(0) == Streams(1).split(0)
    assert not np.allclose(root.split(0).normals(0, 8), root.split(1).normals(0, 8))


def test_normals_look_standard():
    z = counter_normals(5, np.arange(20000), 0, 0)
    assert abs(z.mean()) < 0.03
    assert abs(z.std() - 1) < 0.03
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_distinct_key_components_do_not_alias():
    a = counter_normals(0, 1, 2, 3)
    b = counter_normals(0, 2, 1, 3)
    c = counter_normals(0, 3, 2, 1)
    assert len({float(a), float(b), float(c)}) == 3


def test_uniforms_in_open_unit_interval():
    u = Streams(9).uniforms(0, 1000, traj=np.arange(10))
    assert np.all(u > 0) and np.all(u <= 1)
