"""Counter-based random streams.

Every standard normal used by the package is a pure function of
``(seed, trajectory, mode, step, stream)``.  Nothing is drawn
sequentially, so a trajectory simulated at truncation 16 sees exactly
the same noise on its first 16 modes as the same trajectory at
truncation 128, and a Monte Carlo batch gives identical samples no matter
how it is split across workers.

The mixing function is the SplitMix64 finalizer applied once per key
component.  numpy's own ``Philox`` is counter-based too, but it is keyed
per generator object and cannot be evaluated over arrays of keys, which
is what the batched simulators need.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
# distinct odd multipliers keep the key components from aliasing
_KEY_MULT = (
    np.uint64(0xD1B54A32D192ED03),
    np.uint64(0xAEF17502108EF2D9),
    np.uint64(0xF1357AEA2E62A9C5),
    np.uint64(0x9FB21C651E98DF25),
)
_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0


def _mix(h):
    h = h + _GOLDEN
    h = (h ^ (h >> np.uint64(30))) * _M1
    h = (h ^ (h >> np.uint64(27))) * _M2
    return h ^ (h >> np.uint64(31))


def _as_u64(a):
    return np.asarray(a).astype(np.int64).astype(np.uint64)


def _hash(seed, *parts):
    with np.errstate(over="ignore"):
        h = _mix(_as_u64(seed))
        for mult, part in zip(_KEY_MULT, parts):
            h = _mix(h ^ (_as_u64(part) * mult))
    return h


def _uniform53(h):
    # (0, 1]: never zero, safe for log
    return ((h >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53


def counter_normals(seed, traj, mode, step, stream=0):
    """Standard normals indexed by broadcastable integer counters.

    The result has the broadcast shape of the index arguments.
    """
    traj, mode, step, stream = np.broadcast_arrays(traj, mode, step, stream)
    h = _hash(seed, traj, mode, step, stream)
    with np.errstate(over="ignore"):
        u1 = _uniform53(_mix(h ^ np.uint64(1)))
        u2 = _uniform53(_mix(h ^ np.uint64(2)))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def counter_uniforms(seed, traj, mode, step, stream=0):
    traj, mode, step, stream = np.broadcast_arrays(traj, mode, step, stream)
    h = _hash(seed, traj, mode, step, stream)
    with np.errstate(over="ignore"):
        return _uniform53(_mix(h ^ np.uint64(3)))


class Streams:
    """Splittable family of counter-based normal streams.

    ``Streams(seed).normals(step, n, traj)`` returns the ``n`` mode
    variates of one time step.  ``split(key)`` derives an independent
    family, which is how experiments hand out sub-seeds without ever
    touching ambient entropy.
    """

    def __init__(self, seed=0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def __repr__(self):
        return f"Streams(seed={self.seed})"

    def __eq__(self, other):
        return isinstance(other, Streams) and other.seed == self.seed

    def __hash__(self):
        return hash(("Streams", self.seed))

    def split(self, key):
        """Independent child family labelled by a non-negative integer."""
        h = _hash(self.seed, np.array(0x5EED), np.asarray(key))
        return Streams(int(h))

    def normals(self, step, n, traj=0, stream=0):
        """Normals of shape ``traj.shape + (n,)`` for one time step."""
        traj = np.asarray(traj)
        modes = np.arange(n)
        return counter_normals(self.seed, traj[..., None], modes, step, stream)

    def block(self, steps, n, traj=0, stream=0):
        """Normals of shape ``(len(steps), n)`` for a single trajectory."""
        steps = np.asarray(steps)
        return counter_normals(self.seed, traj, np.arange(n)[None, :],
                               steps[:, None], stream)

    def uniforms(self, step, n, traj=0, stream=0):
        traj = np.asarray(traj)
        return counter_uniforms(self.seed, traj[..., None], np.arange(n),
                                step, stream)

    def describe(self):
        return {"scheme": "splitmix64-counter", "seed": self.seed}
