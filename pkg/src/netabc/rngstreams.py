"""Counter-based random number streams.

Every stochastic component draws from a Philox generator keyed by a master
seed plus an integer stream key, so results are a pure function of
(master_seed, key) and independent of scheduling or worker count.
"""

from __future__ import annotations

import numpy as np

# Stream domains, used as the first element of a stream key so that the
# different consumers of a master seed never collide.
DOMAIN_TABLE = 1
DOMAIN_TRUTH = 2
DOMAIN_OBSERVATION = 3
DOMAIN_PRIOR_BASELINE = 4
DOMAIN_MAPPING = 5


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Return the generator for stream `key` under `master_seed`."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))
