"""Seeded random streams.

Every consumer gets its own Philox stream: the generator seeded with ``seed``
and then jumped ``stream`` times (each jump advances the counter by 2**128).
Equal user seeds therefore never make, say, the noise replay the factors.
"""

import numpy as np

FACTORS = 0
ALS_INIT = 1
SGD_SAMPLING = 2
SKETCH = 3
NOISE = 4


def philox(seed, stream=0):
    bitgen = np.random.Philox(int(seed) & (2**64 - 1))
    if stream:
        bitgen = bitgen.jumped(stream)
    return np.random.Generator(bitgen)
