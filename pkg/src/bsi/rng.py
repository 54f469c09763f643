'''
Counter-based random streams.

A stream is addressed by ``(seed, *key)``. The same address always yields the
same numbers, independent of which thread asks for it or in which order.
'''
from enum import IntEnum
import numpy as np


class Role(IntEnum):
    PRIOR = 0
    MEASURE = 1
    ENCODER = 2
    LAMBDA = 3
    BATCH = 4
    DELTA = 5
    INIT = 6
    DATA = 7


def stream(seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))

