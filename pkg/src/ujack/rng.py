"""Counter-based random streams.

Every random quantity in ujack is addressed by ``(seed, stream, index)``.
The seed and stream name are hashed into a Philox key; the index occupies
one word of the Philox counter, so stream ``index`` can be regenerated in
isolation. Results therefore do not depend on how work is split across
threads or processes.
"""

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _stream_id(stream):
    if isinstance(stream, str):
        return zlib.crc32(stream.encode("utf-8"))
    return int(stream)


def philox_key(seed, stream):
    """128-bit Philox key derived from a 64-bit seed and a stream name."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, _stream_id(stream)])
    return ss.generate_state(2, np.uint64)


def generator(seed, stream, index=0):
    """Return a numpy Generator for draw ``index`` of ``stream``.

    Distinct indices occupy disjoint regions of the Philox counter space
    (2**64 blocks each), which no single draw comes close to exhausting.
    """
    counter = np.array([0, int(index) & _MASK64, 0, 0], dtype=np.uint64)
    bitgen = np.random.Philox(key=philox_key(seed, stream), counter=counter)
    return np.random.Generator(bitgen)


def derive_seed(seed, stream, index=0):
    """A fresh 63-bit integer seed for child computations."""
    value = generator(seed, stream, index).integers(0, 2**63 - 1, dtype=np.int64)
    return int(value)
