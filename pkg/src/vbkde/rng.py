"""Counter-based uniform streams.

Every draw ``i`` of a sample owns a fixed block of positions in a Philox
stream keyed by the seed, so values depend only on ``(seed, i, lane)`` and
never on how the work is partitioned.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def uniform_block(seed, n, lanes, offset=0):
    """Uniforms in ``[0, 1)`` of shape ``(n, lanes)`` for draws ``offset .. offset+n-1``.

    Row ``i`` holds the stream positions ``(offset + i) * lanes .. + lanes - 1``.
    """
    bitgen = np.random.Philox(key=int(seed) & _MASK64)
    if offset:
        # one Philox counter step yields four 64-bit words
        start = offset * lanes
        bitgen = bitgen.advance(start // 4)
        skip = start % 4
    else:
        skip = 0
    raw = bitgen.random_raw(n * lanes + skip)[skip:]
    return ((raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)).reshape(n, lanes)


def sub_seed(*keys):
    """64-bit seed hashed from integer keys (e.g. ``base_seed, n, rep``)."""
    ss = np.random.SeedSequence([int(k) & _MASK64 for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
