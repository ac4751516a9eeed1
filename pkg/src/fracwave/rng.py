"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, stream, index)`` through a
SeedSequence, so a draw depends only on its key and never on how work was
scheduled across workers.
"""

import numpy as np


def stream(seed, stream_id=0, index=0):
    """Generator for the draw keyed by ``(seed, stream_id, index)``."""
    key = np.random.SeedSequence([int(seed), int(stream_id), int(index)])
    return np.random.Generator(np.random.Philox(key))
