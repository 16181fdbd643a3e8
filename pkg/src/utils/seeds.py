import hashlib

import numpy as np


def derive_seed(master, *coords):
    """Seed for one unit of work, a pure function of the master seed and the unit's coordinates."""
    text = "/".join([str(int(master))] + [repr(c.item() if hasattr(c, "item") else c) for c in coords])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed)))
