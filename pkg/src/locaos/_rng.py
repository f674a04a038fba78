import zlib

import numpy as np


def substream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for ``label`` derived from ``seed``.

    Runs that share a seed get identical streams per label, so e.g. adding LOC
    modulation never shifts the initial solution or the perturbation draws.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(label.encode())]))
