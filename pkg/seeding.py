import hashlib
from typing import Union

import numpy as np

SeedPart = Union[int, str]


def derive_seed(seed: int, *parts: SeedPart) -> int:
    """
    Derive a named sub-seed from a root seed.

    The result depends only on the root seed and the parts, never on call order,
    so per-sample generation can run in any order or in parallel.

    :param seed: root seed.
    :param parts: names and indices identifying the consumer, e.g. ``("data", 3, 0)``.
    :return: a non-negative 63-bit integer seed.
    """
    digest = hashlib.blake2b(digest_size=8)
    digest.update(str(int(seed)).encode("utf-8"))
    for part in parts:
        digest.update(b"\x1f")
        digest.update(str(part).encode("utf-8"))
    return int.from_bytes(digest.digest(), "little") >> 1


def rng_for(seed: int, *parts: SeedPart) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *parts))
