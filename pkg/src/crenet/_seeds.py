"""Deterministic seed derivation (splitmix64 finalizer)."""

_MASK = (1 << 64) - 1


def mix_seed(seed, *indices):
    """Derive a child seed from a master seed and integer indices.

    Each index is folded in with the splitmix64 finalizer, so child
    streams are decorrelated and stable across platforms and runs.
    """
    z = seed & _MASK
    for idx in indices:
        z = (z + 0x9E3779B97F4A7C15 + (idx & _MASK)) & _MASK
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        z = z ^ (z >> 31)
    return z
