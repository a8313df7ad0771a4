"""Reproducible child seeds from a single root seed."""

MASK64 = (1 << 64) - 1


def mix64(x: int) -> int:
    """SplitMix64 finalizer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def child_seed(root: int, stream: int) -> int:
    """Seed of stream ``stream``; the root is mixed first so nearby roots do not share streams."""
    return mix64(mix64(int(root) & MASK64) ^ int(stream))
