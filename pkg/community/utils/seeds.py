"""
Seed Derivation
splitmix64-style derivation of child seeds from one master seed

derive_seed(s, a, b, ...) folds each path component into the state with
    state = splitmix64(state ^ component)
starting from state = splitmix64(s). All arithmetic is modulo 2**64, so the
derived seeds are identical on every platform and are recorded verbatim in
run manifests.
"""

from typing import Dict

MASK64 = (1 << 64) - 1

# Named streams so each pipeline stage draws from its own seed
STREAM_GRAPH = 1
STREAM_PILOTS = 2
STREAM_PLAN = 3
STREAM_DETECT = 4
STREAM_SHUFFLE = 5


def splitmix64(value: int) -> int:
    """One splitmix64 output step for the given 64-bit state"""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *path: int) -> int:
    """
    Derive a child seed from a master seed and an integer path.

    Args:
        master_seed: Non-negative master seed (u64)
        *path: Path components, e.g. (grid_point, repetition, stream)

    Returns:
        Child seed in [0, 2**64)
    """
    if master_seed < 0:
        raise ValueError(f"seed must be non-negative, got {master_seed}")
    state = splitmix64(master_seed & MASK64)
    for component in path:
        state = splitmix64(state ^ (int(component) & MASK64))
    return state


def stage_seeds(master_seed: int, *path: int) -> Dict[str, int]:
    """Seeds for every pipeline stage under one path"""
    return {
        "graph": derive_seed(master_seed, *path, STREAM_GRAPH),
        "pilots": derive_seed(master_seed, *path, STREAM_PILOTS),
        "plan": derive_seed(master_seed, *path, STREAM_PLAN),
        "detect": derive_seed(master_seed, *path, STREAM_DETECT),
        "shuffle": derive_seed(master_seed, *path, STREAM_SHUFFLE),
    }


def sklearn_seed(seed: int) -> int:
    """scikit-learn only accepts random_state in [0, 2**32)"""
    return int(seed) % (1 << 32)
