from __future__ import annotations
import numpy as np

# Purposes get their own slot in the spawn key so substreams never overlap
PURPOSES: dict[str, int] = {
    "run": 0,
    "field": 1,
    "dipole": 2,
    "search": 3,
}

SEED_MASK = (1 << 64) - 1


def _seed_sequence(seed: int, purpose: str, *counters: int) -> np.random.SeedSequence:
    if purpose not in PURPOSES:
        raise ValueError(f"Unknown random stream purpose: {purpose}")
    return np.random.SeedSequence(
        entropy=int(seed) & SEED_MASK,
        spawn_key=(PURPOSES[purpose], *[int(c) for c in counters]),
    )


def substream(seed: int, purpose: str, *counters: int) -> np.random.Generator:
    """
    Counter-based (Philox) generator for the (seed, purpose, counters...) tuple.
    Identical tuples always give identical streams, whatever process draws them.
    """
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, purpose, *counters)))


def derive_seed(master_seed: int, run_id: int) -> int:
    """
    64-bit seed of run `run_id` in a batch seeded by `master_seed`
    """
    words = _seed_sequence(master_seed, "run", run_id).generate_state(2, np.uint32)
    return (int(words[0]) << 32) | int(words[1])
