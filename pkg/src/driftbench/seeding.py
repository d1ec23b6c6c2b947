"""Deterministic seed derivation for run components.

Every stochastic component of a run (model init, matcher init, bagging
draws, ...) gets its own seed derived from the run seed plus a stable
component key, so adding a consumer never shifts another one's stream.
"""

import numpy as np

# Fixed component keys; values are arbitrary but frozen (changing one
# changes every downstream run).
_KEYS = {
    "model": 1,
    "matcher": 2,
    "reservoir": 3,
    "stream": 4,
    "bagging": 5,
    "reinit": 6,
}


def derive_seed(seed, component, index=0):
    """A u32 seed unique to (run seed, component name, optional index)."""
    key = _KEYS.get(component)
    if key is None:
        raise KeyError(f"unknown seed component {component!r}")
    return int(np.random.SeedSequence([int(seed), key, int(index)]).generate_state(1)[0])
