"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np

from polyrest.network import NetworkTopology, build_bus_matrices


def random_tree(rng: np.random.Generator, n: int, r_scale: float = 0.05):
    """Random rooted tree with n load buses and positive line impedances."""
    edges = []
    for j in range(1, n + 1):
        parent = int(rng.integers(0, j))
        r = float(rng.uniform(0.2, 1.0) * r_scale)
        x = float(rng.uniform(0.05, 0.3) * r_scale)
        edges.append((parent, j, r, x))
    return NetworkTopology(n=n, v0=1.0, edges=tuple(edges))


def random_matrices(rng: np.random.Generator, n: int, r_scale: float = 0.05):
    return build_bus_matrices(random_tree(rng, n, r_scale))
