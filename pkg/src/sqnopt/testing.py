"""Reference implementations used only to check the production code paths.

Nothing in the optimizers imports this module; it materializes matrices that
the library otherwise never forms.
"""
from __future__ import annotations

import numpy as np

from .lbfgs import LbfgsMemory


def explicit_h_matrix(mem: LbfgsMemory) -> np.ndarray:
    """Dense H_t built by literally applying the BFGS inverse update per pair."""
    if mem.is_empty:
        raise ValueError("empty L-BFGS memory")
    newest = mem.newest
    n = newest.s.size
    I = np.eye(n)
    H = (newest.sy / newest.yy) * I
    for p in mem.pairs:
        V = I - p.rho * np.outer(p.y, p.s)
        H = V.T @ H @ V + p.rho * np.outer(p.s, p.s)
    return H


def explicit_h_sequence(mem: LbfgsMemory):
    """Intermediate matrices of the update loop: [H_0, H_1, ..., H_m]."""
    newest = mem.newest
    n = newest.s.size
    I = np.eye(n)
    H = (newest.sy / newest.yy) * I
    out = [H]
    for p in mem.pairs:
        V = I - p.rho * np.outer(p.y, p.s)
        H = V.T @ H @ V + p.rho * np.outer(p.s, p.s)
        out.append(H)
    return out
