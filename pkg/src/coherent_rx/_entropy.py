"""Small entropy helpers shared across modules (natural log, 0 log 0 = 0)."""
import numpy as np


def xlogx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def binary_entropy(p):
    """Binary entropy in nats, elementwise; exact at 0 and 1."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    inner = (p > 0) & (p < 1)
    q = p[inner]
    out[inner] = -q * np.log(q) - (1.0 - q) * np.log1p(-q)
    if out.ndim == 0:
        return float(out)
    return out


def shannon_entropy(p, axis=-1):
    return -np.sum(xlogx(p), axis=axis)


def nats_to_bits(x):
    return np.asarray(x) / np.log(2.0)
