"""Independent brute-force reference implementations used only by tests.

These deliberately avoid the library's vectorized code paths: plain Python
loops over scalars, stdlib math, explicit pair enumeration.
"""

import math
from itertools import combinations

import numpy as np


def cos_sim(a, b, eps=1e-8):
    na = math.sqrt(sum(x * x for x in a)) + eps
    nb = math.sqrt(sum(x * x for x in b)) + eps
    dot = sum(x * y for x, y in zip(a, b))
    return dot / (na * nb)


def ntxent_brute(z1, z2, tau, eps=1e-8):
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    b = len(z1)
    total = 0.0
    for i in range(b):
        num = math.exp(cos_sim(z1[i], z2[i], eps) / tau)
        den = sum(math.exp(cos_sim(z1[i], z2[j], eps) / tau) for j in range(b))
        total += -math.log(num / den)
    return total / b


def multiview_brute(views, tau, two_view=False, eps=1e-8):
    names = list(views)
    total = 0.0
    n_pairs = 0
    for a, b in combinations(names, 2):
        total += ntxent_brute(views[a], views[b], tau, eps)
        if two_view:
            total += ntxent_brute(views[b], views[a], tau, eps)
        n_pairs += 1
    return total / n_pairs


def cross_entropy_brute(scores, labels):
    scores = np.asarray(scores, dtype=float)
    total = 0.0
    for s, y in zip(scores, labels):
        den = sum(math.exp(v) for v in s)
        total += -math.log(math.exp(s[y]) / den)
    return total / len(scores)


def finite_difference_grad(fn, x, h=1e-5):
    """Central differences of a scalar function of one flat numpy array."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    flat = x.ravel()
    g = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn(x)
        flat[i] = orig - h
        fm = fn(x)
        flat[i] = orig
        g[i] = (fp - fm) / (2 * h)
    return grad
