"""numba kernels for collapsed Gibbs sampling.

Randomness never comes from inside the kernels: the caller draws uniforms
from a seeded ``numpy.random.Generator`` and passes them in, so a run is
fully determined by the seed and the input order.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _draw(p, u):
    total = 0.0
    for k in range(p.shape[0]):
        total += p[k]
    target = u * total
    acc = 0.0
    last = p.shape[0] - 1
    for k in range(last):
        acc += p[k]
        if target < acc:
            return k
    return last


@njit(cache=True)
def init_counts(doc_ptr, words, z, n_dk, n_kw, n_k):
    for d in range(doc_ptr.shape[0] - 1):
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            k = z[i]
            n_dk[d, k] += 1
            n_kw[k, words[i]] += 1
            n_k[k] += 1


@njit(cache=True)
def sweep(doc_ptr, words, z, n_dk, n_kw, n_k, alpha, beta, uniforms):
    """One pass over every token, resampling its topic in place."""
    n_topics = n_k.shape[0]
    v_beta = n_kw.shape[1] * beta
    p = np.empty(n_topics)
    inv = np.empty(n_topics)
    for t in range(n_topics):
        inv[t] = 1.0 / (n_k[t] + v_beta)
    for d in range(doc_ptr.shape[0] - 1):
        for i in range(doc_ptr[d], doc_ptr[d + 1]):
            w = words[i]
            k = z[i]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1
            inv[k] = 1.0 / (n_k[k] + v_beta)
            for t in range(n_topics):
                p[t] = (n_dk[d, t] + alpha) * (n_kw[t, w] + beta) * inv[t]
            k = _draw(p, uniforms[i])
            z[i] = k
            n_dk[d, k] += 1
            n_kw[k, w] += 1
            n_k[k] += 1
            inv[k] = 1.0 / (n_k[k] + v_beta)


@njit(cache=True)
def fold_in(words, z, phi, alpha, uniforms, n_sweeps, burn_in):
    """Resample one document's topics against a frozen ``phi``.

    Returns the document-topic estimate averaged over the sweeps after
    ``burn_in``. ``uniforms`` holds ``n_sweeps * len(words)`` draws.
    """
    n_topics = phi.shape[0]
    n = words.shape[0]
    n_dk = np.zeros(n_topics)
    for i in range(n):
        n_dk[z[i]] += 1.0
    p = np.empty(n_topics)
    acc = np.zeros(n_topics)
    kept = 0
    denom = n + n_topics * alpha
    for s in range(n_sweeps):
        for i in range(n):
            w = words[i]
            n_dk[z[i]] -= 1.0
            for t in range(n_topics):
                p[t] = (n_dk[t] + alpha) * phi[t, w]
            k = _draw(p, uniforms[s * n + i])
            z[i] = k
            n_dk[k] += 1.0
        if s >= burn_in:
            for t in range(n_topics):
                acc[t] += (n_dk[t] + alpha) / denom
            kept += 1
    for t in range(n_topics):
        acc[t] /= kept
    return acc
