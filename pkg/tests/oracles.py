"""Brute-force reference implementations, written independently of the package internals."""

import itertools
import math

import numpy as np


def pmf(x, rho):
    z = sum(1 for b in x if b == 0)
    n = len(x)
    return 0.5 * (rho**z * (1 - rho) ** (n - z) + (1 - rho) ** z * rho ** (n - z))


def brute_entropy(n, rho):
    """-sum p log2 p over all 2^n outcomes."""
    if n == 0:
        return 0.0
    h = 0.0
    for x in itertools.product((0, 1), repeat=n):
        p = pmf(x, rho)
        if p > 0:
            h -= p * math.log2(p)
    return h


def exhaustive_feasible(lams, rho, r, entropies):
    """Check every non-empty subset against r [H(n) - H(n - |S|)]."""
    n = len(lams)
    for p in range(1, n + 1):
        bound = r * (entropies[n] - entropies[n - p])
        for subset in itertools.combinations(range(n), p):
            if sum(lams[k] for k in subset) < bound:
                return False
    return True


def shift_register_encode(bits, nums, den, terminate):
    """Literal controller-form recursive encoder, one register cell at a time."""
    m = max(len(p) for p in (*nums, den)) - 1
    reg = [0] * m  # reg[i] = w_{t-1-i}
    out = []
    steps = len(bits) + (m if terminate else 0)
    for t in range(steps):
        fb = 0
        for i in range(1, len(den)):
            fb ^= den[i] & reg[i - 1]
        u = bits[t] if t < len(bits) else fb
        w = u ^ fb
        taps = [w] + reg
        for p in nums:
            o = 0
            for i, c in enumerate(p):
                o ^= c & taps[i]
            out.append(o)
        reg = [w] + reg[:-1] if m else reg
    if terminate:
        assert not any(reg)
    return np.array(out, dtype=np.uint8)


def bitwise_map(codebook, info_words, ch, ap):
    """Exact posterior info LLRs by enumerating codewords.

    ``codebook[i]`` is the codeword of ``info_words[i]``; LLRs are ln P(0)/P(1).
    """
    sign_c = 1.0 - 2.0 * np.asarray(codebook, float)
    sign_u = 1.0 - 2.0 * np.asarray(info_words, float)
    metric = 0.5 * sign_c @ ch + 0.5 * sign_u @ ap
    out = []
    for j in range(sign_u.shape[1]):
        zero = sign_u[:, j] > 0
        out.append(np.logaddexp.reduce(metric[zero]) - np.logaddexp.reduce(metric[~zero]))
    return np.array(out)


def connection_direct(llrs, rho):
    """Ratio of P(x=0 | others) to P(x=1 | others) with others' bits weighted by their LLRs."""
    n = len(llrs) + 1
    num = den = 0.0
    for cfg in itertools.product((0, 1), repeat=n - 1):
        w = 1.0
        for b, l in zip(cfg, llrs):
            p0 = 1.0 / (1.0 + math.exp(-l))
            w *= p0 if b == 0 else 1.0 - p0
        num += w * pmf((0,) + cfg, rho)
        den += w * pmf((1,) + cfg, rho)
    return math.log(num / den)
