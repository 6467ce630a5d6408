"""Recursive convolutional codes over GF(2) and log-domain BCJR decoding.

A code is described by a :class:`RationalGenerator`: one input bit per trellis
step, ``k`` output bits per step, every output ``num_j(D) / den(D)``. The
encoder is realised in controller form: the feedback register ``w`` obeys
``w_t = u_t + sum_i den_i w_{t-i}`` and output ``j`` is ``sum_i num_j[i] w_{t-i}``.
Coded bits are serialised step by step, ``[o_0(0), ..., o_{k-1}(0), o_0(1), ...]``.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numba
import numpy as np

from .channel import LLR_CLIP

_NEG = -1e300


def _poly(coeffs) -> tuple:
    c = tuple(int(x) for x in coeffs)
    if not c or any(x not in (0, 1) for x in c):
        raise ValueError(f"polynomial coefficients must be a non-empty 0/1 list, got {coeffs}")
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
    return c


def poly_to_octal(coeffs) -> str:
    """Octal string whose integer has bit ``i`` equal to the coefficient of ``D^i``."""
    return format(sum(c << i for i, c in enumerate(_poly(coeffs))), "o")


def octal_to_poly(text: str) -> tuple:
    value = int(text, 8)
    if value <= 0:
        raise ValueError(f"invalid octal polynomial {text!r}")
    return tuple((value >> i) & 1 for i in range(value.bit_length()))


@dataclass(frozen=True)
class RationalGenerator:
    """Single-input generator ``[num_0/den, ..., num_{k-1}/den]`` over GF(2)."""

    numerators: tuple
    denominator: tuple = (1,)

    def __post_init__(self):
        nums = tuple(_poly(p) for p in self.numerators)
        if not nums:
            raise ValueError("at least one numerator is required")
        den = _poly(self.denominator)
        if den[0] != 1:
            raise ValueError("denominator constant term must be 1")
        object.__setattr__(self, "numerators", nums)
        object.__setattr__(self, "denominator", den)

    @property
    def n_out(self) -> int:
        return len(self.numerators)

    @property
    def memory(self) -> int:
        return max(len(p) for p in (*self.numerators, self.denominator)) - 1

    def to_text(self) -> str:
        """E.g. ``5,1/7`` for ``[(1+D^2)/(1+D+D^2), 1/(1+D+D^2)]``."""
        return ",".join(poly_to_octal(p) for p in self.numerators) + "/" + poly_to_octal(self.denominator)

    @classmethod
    def from_text(cls, text: str) -> "RationalGenerator":
        nums, _, den = text.strip().partition("/")
        return cls(tuple(octal_to_poly(t) for t in nums.split(",")), octal_to_poly(den or "1"))

    @cached_property
    def trellis(self) -> "Trellis":
        return Trellis.from_generator(self)


@dataclass(frozen=True)
class Trellis:
    next_state: np.ndarray  # (S, 2)
    outputs: np.ndarray  # (S, 2, k) uint8
    tail_input: np.ndarray  # (S,) input that zeroes the feedback register
    memory: int

    @property
    def num_states(self) -> int:
        return self.next_state.shape[0]

    @classmethod
    def from_generator(cls, gen: RationalGenerator) -> "Trellis":
        m = gen.memory
        S = 1 << m
        den = np.zeros(m + 1, dtype=np.int64)
        den[: len(gen.denominator)] = gen.denominator
        nums = np.zeros((gen.n_out, m + 1), dtype=np.int64)
        for j, p in enumerate(gen.numerators):
            nums[j, : len(p)] = p
        next_state = np.zeros((S, 2), dtype=np.int64)
        outputs = np.zeros((S, 2, gen.n_out), dtype=np.uint8)
        tail_input = np.zeros(S, dtype=np.int64)
        for s in range(S):
            past = np.array([(s >> i) & 1 for i in range(m)], dtype=np.int64)  # w_{t-1..t-m}
            feedback = int(den[1:] @ past) & 1
            tail_input[s] = feedback
            for u in (0, 1):
                w = u ^ feedback
                regs = np.concatenate(([w], past))
                outputs[s, u] = (nums @ regs) & 1
                next_state[s, u] = ((s << 1) | w) & (S - 1)
        return cls(next_state, outputs, tail_input, m)


def conv_encode(bits, gen: RationalGenerator, terminate: bool = False) -> np.ndarray:
    """Encode from the zero state; with ``terminate`` append ``memory`` tail steps."""
    u = np.asarray(bits)
    if u.ndim != 1 or u.size == 0:
        raise ValueError("conv_encode expects a non-empty 1-D bit vector")
    if not np.all((u == 0) | (u == 1)):
        raise ValueError("conv_encode expects binary entries")
    tr = gen.trellis
    steps = u.size + (tr.memory if terminate else 0)
    out = np.empty((steps, gen.n_out), dtype=np.uint8)
    s = 0
    for t in range(steps):
        bit = int(u[t]) if t < u.size else int(tr.tail_input[s])
        out[t] = tr.outputs[s, bit]
        s = tr.next_state[s, bit]
    if terminate:
        assert s == 0
    return out.reshape(-1)


@numba.njit(cache=True)
def _maxstar(a, b):
    if a < b:
        a, b = b, a
    return a + np.log1p(np.exp(b - a))


@numba.njit(cache=True)
def _bcjr_kernel(next_state, outputs, tail_input, ch, ap, terminated):
    T, k = ch.shape
    n_info = ap.shape[0]
    S = next_state.shape[0]

    gam = np.full((T, S, 2), _NEG)
    for t in range(T):
        for s in range(S):
            for u in range(2):
                if t >= n_info:
                    if u != tail_input[s]:
                        continue
                    m = 0.0
                else:
                    m = 0.5 * ap[t] if u == 0 else -0.5 * ap[t]
                for j in range(k):
                    if outputs[s, u, j] == 0:
                        m += 0.5 * ch[t, j]
                    else:
                        m -= 0.5 * ch[t, j]
                gam[t, s, u] = m

    alpha = np.full((T + 1, S), _NEG)
    alpha[0, 0] = 0.0
    for t in range(T):
        for s in range(S):
            if alpha[t, s] <= _NEG:
                continue
            for u in range(2):
                if gam[t, s, u] <= _NEG:
                    continue
                ns = next_state[s, u]
                alpha[t + 1, ns] = _maxstar(alpha[t + 1, ns], alpha[t, s] + gam[t, s, u])
        top = alpha[t + 1].max()
        for s in range(S):
            alpha[t + 1, s] -= top

    beta = np.full((T + 1, S), _NEG)
    if terminated:
        beta[T, 0] = 0.0
    else:
        beta[T, :] = 0.0
    for t in range(T - 1, -1, -1):
        for s in range(S):
            acc = _NEG
            for u in range(2):
                if gam[t, s, u] <= _NEG:
                    continue
                acc = _maxstar(acc, gam[t, s, u] + beta[t + 1, next_state[s, u]])
            beta[t, s] = acc
        top = beta[t].max()
        for s in range(S):
            beta[t, s] -= top

    post_in = np.zeros(n_info)
    post_out = np.zeros((T, k))
    for t in range(T):
        in0 = _NEG
        in1 = _NEG
        o0 = np.full(k, _NEG)
        o1 = np.full(k, _NEG)
        for s in range(S):
            for u in range(2):
                if gam[t, s, u] <= _NEG:
                    continue
                v = alpha[t, s] + gam[t, s, u] + beta[t + 1, next_state[s, u]]
                if u == 0:
                    in0 = _maxstar(in0, v)
                else:
                    in1 = _maxstar(in1, v)
                for j in range(k):
                    if outputs[s, u, j] == 0:
                        o0[j] = _maxstar(o0[j], v)
                    else:
                        o1[j] = _maxstar(o1[j], v)
        if t < n_info:
            post_in[t] = in0 - in1
        for j in range(k):
            post_out[t, j] = o0[j] - o1[j]
    return post_in, post_out


class BcjrOutput(NamedTuple):
    posterior: np.ndarray  # info bits
    extrinsic: np.ndarray  # info bits, posterior - apriori
    extrinsic_coded: np.ndarray  # coded bits, posterior - channel


def bcjr_decode(channel_llrs, apriori_llrs, gen: RationalGenerator, terminate: bool = False) -> BcjrOutput:
    """Symbol-MAP decoding of one block on the code trellis.

    ``channel_llrs`` covers every coded bit (including tail steps when
    ``terminate``); ``apriori_llrs`` covers the information bits. All inputs
    and outputs are clipped to ``+-LLR_CLIP``.
    """
    tr = gen.trellis
    ap = np.clip(np.asarray(apriori_llrs, dtype=float), -LLR_CLIP, LLR_CLIP)
    ch = np.clip(np.asarray(channel_llrs, dtype=float), -LLR_CLIP, LLR_CLIP)
    steps = ap.size + (tr.memory if terminate else 0)
    if ap.ndim != 1 or ch.shape != (steps * gen.n_out,):
        raise ValueError(
            f"length mismatch: {ap.size} info bits need {steps * gen.n_out} channel LLRs, got {ch.shape}"
        )
    ch2 = np.ascontiguousarray(ch.reshape(steps, gen.n_out))
    post_in, post_out = _bcjr_kernel(tr.next_state, tr.outputs, tr.tail_input, ch2, ap, terminate)
    clip = lambda x: np.clip(x, -LLR_CLIP, LLR_CLIP)  # noqa: E731
    return BcjrOutput(
        posterior=clip(post_in),
        extrinsic=clip(post_in - ap),
        extrinsic_coded=clip((post_out - ch2).reshape(-1)),
    )
