"""Serially concatenated convolutional code: recursive outer CC, bit interleaver, rate-1 inner CC."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._rng import make_rng
from .conv import RationalGenerator, bcjr_decode, conv_encode

# (1+D^2)/(1+D+D^2+D^3)
INNER_GENERATOR = RationalGenerator(((1, 0, 1),), (1, 1, 1, 1))
# [(1+D^2)/(1+D+D^2), 1/(1+D+D^2)]
OUTER_GENERATOR = RationalGenerator(((1, 0, 1), (1,)), (1, 1, 1))

DEFAULT_INTERNAL_ITERS = 10


@dataclass(frozen=True)
class ScccCode:
    """Outer code terminated, inner code left open.

    The outer encoder emits ``2 (L + m_outer)`` bits, so the codeword length is
    ``N = 2 (L + m_outer)`` and the rate is a hair under 1/2. Inner input
    position ``i`` carries outer output bit ``interleaver[i]``.
    """

    L: int
    interleaver_seed: Optional[int] = 0
    outer: RationalGenerator = OUTER_GENERATOR
    inner: RationalGenerator = INNER_GENERATOR
    interleaver: np.ndarray = field(default=None, repr=False, compare=False)

    default_iters = DEFAULT_INTERNAL_ITERS

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"info length must be >= 1, got {self.L}")
        if self.outer.n_out != 2 or self.inner.n_out != 1:
            raise ValueError("outer code must have rate 1/2 and inner code rate 1")
        N = 2 * (self.L + self.outer.memory)
        perm = self.interleaver
        if perm is None:
            if self.interleaver_seed is None:
                raise ValueError("need an interleaver or an interleaver seed")
            perm = make_rng(self.interleaver_seed).permutation(N)
        perm = np.asarray(perm, dtype=np.int64)
        if perm.shape != (N,) or not np.array_equal(np.sort(perm), np.arange(N)):
            raise ValueError(f"interleaver must be a permutation of range({N})")
        perm.flags.writeable = False
        object.__setattr__(self, "interleaver", perm)

    @property
    def N(self) -> int:
        return self.interleaver.size

    @property
    def info_length(self) -> int:
        return self.L

    @property
    def rate(self) -> float:
        return self.L / self.N

    @property
    def systematic_positions(self) -> np.ndarray:
        # non-systematic: no codeword bit carries an information bit directly
        return np.zeros(0, dtype=np.int64)

    def encode(self, info) -> np.ndarray:
        info = np.asarray(info)
        if info.ndim == 2:
            return np.stack([self.encode(row) for row in info])
        if info.shape != (self.L,):
            raise ValueError(f"expected {self.L} info bits, got {info.shape}")
        outer = conv_encode(info, self.outer, terminate=True)
        return conv_encode(outer[self.interleaver], self.inner, terminate=False)

    def decode(self, channel_llrs, apriori_llrs=None, iters: int = DEFAULT_INTERNAL_ITERS, early_stop: bool = False):
        """Batch-friendly wrapper around :func:`sccc_decode`.

        ``early_stop`` is accepted for interface parity with the LDPC decoder;
        the turbo schedule always runs ``iters`` iterations.
        """
        ch = np.asarray(channel_llrs, dtype=float)
        ap = np.zeros(ch.shape[:-1] + (self.L,)) if apriori_llrs is None else np.asarray(apriori_llrs, float)
        if ch.ndim == 1:
            return sccc_decode(ch, ap, self, iters)
        results = [sccc_decode(c, a, self, iters) for c, a in zip(ch, ap)]
        return tuple(np.stack(x) for x in zip(*results))

    def to_text(self) -> str:
        lines = [
            "sccc",
            f"outer {self.outer.to_text()}",
            f"inner {self.inner.to_text()}",
            f"info_length {self.L}",
        ]
        if self.interleaver_seed is not None:
            lines.append(f"interleaver_seed {self.interleaver_seed}")
        else:
            lines.append("interleaver " + " ".join(map(str, self.interleaver)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ScccCode":
        rows = [ln.split(None, 1) for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or rows[0][0] != "sccc":
            raise ValueError("not an SCCC description (missing 'sccc' header)")
        kv = {r[0]: r[1] if len(r) > 1 else "" for r in rows[1:]}
        try:
            kwargs = dict(
                L=int(kv["info_length"]),
                outer=RationalGenerator.from_text(kv["outer"]),
                inner=RationalGenerator.from_text(kv["inner"]),
            )
        except KeyError as exc:
            raise ValueError(f"SCCC description lacks key {exc.args[0]!r}") from None
        if "interleaver_seed" in kv:
            return cls(interleaver_seed=int(kv["interleaver_seed"]), **kwargs)
        perm = np.array(kv["interleaver"].split(), dtype=np.int64)
        return cls(interleaver_seed=None, interleaver=perm, **kwargs)


def sccc_decode(channel_llrs, apriori_llrs, code: ScccCode, internal_iters: int = DEFAULT_INTERNAL_ITERS):
    """Iterative inner/outer BCJR decoding with external a-priori on the info bits.

    Each iteration runs the inner decoder first (it alone sees the channel),
    then the outer decoder. Returns ``(posterior, extrinsic)`` on the info
    bits, the extrinsic excluding ``apriori_llrs``.
    """
    if internal_iters < 1:
        raise ValueError("internal_iters must be >= 1")
    ch = np.asarray(channel_llrs, dtype=float)
    ap = np.asarray(apriori_llrs, dtype=float)
    if ch.shape != (code.N,) or ap.shape != (code.L,):
        raise ValueError(f"expected {code.N} channel and {code.L} a-priori LLRs, got {ch.shape}, {ap.shape}")
    perm = code.interleaver
    outer_ext_coded = np.zeros(code.N)
    outer_in = np.empty(code.N)
    for _ in range(internal_iters):
        inner = bcjr_decode(ch, outer_ext_coded[perm], code.inner, terminate=False)
        outer_in[perm] = inner.extrinsic
        outer = bcjr_decode(outer_in, ap, code.outer, terminate=True)
        outer_ext_coded = outer.extrinsic_coded
    return outer.posterior, outer.extrinsic
