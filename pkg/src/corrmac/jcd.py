"""Joint channel decoding: connection-node LLR combining, serial schedule, BER harness."""

from dataclasses import dataclass
from functools import cached_property
import math
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ._rng import make_rng
from .channel import LLR_CLIP, ChannelConfig, channel_llr, transmit
from .source import CorrelationModel, generate_block

MAX_EXACT_SOURCES = 12
_CHUNK = 1 << 22  # configs x columns evaluated at once


@dataclass(frozen=True)
class ConnectionNode:
    """Factor node tying bit ``j`` of all n sources through their joint pmf.

    Combines the LLRs of the other ``n - 1`` decoders into an a-priori LLR
    for the remaining one by summing over all ``2^(n-1)`` configurations of
    the other bits. That enumeration is exact and exponential, so ``n`` is
    capped at ``MAX_EXACT_SOURCES``.
    """

    n: int
    rho: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"a connection node needs n >= 2, got {self.n}")
        if not 0.5 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0.5, 1], got {self.rho}")
        if self.n > MAX_EXACT_SOURCES:
            raise ValueError(
                f"exact connection rule costs 2^(n-1) per bit; n={self.n} exceeds {MAX_EXACT_SOURCES}. "
                "The pairwise approximation for many sources is not implemented."
            )

    @cached_property
    def configs(self) -> np.ndarray:
        """``(2^(n-1), n-1)`` array, 1 where the other source's bit is 0."""
        m = self.n - 1
        codes = np.arange(1 << m)
        return ((codes[:, None] >> np.arange(m)) & 1).astype(float)

    @cached_property
    def log_weights(self):
        """Log numerator/denominator weights per configuration (by its zero count)."""
        n, rho, q = self.n, self.rho, 1.0 - self.rho
        zeros = self.configs.sum(axis=1)
        # linear domain is safe for n <= MAX_EXACT_SOURCES and makes rho = 0.5 weights bit-identical
        num = rho ** (zeros + 1) * q ** (n - 1 - zeros) + rho ** (n - 1 - zeros) * q ** (zeros + 1)
        den = rho**zeros * q ** (n - zeros) + rho ** (n - zeros) * q**zeros
        with np.errstate(divide="ignore"):
            return np.log(num), np.log(den)

    @property
    def saturation(self) -> float:
        """Upper bound on ``|output|``: log of max numerator over min denominator weight."""
        num, den = self.log_weights
        return float(num.max() - den.min())


def _log_ratio(num_w, den_w, Z):
    return logsumexp(num_w[:, None] + Z, axis=0) - logsumexp(den_w[:, None] + Z, axis=0)


def _combine(node: ConnectionNode, llr: np.ndarray) -> np.ndarray:
    """Connection rule on an ``(n-1, L)`` array of input LLRs.

    Evaluated as ``(g(v) - g(-v)) / 2``, which equals ``g(v)`` in exact
    arithmetic and makes the antisymmetry (and zero output for zero input)
    hold bit-exactly in floating point.
    """
    llr = np.clip(llr, -LLR_CLIP, LLR_CLIP)
    num_w, den_w = node.log_weights
    X = node.configs
    L = llr.shape[1]
    out = np.empty(L)
    step = max(1, _CHUNK // X.shape[0])
    for a in range(0, L, step):
        Z = X @ llr[:, a:a + step]  # sum of LLRs of the bits set to 0
        Zm = X @ -llr[:, a:a + step]
        out[a:a + step] = 0.5 * (_log_ratio(num_w, den_w, Z) - _log_ratio(num_w, den_w, Zm))
    return np.clip(out, -LLR_CLIP, LLR_CLIP)


def connection_llr(node: ConnectionNode, llr_in) -> float:
    v = np.asarray(llr_in, dtype=float)
    if v.shape != (node.n - 1,):
        raise ValueError(f"expected {node.n - 1} input LLRs, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("input LLRs must be finite")
    return float(_combine(node, v[:, None])[0])


def connection_block(node: ConnectionNode, llr_in, target: int) -> np.ndarray:
    """A-priori LLRs for decoder ``target`` from the other decoders' LLRs.

    ``llr_in`` is either the ``(n-1, L)`` matrix of the other decoders, or the
    full ``(n, L)`` matrix, in which case row ``target`` is dropped.
    """
    llr = np.asarray(llr_in, dtype=float)
    if not 0 <= target < node.n:
        raise ValueError(f"target must be in [0, {node.n}), got {target}")
    if llr.ndim != 2 or llr.shape[0] not in (node.n - 1, node.n):
        raise ValueError(f"expected an ({node.n - 1}, L) or ({node.n}, L) matrix, got {llr.shape}")
    if llr.shape[0] == node.n:
        llr = np.delete(llr, target, axis=0)
    return _combine(node, llr)


# --- joint decoding -----------------------------------------------------------

@dataclass
class JcdConfig:
    n: int
    rho: float
    channels: Sequence[ChannelConfig]
    code: object  # ScccCode or LdpcCode
    internal_iters: Optional[int] = None
    external_iters: int = 5
    max_blocks: int = 100
    target_errors: int = 100
    seed: int = 0
    early_stop: bool = True

    def __post_init__(self):
        if len(self.channels) != self.n:
            raise ValueError(f"need one channel per source: {len(self.channels)} != {self.n}")
        if self.external_iters < 1 or (self.internal_iters is not None and self.internal_iters < 1):
            raise ValueError("iteration counts must be >= 1")
        if self.max_blocks < 1:
            raise ValueError("max_blocks must be >= 1")
        if self.internal_iters is None:
            self.internal_iters = self.code.default_iters

    @property
    def node(self) -> ConnectionNode:
        return ConnectionNode(self.n, self.rho)


class JcdResult(NamedTuple):
    bits: np.ndarray  # (n, L)
    posteriors: np.ndarray  # (n, L)
    trace: list


def _decode_one(config: JcdConfig, ch: np.ndarray, apriori: np.ndarray):
    return config.code.decode(ch, apriori, config.internal_iters, early_stop=config.early_stop)


def hard_decision(llr) -> np.ndarray:
    # LLR = 0 decides bit 0
    return (np.asarray(llr) < 0).astype(np.uint8)


def joint_decode(config: JcdConfig, Y) -> JcdResult:
    """Serial schedule over the n component decoders.

    Connection messages start at zero. In each external round decoder ``k``
    receives a-priori LLRs built from the latest extrinsic LLRs of all other
    decoders, decodes from scratch, and publishes its new extrinsic LLRs. The
    rounds stop early once no decoder changes a hard decision.
    """
    Y = np.asarray(Y, dtype=float)
    code, n = config.code, config.n
    if Y.shape != (n, code.N):
        raise ValueError(f"expected observations of shape {(n, code.N)}, got {Y.shape}")
    ch = np.stack([
        np.clip(channel_llr(Y[k], c.ec, c.n0), -LLR_CLIP, LLR_CLIP) for k, c in enumerate(config.channels)
    ])
    return joint_decode_llrs(config, ch)


def joint_decode_llrs(config: JcdConfig, ch: np.ndarray) -> JcdResult:
    code, n = config.code, config.n
    node = config.node
    extrinsic = np.zeros((n, code.L))
    posterior = np.zeros((n, code.L))
    decisions = None
    trace = []
    for rnd in range(config.external_iters):
        for k in range(n):
            apriori = connection_block(node, extrinsic, k)
            posterior[k], extrinsic[k] = _decode_one(config, ch[k], apriori)
        new = hard_decision(posterior)
        changed = int(np.count_nonzero(new != decisions)) if decisions is not None else None
        trace.append(dict(
            round=rnd + 1,
            changed=changed,
            posterior_digest=[_digest(p) for p in posterior],
            mean_abs_extrinsic=[float(np.mean(np.abs(e))) for e in extrinsic],
        ))
        if decisions is not None and changed == 0:
            break
        decisions = new
    return JcdResult(hard_decision(posterior), posterior.copy(), trace)


def _digest(arr: np.ndarray) -> str:
    import hashlib
    return hashlib.sha1(np.ascontiguousarray(arr).tobytes()).hexdigest()[:16]


def encode_sources(code, bits: np.ndarray) -> np.ndarray:
    return np.stack([code.encode(row) for row in bits])


def simulate_block(config: JcdConfig, block_index: int):
    """One Monte Carlo block: returns ``(source bits, decoded bits, result)``."""
    model = CorrelationModel(config.n, config.rho)
    src = generate_block(model, config.code.L, seed=_block_seed(config.seed, block_index, 0))
    cws = encode_sources(config.code, src.bits)
    ch = np.stack([
        transmit(cws[k], c, seed=_block_seed(config.seed, block_index, k + 1))
        for k, c in enumerate(config.channels)
    ])
    res = joint_decode_llrs(config, ch)
    return src.bits, res.bits, res


def _block_seed(seed: int, block: int, stream: int) -> int:
    rng = make_rng(seed, block, stream)
    return int(rng.integers(0, 2**63))


@dataclass
class BerRow:
    gammas: tuple
    source: int
    ber: float
    ci95: float
    blocks: int
    errors: int


def wilson_halfwidth(errors: int, trials: int, z: float = 1.959963984540054) -> float:
    """Half-width of the Wilson score interval for a binomial proportion."""
    if trials == 0:
        return math.nan
    p = errors / trials
    denom = 1 + z * z / trials
    return z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom


def simulate_ber(config: JcdConfig, snr_grid, on_point: Optional[Callable] = None):
    """BER per source at each grid point of per-link SNR vectors.

    Blocks run until the errors summed over sources reach ``target_errors``
    or ``max_blocks`` blocks have been decoded. Block ``b`` at every grid point
    uses the same source and noise seeds, so points are paired. ``on_point``
    receives each grid point's rows as soon as they are complete.
    """
    table = []
    for gammas in snr_grid:
        gammas = tuple(float(g) for g in gammas)
        if len(gammas) != config.n:
            raise ValueError(f"grid point {gammas} does not have {config.n} entries")
        cfg = JcdConfig(
            n=config.n, rho=config.rho, channels=[ChannelConfig.from_snr(g) for g in gammas],
            code=config.code, internal_iters=config.internal_iters, external_iters=config.external_iters,
            max_blocks=config.max_blocks, target_errors=config.target_errors, seed=config.seed,
            early_stop=config.early_stop,
        )
        errors = np.zeros(config.n, dtype=np.int64)
        blocks = 0
        while blocks < config.max_blocks and errors.sum() < config.target_errors:
            src, dec, _ = simulate_block(cfg, blocks)
            errors += np.count_nonzero(src != dec, axis=1)
            blocks += 1
        bits = blocks * config.code.L
        rows = [
            BerRow(gammas, k, errors[k] / bits, wilson_halfwidth(int(errors[k]), bits), blocks, int(errors[k]))
            for k in range(config.n)
        ]
        table.extend(rows)
        if on_point is not None:
            on_point(rows)
    return table
