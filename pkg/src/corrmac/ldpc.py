"""Systematic irregular LDPC codes: random construction, encoding, sum-product decoding."""

from dataclasses import dataclass, field
from functools import lru_cache
import logging
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from ._rng import make_rng
from .channel import LLR_CLIP

log = logging.getLogger(__name__)

TANH_CLIP = 1.0 - 1e-12
DEFAULT_ITERS = 50


class LdpcConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class DegreeDistributions:
    """Edge-perspective degree distributions as ``((degree, fraction), ...)``."""

    lambda_edge: tuple
    rho_edge: tuple

    def __post_init__(self):
        for name in ("lambda_edge", "rho_edge"):
            pairs = tuple(sorted((int(d), float(f)) for d, f in getattr(self, name)))
            if not pairs or any(d < 1 or f < 0 for d, f in pairs):
                raise ValueError(f"{name}: degrees must be >= 1 and fractions >= 0")
            if abs(sum(f for _, f in pairs) - 1.0) > 1e-6:
                raise ValueError(f"{name}: fractions sum to {sum(f for _, f in pairs)}, not 1")
            object.__setattr__(self, name, pairs)

    @classmethod
    def regular(cls, dv: int, dc: int) -> "DegreeDistributions":
        return cls(((dv, 1.0),), ((dc, 1.0),))

    @property
    def design_rate(self) -> float:
        iv = sum(f / d for d, f in self.lambda_edge)
        ic = sum(f / d for d, f in self.rho_edge)
        return 1.0 - ic / iv


IRREGULAR_3 = DegreeDistributions(
    lambda_edge=(
        (2, 0.19606), (3, 0.24039), (6, 0.00228), (7, 0.05516), (8, 0.16602),
        (9, 0.04088), (10, 0.01064), (28, 0.00221), (30, 0.28636),
    ),
    rho_edge=((8, 0.00749), (9, 0.99101), (10, 0.00150)),
)


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    raw = weights / weights.sum() * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    counts[np.argsort(-(raw - counts), kind="stable")[:short]] += 1
    return counts


def node_degree_counts(dd: DegreeDistributions, N: int):
    """Integer node counts per degree for variables and checks, with equal edge totals."""
    vdeg = np.array([d for d, _ in dd.lambda_edge])
    vcnt = _largest_remainder(np.array([f / d for d, f in dd.lambda_edge]), N)
    E = int(vdeg @ vcnt)
    cdeg = np.array([d for d, _ in dd.rho_edge])
    cw = np.array([f / d for d, f in dd.rho_edge])
    M = int(round(E * cw.sum()))
    ccnt = _largest_remainder(cw, M)
    # move check nodes between degrees until the edge totals agree
    diff = E - int(cdeg @ ccnt)
    while diff:
        best = None
        for a in range(len(cdeg)):
            if ccnt[a] == 0:
                continue
            for b in range(len(cdeg)):
                step = int(cdeg[b] - cdeg[a])
                if step and abs(diff - step) < abs(diff) and (best is None or abs(diff - step) < best[0]):
                    best = (abs(diff - step), a, b, step)
        if best is None:
            raise LdpcConstructionError(f"cannot match {E} edges with check degrees {cdeg.tolist()}")
        _, a, b, step = best
        ccnt[a] -= 1
        ccnt[b] += 1
        diff -= step
    return (vdeg, vcnt), (cdeg, ccnt)


def gf2_rref(H: np.ndarray):
    """Reduced row echelon form over GF(2) on bit-packed rows.

    Returns ``(R, pivots)`` with ``R`` unpacked ``(rank, N)`` and the pivot
    column of each row.
    """
    M, N = H.shape
    rows = np.packbits(H.astype(np.uint8), axis=1)
    pivots = []
    r = 0
    for col in range(N):
        if r == M:
            break
        byte, shift = col >> 3, 7 - (col & 7)
        below = np.flatnonzero((rows[r:, byte] >> shift) & 1)
        if below.size == 0:
            continue
        p = r + below[0]
        if p != r:
            rows[[r, p]] = rows[[p, r]]
        hit = ((rows[:, byte] >> shift) & 1).astype(bool)
        hit[r] = False
        rows[hit] ^= rows[r]
        pivots.append(col)
        r += 1
    R = np.unpackbits(rows[:r], axis=1, count=N)
    return R, np.array(pivots, dtype=np.int64)


class LdpcDecodeResult(NamedTuple):
    posterior: np.ndarray
    extrinsic: np.ndarray
    converged: np.ndarray
    iterations: int


@dataclass(frozen=True, eq=False)
class LdpcCode:
    """Parity-check matrix plus a systematic encoder derived from its RREF.

    The information bits sit at ``systematic_map``; every other column is a
    pivot of the RREF and is computed from the information bits.
    """

    H: sp.csr_matrix
    systematic_map: np.ndarray
    parity_map: np.ndarray = field(repr=False)
    _encoder: np.ndarray = field(repr=False)

    default_iters = DEFAULT_ITERS

    @classmethod
    def from_parity_check(cls, H) -> "LdpcCode":
        dense = H.toarray() if sp.issparse(H) else np.asarray(H)
        dense = (dense % 2).astype(np.uint8)
        R, pivots = gf2_rref(dense)
        if pivots.size < dense.shape[0]:
            raise LdpcConstructionError(
                f"parity-check matrix has rank {pivots.size} < {dense.shape[0]} rows"
            )
        info = np.setdiff1d(np.arange(dense.shape[1]), pivots)
        return cls(sp.csr_matrix(dense), info, pivots, np.ascontiguousarray(R[:, info]))

    @property
    def N(self) -> int:
        return self.H.shape[1]

    @property
    def L(self) -> int:
        return self.systematic_map.size

    info_length = L

    @property
    def rate(self) -> float:
        return self.L / self.N

    @property
    def systematic_positions(self) -> np.ndarray:
        return self.systematic_map

    def encode(self, info) -> np.ndarray:
        info = np.asarray(info)
        if info.shape[-1] != self.L or not np.all((info == 0) | (info == 1)):
            raise ValueError(f"expected binary info of length {self.L}")
        cw = np.zeros(info.shape[:-1] + (self.N,), dtype=np.uint8)
        cw[..., self.systematic_map] = info
        cw[..., self.parity_map] = (info.astype(np.int64) @ self._encoder.T.astype(np.int64)) % 2
        return cw

    def syndrome(self, words) -> np.ndarray:
        words = np.atleast_2d(words).astype(np.int64)
        return (self.H @ words.T).T % 2

    def decode(self, channel_llrs, apriori_llrs=None, iters: int = DEFAULT_ITERS, early_stop: bool = False):
        res = sum_product_decode(self, channel_llrs, apriori_llrs, iters, early_stop=early_stop)
        return res.posterior, res.extrinsic

    # --- decoder index tables -------------------------------------------------
    @property
    def _graph(self):
        g = self.__dict__.get("_graph_cache")
        if g is None:
            coo = self.H.tocoo()
            order = np.lexsort((coo.col, coo.row))
            chk, var = coo.row[order].astype(np.int64), coo.col[order].astype(np.int64)
            E = chk.size
            g = dict(
                E=E,
                var=var,
                check_edges=_padded_groups(chk, self.H.shape[0], E),
                var_edges=_padded_groups(var, self.N, E),
            )
            object.__setattr__(self, "_graph_cache", g)
        return g

    def degree_fractions(self):
        """Realised edge-perspective fractions ``({dv: frac}, {dc: frac})``."""
        H = self.H.astype(np.int64)
        E = H.nnz
        out = []
        for deg in (np.asarray(H.sum(axis=0)).ravel(), np.asarray(H.sum(axis=1)).ravel()):
            values, counts = np.unique(deg, return_counts=True)
            out.append({int(d): float(d * c / E) for d, c in zip(values, counts)})
        return tuple(out)


def _padded_groups(owner: np.ndarray, n_groups: int, pad: int) -> np.ndarray:
    """Edge indices grouped by owner, right-padded with ``pad``."""
    order = np.argsort(owner, kind="stable")
    counts = np.bincount(owner, minlength=n_groups)
    out = np.full((n_groups, max(int(counts.max()), 1)), pad, dtype=np.int64)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    pos = np.arange(owner.size) - np.repeat(starts, counts)
    out[owner[order], pos] = order
    return out


def sum_product_decode(code: LdpcCode, channel_llrs, apriori_llrs=None, iters: int = DEFAULT_ITERS,
                       early_stop: bool = False) -> LdpcDecodeResult:
    """Flooding sum-product with a-priori LLRs added at the systematic variable nodes.

    Accepts a single block ``(N,)`` or a batch ``(B, N)``. ``converged`` is per
    block: all checks satisfied after some iteration. With ``early_stop`` the
    loop ends once every block has converged.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    ch = np.asarray(channel_llrs, dtype=float)
    single = ch.ndim == 1
    ch = np.atleast_2d(ch)
    B = ch.shape[0]
    ap = np.zeros((B, code.L)) if apriori_llrs is None else np.atleast_2d(np.asarray(apriori_llrs, float))
    if ch.shape[1] != code.N or ap.shape != (B, code.L):
        raise ValueError(f"expected {code.N} channel and {code.L} a-priori LLRs per block")
    ch = np.clip(ch, -LLR_CLIP, LLR_CLIP)
    ap = np.clip(ap, -LLR_CLIP, LLR_CLIP)

    g = code._graph
    E, var, check_edges, var_edges = g["E"], g["var"], g["check_edges"], g["var_edges"]
    prior = ch.copy()
    prior[:, code.systematic_map] += ap
    v2c = np.clip(prior[:, var], -LLR_CLIP, LLR_CLIP)
    c2v = np.zeros((B, E + 1))
    t = np.ones((B, E + 1))
    converged = np.zeros(B, dtype=bool)
    done_at = 0
    for it in range(1, iters + 1):
        t[:, :E] = np.tanh(0.5 * v2c)
        G = t[:, check_edges]  # (B, M, dc)
        before = np.cumprod(np.concatenate((np.ones_like(G[..., :1]), G[..., :-1]), axis=-1), axis=-1)
        after = np.cumprod(np.concatenate((np.ones_like(G[..., :1]), G[..., :0:-1]), axis=-1), axis=-1)[..., ::-1]
        excl = np.clip(before * after, -TANH_CLIP, TANH_CLIP)
        c2v[:, check_edges] = 2.0 * np.arctanh(excl)
        c2v[:, E] = 0.0
        total = prior + c2v[:, var_edges].sum(axis=-1)
        v2c = np.clip(total[:, var] - c2v[:, :E], -LLR_CLIP, LLR_CLIP)
        done_at = it
        hard = (total < 0).astype(np.uint8)
        ok = ~np.any(code.syndrome(hard), axis=1)
        converged |= ok
        if early_stop and converged.all():
            break
    post = total[:, code.systematic_map]
    ext = np.clip(post - ap, -LLR_CLIP, LLR_CLIP)
    post = np.clip(post, -LLR_CLIP, LLR_CLIP)
    if single:
        return LdpcDecodeResult(post[0], ext[0], converged[0], done_at)
    return LdpcDecodeResult(post, ext, converged, done_at)


def _remove_multi_edges(var, chk, rng):
    E = var.size
    for _ in range(100):
        key = var * (chk.max() + 1) + chk
        _, first = np.unique(key, return_index=True)
        dup = np.setdiff1d(np.arange(E), first)
        if dup.size == 0:
            return chk
        for e in dup:
            f = rng.integers(E)
            chk[e], chk[f] = chk[f], chk[e]
    raise LdpcConstructionError("could not remove parallel edges")


def _reduce_four_cycles(var, chk, n_var, n_chk, rng, tries=20):
    """One sweep: for each check pair sharing >1 variable, rewire one edge if that creates no new 4-cycle."""
    nbr_v = [set() for _ in range(n_var)]
    nbr_c = [set() for _ in range(n_chk)]
    for v, c in zip(var, chk):
        nbr_v[v].add(c)
        nbr_c[c].add(v)
    edge_of = {(int(v), int(c)): i for i, (v, c) in enumerate(zip(var, chk))}

    def in_cycle(v, c):
        return any(len(nbr_v[u] & nbr_v[v]) > 1 for u in nbr_c[c] if u != v)

    Hs = sp.csr_matrix((np.ones(var.size), (chk, var)), shape=(n_chk, n_var))
    overlap = sp.triu(Hs @ Hs.T, k=1).tocoo()
    pairs = [(a, b) for a, b, w in zip(overlap.row, overlap.col, overlap.data) if w > 1]
    fixed = 0
    for c1, c2 in pairs:
        shared = sorted(nbr_c[c1] & nbr_c[c2])
        if len(shared) < 2:
            continue
        v1 = shared[0]
        for _ in range(tries):
            e2 = int(rng.integers(var.size))
            v3, c3 = int(var[e2]), int(chk[e2])
            if c3 in (c1, c2) or v3 == v1 or c3 in nbr_v[v1] or c2 in nbr_v[v3]:
                continue
            # tentatively swap (v1, c2), (v3, c3) -> (v1, c3), (v3, c2)
            nbr_v[v1].remove(c2); nbr_c[c2].remove(v1)
            nbr_v[v3].remove(c3); nbr_c[c3].remove(v3)
            nbr_v[v1].add(c3); nbr_c[c3].add(v1)
            nbr_v[v3].add(c2); nbr_c[c2].add(v3)
            if not in_cycle(v1, c3) and not in_cycle(v3, c2):
                e1 = edge_of.pop((v1, c2))
                edge_of.pop((v3, c3))
                chk[e1], chk[e2] = c3, c2
                edge_of[(v1, c3)] = e1
                edge_of[(v3, c2)] = e2
                fixed += 1
                break
            nbr_v[v1].remove(c3); nbr_c[c3].remove(v1)
            nbr_v[v3].remove(c2); nbr_c[c2].remove(v3)
            nbr_v[v1].add(c2); nbr_c[c2].add(v1)
            nbr_v[v3].add(c3); nbr_c[c3].add(v3)
    log.debug("4-cycle sweep: %d of %d check pairs rewired", fixed, len(pairs))
    return chk


def _random_parity_check(dd: DegreeDistributions, N: int, rng) -> sp.csr_matrix:
    (vdeg, vcnt), (cdeg, ccnt) = node_degree_counts(dd, N)
    var_degrees = rng.permutation(np.repeat(vdeg, vcnt))
    chk_degrees = np.repeat(cdeg, ccnt)
    M = chk_degrees.size
    var = np.repeat(np.arange(N), var_degrees)
    chk = rng.permutation(np.repeat(np.arange(M), chk_degrees))
    chk = _remove_multi_edges(var, chk, rng)
    chk = _reduce_four_cycles(var, chk, N, M, rng)
    return sp.csr_matrix((np.ones(var.size, dtype=np.uint8), (chk, var)), shape=(M, N))


@lru_cache(maxsize=16)
def build_code(dd: DegreeDistributions, N: int, seed: int, max_tries: int = 20) -> LdpcCode:
    """Random socket-matching construction, retried on rank deficiency."""
    if N < 128 or N % 2:
        raise ValueError(f"N must be even and >= 128, got {N}")
    for attempt in range(max_tries):
        H = _random_parity_check(dd, N, make_rng(seed, attempt))
        try:
            return LdpcCode.from_parity_check(H)
        except LdpcConstructionError as exc:
            log.debug("attempt %d rejected: %s", attempt, exc)
    raise LdpcConstructionError(f"no full-rank parity-check matrix after {max_tries} attempts")


def ldpc_encode(code: LdpcCode, info) -> np.ndarray:
    return code.encode(info)


def to_alist(code: LdpcCode) -> str:
    """MacKay alist text: sizes, max degrees, degree lists, then 1-based neighbour lists."""
    H = code.H.tocsr()
    Hc = H.tocsc()
    M, N = H.shape
    cols = [sorted(Hc.indices[Hc.indptr[j]:Hc.indptr[j + 1]] + 1) for j in range(N)]
    rows = [sorted(H.indices[H.indptr[i]:H.indptr[i + 1]] + 1) for i in range(M)]
    dv = max(map(len, cols))
    dc = max(map(len, rows))
    lines = [f"{N} {M}", f"{dv} {dc}", " ".join(str(len(c)) for c in cols), " ".join(str(len(r)) for r in rows)]
    lines += [" ".join(map(str, c + [0] * (dv - len(c)))) for c in cols]
    lines += [" ".join(map(str, r + [0] * (dc - len(r)))) for r in rows]
    return "\n".join(lines) + "\n"


def from_alist(text: str) -> LdpcCode:
    tok = iter(text.split())
    try:
        N, M = int(next(tok)), int(next(tok))
        dv, _ = int(next(tok)), int(next(tok))
        col_deg = [int(next(tok)) for _ in range(N)]
        [int(next(tok)) for _ in range(M)]
        rows, cols = [], []
        for j in range(N):
            nbrs = [int(next(tok)) for _ in range(dv)]
            for i in nbrs[: col_deg[j]]:
                rows.append(i - 1)
                cols.append(j)
    except StopIteration:
        raise ValueError("truncated alist text") from None
    H = sp.csr_matrix((np.ones(len(rows), dtype=np.uint8), (rows, cols)), shape=(M, N))
    return LdpcCode.from_parity_check(H)
