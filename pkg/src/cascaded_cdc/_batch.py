"""Vectorised round kernels behind :func:`cascaded_cdc.shuffle.run_shuffle`.

They produce exactly the records of the per-plan ``encode_A``/``encode_B`` and
decode from record payloads and headers, but process every plan of a round
(or of one group selection ``A``) with a handful of array operations.
"""

from __future__ import annotations

import itertools
import logging
from collections import defaultdict

import numpy as np

from . import gf256
from .shuffle import (
    DecodeError,
    RoundPlanA,
    RoundPlanB,
    TransmissionRecord,
    Recovered,
    _held_masks,
    coefficients,
    decode_B,
)

log = logging.getLogger(__name__)


def _block(t, eta):
    """ids of the blocks owned by T-sets ``t`` (any shape) -> shape + (eta,)."""
    t = np.asarray(t, dtype=np.int64)
    return (t[..., None] - 1) * eta + np.arange(1, eta + 1)


def _gather(nodemap, funcs, files):
    cols = nodemap._col[files]
    if np.any(cols < 0):
        raise DecodeError(f"node {nodemap.node} lacks files {sorted(set(files[cols < 0].tolist()))}")
    return nodemap.values[funcs - 1, cols]


# -- Method A ----------------------------------------------------------------


def encode_round_A(plans: list[RoundPlanA], mapout) -> list[TransmissionRecord]:
    if not plans:
        return []
    design = mapout.design
    e1, e2, nb = design.params.eta1, design.params.eta2, mapout.nbytes
    alpha = np.array([p.alpha for p in plans])
    ell = np.array([p.ell for p in plans])
    sender = np.array([p.sender for p in plans])
    coded = np.empty((len(plans), e2, e1, nb), dtype=np.uint8)
    for k in np.unique(sender).tolist():
        idx = np.flatnonzero(sender == k)
        a, l = alpha[idx], ell[idx]
        nm = mapout[k]
        v1 = _gather(nm, _block(a, e2)[:, :, None], _block(l, e1)[:, None, :])
        v2 = _gather(nm, _block(l, e2)[:, :, None], _block(a, e1)[:, None, :])
        coded[idx] = v1 ^ v2
    flat = coded.reshape(len(plans), -1)
    bits = flat.shape[1] * 8
    return [
        TransmissionRecord(p.gamma, "A", p.sender, p.S, bits, flat[n].tobytes(), (p.to_rest, p.to_prime))
        for n, p in enumerate(plans)
    ]


def decode_round_A(records: list[TransmissionRecord], mapout) -> list[tuple[int, Recovered]]:
    if not records:
        return []
    design = mapout.design
    e1, e2, nb = design.params.eta1, design.params.eta2, mapout.nbytes
    alpha = np.array([r.vsets[0].pairs[0][0] for r in records])
    ell = np.array([r.vsets[0].pairs[0][1] for r in records])
    coded = np.frombuffer(b"".join(r.payload for r in records), dtype=np.uint8).reshape(len(records), e2, e1, nb)
    by_node = defaultdict(list)
    for n, r in enumerate(records):
        for k in r.receivers:
            by_node[k].append(n)
    out = []
    for k in sorted(by_node):
        idx = np.array(by_node[k])
        a, l = alpha[idx], ell[idx]
        nm = mapout[k]
        has_l = np.all(nm._col[_block(l, e1)] >= 0, axis=1)
        has_a = np.all(nm._col[_block(a, e1)] >= 0, axis=1)
        if np.any(~has_l & ~has_a):
            bad = records[idx[np.flatnonzero(~has_l & ~has_a)[0]]]
            raise DecodeError(f"node {k} holds neither side of the coded pair from node {bad.sender}")
        both = has_l & has_a
        if np.any(both):
            log.warning("node %d already holds both sides of %d coded pairs", k, int(both.sum()))
            idx, a, l, has_a = idx[~both], a[~both], l[~both], has_a[~both]
        # known side (F, B) = (D_kf, B_kb); the wanted side is (D_kb, B_kf)
        kf = np.where(has_a, l, a)
        kb = np.where(has_a, a, l)
        known = _gather(nm, _block(kf, e2)[:, :, None], _block(kb, e1)[:, None, :])
        data = coded[idx] ^ known
        funcs = np.broadcast_to(_block(kb, e2)[:, :, None], (len(idx), e2, e1)).reshape(-1)
        files = np.broadcast_to(_block(kf, e1)[:, None, :], (len(idx), e2, e1)).reshape(-1)
        out.append((k, Recovered(funcs, files, data.reshape(-1, nb))))
    return out


# -- Method B ----------------------------------------------------------------


def _group_by_A(plans):
    return [list(g) for _, g in itertools.groupby(plans, key=lambda p: (p.gamma, p.A))]


def _pairs_array(plans: list[RoundPlanB]) -> np.ndarray:
    """(P, 2**gamma, npairs, 2) T-set pairs of every value set."""
    return np.array([[v.pairs for v in p.vsets] for p in plans], dtype=np.int64)


def _vset_ids(pairs: np.ndarray, e1: int, e2: int):
    """Function and file ids of value sets, (..., |V|) each, in serial order."""
    f = _block(pairs[..., 0], e2)[..., :, None]
    j = _block(pairs[..., 1], e1)[..., None, :]
    shape = np.broadcast_shapes(f.shape, j.shape)
    lead = shape[:-3]
    return (np.broadcast_to(f, shape).reshape(lead + (-1,)),
            np.broadcast_to(j, shape).reshape(lead + (-1,)))


def _gather_held(plans, pairs, position, mapout, masks):
    """Packets of value sets ``masks`` at the node in ``position`` of each plan: (P, len(masks), |V|, nb)."""
    e1, e2 = mapout.design.params.eta1, mapout.design.params.eta2
    nodes = np.array([p.senders[position] for p in plans])
    funcs, files = _vset_ids(pairs[:, masks], e1, e2)
    out = np.empty(funcs.shape + (mapout.nbytes,), dtype=np.uint8)
    for k in np.unique(nodes).tolist():
        idx = np.flatnonzero(nodes == k)
        out[idx] = _gather(mapout[k], funcs[idx], files[idx])
    return out


def encode_round_B(plans: list[RoundPlanB], mapout, coeff_seed: int) -> list[list[TransmissionRecord]]:
    """Records of each plan, in the same order as ``encode_B``."""
    out = []
    for group in _group_by_A(plans):
        out.extend(_encode_group_B(group, mapout, coeff_seed))
    return out


def _encode_group_B(plans, mapout, coeff_seed):
    gamma = plans[0].gamma
    npk = 2 * gamma - 1
    coeffs = coefficients(gamma, coeff_seed)
    coeff_bytes = [[coeffs[p, c].tobytes() for c in range(coeffs.shape[1])] for p in range(2 * gamma)]
    pairs = _pairs_array(plans)
    P = len(plans)
    combos = []
    for p in range(2 * gamma):
        held = _held_masks(gamma, p)
        data = _gather_held(plans, pairs, p, mapout, held)  # (P, h, |V|, nb)
        packets = data.reshape(P, len(held) * npk, -1)
        combos.append(gf256.matmul_batched(coeffs[p], packets))  # (P, per, L)
    bits = combos[0].shape[2] * 8
    out = []
    for n, plan in enumerate(plans):
        S = plan.S
        recs = []
        for p, sender in enumerate(plan.senders):
            header = tuple(plan.vsets[b] for b in _held_masks(gamma, p))
            receivers = tuple(k for k in S if k != sender)
            for c in range(coeffs.shape[1]):
                recs.append(TransmissionRecord(gamma, "B", sender, receivers, bits, combos[p][n, c].tobytes(),
                                               header, coeff_bytes[p][c]))
        out.append(recs)
    return out


def decode_round_B(batches, mapout) -> list[tuple[int, Recovered]]:
    out = []
    groups = itertools.groupby(batches, key=lambda b: (b.plan.gamma, b.plan.A))
    for _, group in groups:
        out.extend(_decode_group_B(list(group), mapout))
    return out


def _decode_group_B(batches, mapout):
    plans = [b.plan for b in batches]
    gamma = plans[0].gamma
    npk = 2 * gamma - 1
    per = 1 << (gamma - 1)
    R = 2 * gamma * per
    regular, irregular = [], []
    for b in batches:
        (regular if _regular(b, gamma, per) else irregular).append(b)
    out = []
    for b in irregular:
        for k in b.plan.S:
            out.append((k, decode_B(b.plan, b.records, k, mapout)))
    if not regular:
        return out

    plans = [b.plan for b in regular]
    P = len(plans)
    recs = [r for b in regular for r in b.records]
    coef = np.frombuffer(b"".join(r.coefficients for r in recs), dtype=np.uint8).reshape(P, R, -1)
    if np.any(coef != coef[0]):
        # coefficient headers differ between plans: no shared system, solve one by one
        for b in regular:
            for k in b.plan.S:
                out.append((k, decode_B(b.plan, b.records, k, mapout)))
        return out
    pay = np.frombuffer(b"".join(r.payload for r in recs), dtype=np.uint8).reshape(P, R, -1)
    L = pay.shape[2]
    coef0 = coef[0]
    pairs = _pairs_array(plans)
    e1, e2 = mapout.design.params.eta1, mapout.design.params.eta2
    row_pos = np.repeat(np.arange(2 * gamma), per)

    for r in range(2 * gamma):
        known = _held_masks(gamma, r)
        unknown = [b for b in range(1 << gamma) if b not in known]
        rows = np.flatnonzero(row_pos != r)
        kcol = {b: i for i, b in enumerate(known)}
        ucol = {b: i for i, b in enumerate(unknown)}
        Mk = np.zeros((rows.size, len(known) * npk), dtype=np.uint8)
        Mu = np.zeros((rows.size, len(unknown) * npk), dtype=np.uint8)
        for n, row in enumerate(rows):
            for hi, b in enumerate(_held_masks(gamma, int(row_pos[row]))):
                c = coef0[row, hi * npk:(hi + 1) * npk]
                if b in kcol:
                    Mk[n, kcol[b] * npk:(kcol[b] + 1) * npk] = c
                else:
                    Mu[n, ucol[b] * npk:(ucol[b] + 1) * npk] = c
        try:
            inv = gf256.inverse(Mu)
        except gf256.SingularMatrixError as e:
            raise DecodeError(f"singular system for receiver position {r} at gamma={gamma}: {e}") from e
        side = _gather_held(plans, pairs, r, mapout, known).reshape(P, len(known) * npk, L)
        rhs = pay[:, rows] ^ gf256.matmul_batched(Mk, side)
        sol = gf256.matmul_batched(inv, rhs)  # (P, |U| * npk, L)
        data = sol.reshape(P, len(unknown), -1, mapout.nbytes)
        funcs, files = _vset_ids(pairs[:, unknown], e1, e2)
        nodes = np.array([p.senders[r] for p in plans])
        for k in np.unique(nodes).tolist():
            idx = np.flatnonzero(nodes == k)
            out.append((k, Recovered(funcs[idx].reshape(-1), files[idx].reshape(-1),
                                     data[idx].reshape(-1, mapout.nbytes))))
    return out


def _regular(batch, gamma, per) -> bool:
    """Records laid out exactly as the encoder emits them (sender position order, full count)."""
    plan, recs = batch.plan, batch.records
    if len(recs) != 2 * gamma * per:
        return False
    for p, sender in enumerate(plan.senders):
        chunk = recs[p * per:(p + 1) * per]
        header = tuple(plan.vsets[b] for b in _held_masks(gamma, p))
        if any(r.sender != sender or r.vsets != header for r in chunk):
            return False
    return True
