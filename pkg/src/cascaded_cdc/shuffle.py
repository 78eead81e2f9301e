"""Coded Shuffle phase.

Round ``gamma`` delivers the intermediate values requested by exactly
``gamma`` nodes. Two transmission patterns are available:

* Method A (``gamma < s``): for a node set ``S`` with two nodes in each group
  of ``A`` and a node set ``Y`` with one node in every other group, a node of
  ``Y`` multicasts the XOR of two equal-size value sets to ``S``.
* Method B (any ``gamma``): the value sets living inside ``S`` are split into
  ``2*gamma - 1`` packets and each node of ``S`` multicasts ``2**(gamma - 1)``
  GF(256) combinations of the packets it holds.

All bit accounting is exact (integers and ``Fraction``).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import gf256
from .design import Design
from .mapper import IntermediateValue, MapOutput

log = logging.getLogger(__name__)

MAX_RESEED = 16


class Strategy(str, Enum):
    DEFAULT = "default"
    ALL_B = "all-b"


class ShuffleError(RuntimeError):
    pass


class DecodeError(ShuffleError):
    pass


class RankError(ShuffleError):
    pass


def round_methods(s: int, strategy=Strategy.DEFAULT) -> dict[int, str]:
    strategy = Strategy(strategy)
    if strategy is Strategy.ALL_B:
        return {g: "B" for g in range(1, s + 1)}
    return {g: ("A" if g < s else "B") for g in range(1, s + 1)}


def required_divisor(s: int, strategy=Strategy.DEFAULT) -> int:
    """``t_bits`` must be a multiple of this (times 8 for whole bytes)."""
    rounds = [g for g, m in round_methods(s, strategy).items() if m == "B"]
    return math.lcm(*(2 * g - 1 for g in rounds)) if rounds else 1


# ---------------------------------------------------------------------------
# value sets


@dataclass(frozen=True)
class VSet:
    """Intermediate values ``D_alpha x B_ell`` for each listed (alpha, ell), sorted by alpha.

    Serialised in ascending (function_id, file_id) order.
    """

    pairs: tuple[tuple[int, int], ...]

    def ids(self, design: Design) -> tuple[np.ndarray, np.ndarray]:
        return _vset_ids(self.pairs, design.params.eta1, design.params.eta2)

    def size(self, design: Design) -> int:
        return len(self.pairs) * design.params.eta1 * design.params.eta2

    def gather(self, mapout: MapOutput, node: int) -> np.ndarray:
        """(size, nbytes) values as computed at ``node``."""
        funcs, files = self.ids(mapout.design)
        return mapout[node].gather(funcs, files)

    def held_by(self, mapout: MapOutput, node: int) -> bool:
        _, files = self.ids(mapout.design)
        return mapout[node].has_files(files)


@lru_cache(maxsize=1 << 16)
def _vset_ids(pairs, e1: int, e2: int) -> tuple[np.ndarray, np.ndarray]:
    arr = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    fi = (arr[:, 0:1] - 1) * e2 + np.arange(1, e2 + 1)  # (p, e2)
    fj = (arr[:, 1:2] - 1) * e1 + np.arange(1, e1 + 1)  # (p, e1)
    funcs = np.repeat(fi, e1, axis=1).reshape(-1)
    files = np.tile(fj, (1, e2)).reshape(-1)
    funcs.setflags(write=False)
    files.setflags(write=False)
    return funcs, files


@dataclass
class Recovered:
    """A block of decoded intermediate values."""

    function_ids: np.ndarray
    file_ids: np.ndarray
    data: np.ndarray

    def __len__(self) -> int:
        return int(self.function_ids.size)

    def __iter__(self) -> Iterator[IntermediateValue]:
        for i, j, d in zip(self.function_ids.tolist(), self.file_ids.tolist(), self.data):
            yield IntermediateValue(i, j, d.tobytes())

    @classmethod
    def empty(cls, nbytes: int) -> "Recovered":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, np.zeros((0, nbytes), dtype=np.uint8))

    @classmethod
    def concat(cls, blocks: Sequence["Recovered"], nbytes: int) -> "Recovered":
        if not blocks:
            return cls.empty(nbytes)
        return cls(
            np.concatenate([b.function_ids for b in blocks]),
            np.concatenate([b.file_ids for b in blocks]),
            np.concatenate([b.data for b in blocks]),
        )


@dataclass(frozen=True, slots=True)
class TransmissionRecord:
    round: int
    method: str
    sender: int
    receivers: tuple[int, ...]
    bits: int
    payload: bytes
    # header: the value sets mixed into the payload
    vsets: tuple[VSet, ...] = field(repr=False)
    # Method B only: one GF(256) coefficient per packet of ``vsets``, in order
    coefficients: bytes = field(default=b"", repr=False)


# ---------------------------------------------------------------------------
# Method A


@dataclass(frozen=True)
class RoundPlanA:
    gamma: int
    A: tuple[int, ...]  # 1-based group indices
    S: tuple[int, ...]
    Y: tuple[int, ...]
    S_prime: tuple[int, ...]
    S_rest: tuple[int, ...]
    sender: int
    alpha: int  # T-set S_rest + Y
    ell: int  # T-set S_prime + Y

    @property
    def to_rest(self) -> VSet:
        """Values requested by ``S_rest``, computable by ``S_prime + Y``."""
        return VSet(((self.alpha, self.ell),))

    @property
    def to_prime(self) -> VSet:
        return VSet(((self.ell, self.alpha),))


def _pair_choices(design: Design, A: Sequence[int]):
    return itertools.product(*(itertools.combinations(design.groups[m], 2) for m in A))


def enumerate_A(design: Design, gamma: int, sender_policy: str = "lowest") -> list[RoundPlanA]:
    s = design.params.s
    if not 1 <= gamma <= s - 1:
        raise ValueError(f"Method A needs 1 <= gamma <= s-1 (s={s}), got gamma={gamma}")
    if sender_policy not in ("lowest", "rotate"):
        raise ValueError(f"unknown sender policy {sender_policy!r}")
    plans = []
    for A in itertools.combinations(range(s), gamma):
        rest = [m for m in range(s) if m not in A]
        ys = list(itertools.product(*(design.groups[m] for m in rest)))
        for pairs in _pair_choices(design, A):
            S = tuple(sorted(k for p in pairs for k in p))
            # the first group's low node always sits in S' so {S', S \ S'} is unordered
            for bits in itertools.product((0, 1), repeat=gamma - 1):
                sp = (pairs[0][0],) + tuple(p[b] for p, b in zip(pairs[1:], bits))
                sr = tuple(p[0] if k == p[1] else p[1] for p, k in zip(pairs, sp))
                for Y in ys:
                    if sender_policy == "lowest":
                        sender = min(Y)
                    else:
                        sender = Y[len(plans) % len(Y)]
                    plans.append(RoundPlanA(
                        gamma=gamma,
                        A=tuple(m + 1 for m in A),
                        S=S,
                        Y=tuple(sorted(Y)),
                        S_prime=tuple(sorted(sp)),
                        S_rest=tuple(sorted(sr)),
                        sender=sender,
                        alpha=design.t_index(sr + Y),
                        ell=design.t_index(sp + Y),
                    ))
    return plans


def encode_A(plan: RoundPlanA, mapout: MapOutput) -> TransmissionRecord:
    v1, v2 = plan.to_rest, plan.to_prime
    try:
        a = v1.gather(mapout, plan.sender)
        b = v2.gather(mapout, plan.sender)
    except KeyError as e:
        raise ShuffleError(f"placement violation: sender {plan.sender} lacks content ({e})") from e
    coded = np.bitwise_xor(a, b)
    return TransmissionRecord(
        round=plan.gamma,
        method="A",
        sender=plan.sender,
        receivers=plan.S,
        bits=coded.size * 8,
        payload=coded.tobytes(),
        vsets=(v1, v2),
    )


def decode_A(record: TransmissionRecord, receiver: int, mapout: MapOutput) -> Recovered:
    """Strip the side the receiver computed itself and return the other side."""
    if receiver not in record.receivers:
        raise DecodeError(f"node {receiver} is not a receiver of this record")
    v1, v2 = record.vsets
    has1, has2 = v1.held_by(mapout, receiver), v2.held_by(mapout, receiver)
    if has1 and has2:
        log.warning("node %d already holds both sides of a coded pair from node %d", receiver, record.sender)
        return Recovered.empty(mapout.nbytes)
    if not (has1 or has2):
        raise DecodeError(f"node {receiver} holds neither side of the coded pair from node {record.sender}")
    known, wanted = (v1, v2) if has1 else (v2, v1)
    coded = np.frombuffer(record.payload, dtype=np.uint8).reshape(-1, mapout.nbytes)
    data = coded ^ known.gather(mapout, receiver)
    funcs, files = wanted.ids(mapout.design)
    return Recovered(funcs, files, data)


# ---------------------------------------------------------------------------
# Method B


@dataclass(frozen=True, eq=False)
class RoundPlanB:
    gamma: int
    A: tuple[int, ...]  # 1-based group indices
    pairs: tuple[tuple[int, int], ...]  # (low, high) node of S in each group of A
    # vsets[b]: values computed by subsets[b] and requested by the rest of S;
    # bit (gamma-1-g) of b picks the high node of group A[g]
    subsets: tuple[tuple[int, ...], ...]
    vsets: tuple[VSet, ...]

    @cached_property
    def S(self) -> tuple[int, ...]:
        return tuple(sorted(k for p in self.pairs for k in p))

    @property
    def num_packets(self) -> int:
        return 2 * self.gamma - 1

    @cached_property
    def senders(self) -> tuple[int, ...]:
        """Nodes of S in position order (group, low/high)."""
        return tuple(k for p in self.pairs for k in p)

    def position(self, node: int) -> int:
        return self.senders.index(node)


@lru_cache(maxsize=None)
def _held_masks(gamma: int, position: int) -> tuple[int, ...]:
    g, h = divmod(position, 2)
    shift = gamma - 1 - g
    return tuple(b for b in range(1 << gamma) if (b >> shift) & 1 == h)


def enumerate_B(design: Design, gamma: int) -> list[RoundPlanB]:
    s = design.params.s
    if not 1 <= gamma <= s:
        raise ValueError(f"Method B needs 1 <= gamma <= s (s={s}), got gamma={gamma}")
    plans = []
    for A in itertools.combinations(range(s), gamma):
        rest = [m for m in range(s) if m not in A]
        ys = list(itertools.product(*(design.groups[m] for m in rest)))
        for pairs in _pair_choices(design, A):
            subsets, vsets = [], []
            for b in range(1 << gamma):
                bits = [(b >> (gamma - 1 - g)) & 1 for g in range(gamma)]
                sp = tuple(p[x] for p, x in zip(pairs, bits))
                sr = tuple(p[1 - x] for p, x in zip(pairs, bits))
                vpairs = sorted((design.t_index(sr + Y), design.t_index(sp + Y)) for Y in ys)
                subsets.append(tuple(sorted(sp)))
                vsets.append(VSet(tuple(vpairs)))
            plans.append(RoundPlanB(gamma, tuple(m + 1 for m in A), tuple(pairs), tuple(subsets), tuple(vsets)))
    return plans


def _system(coeffs: np.ndarray, gamma: int, receiver_pos: int) -> np.ndarray:
    """Square matrix seen by ``receiver_pos`` over its unknown packets."""
    npk = 2 * gamma - 1
    unknown = [b for b in range(1 << gamma) if b not in _held_masks(gamma, receiver_pos)]
    col = {b: i for i, b in enumerate(unknown)}
    rows = []
    for p in range(2 * gamma):
        if p == receiver_pos:
            continue
        held = _held_masks(gamma, p)
        for c in range(coeffs.shape[1]):
            row = np.zeros(len(unknown) * npk, dtype=np.uint8)
            for hi, b in enumerate(held):
                if b in col:
                    row[col[b] * npk:(col[b] + 1) * npk] = coeffs[p, c, hi * npk:(hi + 1) * npk]
            rows.append(row)
    return np.array(rows, dtype=np.uint8)


@lru_cache(maxsize=None)
def _coefficients(gamma: int, seed: int, max_attempts: int) -> tuple[np.ndarray, int]:
    per = 1 << (gamma - 1)
    width = per * (2 * gamma - 1)
    tried = []
    for attempt in range(max_attempts):
        use = seed + attempt
        rng = np.random.default_rng([gamma, use])
        coeffs = rng.integers(1, 256, size=(2 * gamma, per, width), dtype=np.uint8)
        n = per * (2 * gamma - 1)
        ranks = [gf256.rank(_system(coeffs, gamma, r)) for r in range(2 * gamma)]
        if all(r == n for r in ranks):
            coeffs.setflags(write=False)
            return coeffs, use
        tried.append((use, ranks))
        log.info("coefficient seed %d rank-deficient for gamma=%d: %s", use, gamma, ranks)
    raise RankError(f"no full-rank coefficients for gamma={gamma} after {max_attempts} seeds: {tried}")


def coefficients(gamma: int, seed: int = 0, max_attempts: int = MAX_RESEED) -> np.ndarray:
    """Per-sender-position coefficient blocks (2*gamma, 2**(gamma-1), held packets).

    The same blocks serve every Method B plan of round ``gamma``; they are
    accepted only once every receiver position can solve its system.
    """
    return _coefficients(gamma, seed, max_attempts)[0]


def _split(data: np.ndarray, npk: int) -> np.ndarray:
    flat = data.reshape(-1)
    if flat.size % npk:
        raise ShuffleError(f"value set of {flat.size} bytes cannot split into {npk} equal packets")
    return flat.reshape(npk, -1)


def encode_B(plan: RoundPlanB, mapout: MapOutput, coeff_seed: int = 0) -> list[TransmissionRecord]:
    gamma, npk = plan.gamma, plan.num_packets
    coeffs = coefficients(gamma, coeff_seed)
    records = []
    for p, sender in enumerate(plan.senders):
        held = [plan.vsets[b] for b in _held_masks(gamma, p)]
        try:
            packets = np.concatenate([_split(v.gather(mapout, sender), npk) for v in held])
        except KeyError as e:
            raise ShuffleError(f"placement violation: node {sender} lacks content ({e})") from e
        combos = gf256.matmul(coeffs[p], packets)
        receivers = tuple(k for k in plan.S if k != sender)
        for c in range(combos.shape[0]):
            records.append(TransmissionRecord(
                round=gamma,
                method="B",
                sender=sender,
                receivers=receivers,
                bits=combos.shape[1] * 8,
                payload=combos[c].tobytes(),
                vsets=tuple(held),
                coefficients=coeffs[p, c].tobytes(),
            ))
    return records


def decode_B(plan: RoundPlanB, records: Sequence[TransmissionRecord], receiver: int,
             mapout: MapOutput) -> Recovered:
    """Solve the receiver's linear system and return every value set it requests."""
    if receiver not in plan.S:
        raise DecodeError(f"node {receiver} is not in the plan's node set {plan.S}")
    design = mapout.design
    npk = plan.num_packets
    index = {v: b for b, v in enumerate(plan.vsets)}
    known = {b: v for b, v in enumerate(plan.vsets) if receiver in plan.subsets[b]}
    unknown = [b for b in range(len(plan.vsets)) if b not in known]
    ucol = {b: i for i, b in enumerate(unknown)}
    known_packets = {b: _split(v.gather(mapout, receiver), npk) for b, v in known.items()}

    rows, rhs = [], []
    by_sender: dict[int, list[TransmissionRecord]] = {}
    for r in records:
        if r.sender != receiver and receiver in r.receivers:
            by_sender.setdefault(r.sender, []).append(r)
    for sender in sorted(by_sender):
        recs = by_sender[sender]
        header = [index[v] for v in recs[0].vsets]
        kb = [(hi, b) for hi, b in enumerate(header) if b in known]
        coef = np.frombuffer(b"".join(r.coefficients for r in recs), dtype=np.uint8).reshape(len(recs), -1)
        pay = np.frombuffer(b"".join(r.payload for r in recs), dtype=np.uint8).reshape(len(recs), -1)
        if kb:
            kc = np.concatenate([coef[:, hi * npk:(hi + 1) * npk] for hi, _ in kb], axis=1)
            kp = np.concatenate([known_packets[b] for _, b in kb])
            pay = pay ^ gf256.matmul(kc, kp)
        m = np.zeros((len(recs), len(unknown) * npk), dtype=np.uint8)
        for hi, b in enumerate(header):
            if b in ucol:
                u = ucol[b]
                m[:, u * npk:(u + 1) * npk] = coef[:, hi * npk:(hi + 1) * npk]
        rows.append(m)
        rhs.append(pay)
    n = len(unknown) * npk
    if not rows or sum(len(m) for m in rows) != n:
        got = sum(len(m) for m in rows)
        raise DecodeError(f"node {receiver} got {got} combinations for {n} unknown packets")
    try:
        sol = gf256.solve(np.concatenate(rows), np.concatenate(rhs))
    except gf256.SingularMatrixError as e:
        raise DecodeError(f"singular system at node {receiver}: {e}") from e
    blocks = []
    for b in unknown:
        u = ucol[b]
        v = plan.vsets[b]
        data = sol[u * npk:(u + 1) * npk].reshape(v.size(design), mapout.nbytes)
        funcs, files = v.ids(design)
        blocks.append(Recovered(funcs, files, data))
    return Recovered.concat(blocks, mapout.nbytes)


# ---------------------------------------------------------------------------
# whole shuffle


class Delivered:
    """Per-node store of received intermediate values for the node's assigned functions."""

    def __init__(self, design: Design, nbytes: int):
        self.design = design
        self.nbytes = nbytes
        N, Q = design.params.N, design.params.Q
        self.functions: dict[int, np.ndarray] = {}
        self._row: dict[int, np.ndarray] = {}
        self.values: dict[int, np.ndarray] = {}
        self.have: dict[int, np.ndarray] = {}
        self.redundant = 0
        self.unassigned = 0
        for k in design.nodes:
            funcs = np.array(sorted(design.node_view(k).functions), dtype=np.int64)
            row = np.full(Q + 1, -1, dtype=np.int64)
            row[funcs] = np.arange(funcs.size)
            self.functions[k] = funcs
            self._row[k] = row
            self.values[k] = np.zeros((funcs.size, N, nbytes), dtype=np.uint8)
            self.have[k] = np.zeros((funcs.size, N), dtype=bool)

    def put(self, node: int, rec: Recovered) -> None:
        if len(rec) == 0:
            return
        rows = self._row[node][rec.function_ids]
        ok = rows >= 0
        self.unassigned += int((~ok).sum())
        rows, cols, data = rows[ok], rec.file_ids[ok] - 1, rec.data[ok]
        self.redundant += int(self.have[node][rows, cols].sum())
        self.values[node][rows, cols] = data
        self.have[node][rows, cols] = True

    def holds(self, node: int, function_id: int, file_id: int) -> bool:
        r = self._row[node][function_id]
        return r >= 0 and bool(self.have[node][r, file_id - 1])

    def get(self, node: int, function_id: int, file_id: int) -> IntermediateValue:
        if not self.holds(node, function_id, file_id):
            raise KeyError((node, function_id, file_id))
        r = self._row[node][function_id]
        return IntermediateValue(function_id, file_id, self.values[node][r, file_id - 1].tobytes())

    def count(self, node: int) -> int:
        return int(self.have[node].sum())


@dataclass
class ShuffleLedger:
    s: int
    Q: int
    N: int
    t_bits: int
    strategy: str
    records: list[TransmissionRecord]

    def _by_round(self, attr: str | None) -> list:
        out = [0] * self.s
        for r in self.records:
            out[r.round - 1] += r.bits if attr else 1
        return out

    @property
    def per_round_bits(self) -> list[Fraction]:
        return [Fraction(b) for b in self._by_round("bits")]

    @property
    def per_round_count(self) -> list[int]:
        return self._by_round(None)

    @property
    def per_round_units(self) -> list[Fraction]:
        """Round totals in units of T bits."""
        return [b / self.t_bits for b in self.per_round_bits]

    @property
    def total_bits(self) -> Fraction:
        return sum(self.per_round_bits, Fraction(0))

    @property
    def normalized_load(self) -> Fraction:
        return self.total_bits / (self.Q * self.N * self.t_bits)

    def round_sizes(self, gamma: int) -> dict[int, int]:
        """Histogram of record sizes (bits -> count) in one round."""
        out: dict[int, int] = {}
        for r in self.records:
            if r.round == gamma:
                out[r.bits] = out.get(r.bits, 0) + 1
        return dict(sorted(out.items()))

    def to_csv(self, fh=None) -> str | None:
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "method", "sender", "receivers", "bits"])
        for r in self.records:
            w.writerow([r.round, r.method, r.sender, " ".join(map(str, r.receivers)), r.bits])
        return None if fh is not None else buf.getvalue()

    def summary(self) -> dict:
        load = self.normalized_load
        methods = round_methods(self.s, self.strategy)
        return {
            "strategy": Strategy(self.strategy).value,
            "t_bits": self.t_bits,
            "transmissions": len(self.records),
            "rounds": [
                {
                    "round": g,
                    "method": methods[g],
                    "transmissions": c,
                    "bits": int(b),
                    "units_of_T": rational_json(b / self.t_bits),
                }
                for g, c, b in zip(range(1, self.s + 1), self.per_round_count, self.per_round_bits)
            ],
            "normalized_load": rational_json(load),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.summary(), **kw)


def rational_json(q: Fraction) -> dict:
    q = Fraction(q)
    return {"numerator": str(q.numerator), "denominator": str(q.denominator), "decimal": float(f"{float(q):.12g}")}


@dataclass
class Batch:
    """One plan and the records it produced."""

    plan: RoundPlanA | RoundPlanB
    records: list[TransmissionRecord]


def _pmap(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def plan_rounds(design: Design, strategy=Strategy.DEFAULT, sender_policy: str = "lowest") -> list[list]:
    """Plans of each round, in enumeration order."""
    rounds = []
    for gamma, method in round_methods(design.params.s, strategy).items():
        if method == "A":
            rounds.append(enumerate_A(design, gamma, sender_policy))
        else:
            rounds.append(enumerate_B(design, gamma))
    return rounds


def _units(plans: list) -> list[list]:
    """Independent work units: a whole Method A round, or the Method B plans sharing one A."""
    if plans and isinstance(plans[0], RoundPlanB):
        return [list(g) for _, g in itertools.groupby(plans, key=lambda p: p.A)]
    return [plans]


def transmit(design: Design, mapout: MapOutput, strategy=Strategy.DEFAULT, coeff_seed: int = 0,
             sender_policy: str = "lowest", jobs: int = 1) -> list[Batch]:
    """Encode every plan of every round, in enumeration order."""
    from . import _batch
    from .mapper import check_t_bits

    check_t_bits(mapout.t_bits, design.params.s, strategy)
    units = [u for plans in plan_rounds(design, strategy, sender_policy) for u in _units(plans)]

    def encode(unit):
        if unit and isinstance(unit[0], RoundPlanA):
            return [Batch(p, [r]) for p, r in zip(unit, _batch.encode_round_A(unit, mapout))]
        return [Batch(p, recs) for p, recs in zip(unit, _batch.encode_round_B(unit, mapout, coeff_seed))]

    return [b for chunk in _pmap(encode, units, jobs) for b in chunk]


def receive(design: Design, mapout: MapOutput, batches: Sequence[Batch], jobs: int = 1) -> Delivered:
    """Decode every batch at its receivers and collect the results per node."""
    from . import _batch

    units = [list(g) for _, g in itertools.groupby(
        batches, key=lambda b: (b.plan.gamma, type(b.plan).__name__,
                                b.plan.A if isinstance(b.plan, RoundPlanB) else None))]

    def decode(unit):
        if isinstance(unit[0].plan, RoundPlanA):
            return _batch.decode_round_A([r for b in unit for r in b.records], mapout)
        return _batch.decode_round_B(unit, mapout)

    delivered = Delivered(design, mapout.nbytes)
    for results in _pmap(decode, units, jobs):
        for k, rec in results:
            delivered.put(k, rec)
    return delivered


def run_shuffle(design: Design, mapout: MapOutput, strategy=Strategy.DEFAULT, coeff_seed: int = 0,
                sender_policy: str = "lowest", jobs: int = 1) -> tuple[Delivered, ShuffleLedger]:
    strategy = Strategy(strategy)
    batches = transmit(design, mapout, strategy, coeff_seed, sender_policy, jobs)
    delivered = receive(design, mapout, batches, jobs)
    records = [r for b in batches for r in b.records]
    p = design.params
    ledger = ShuffleLedger(p.s, p.Q, p.N, mapout.t_bits, strategy.value, records)
    return delivered, ledger
