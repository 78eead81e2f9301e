"""Brute-force cross-checks that avoid the shuffle enumerators and the closed forms.

Everything here works from per-node file/function sets and plain set
arithmetic; nothing is imported from :mod:`cascaded_cdc.shuffle` or
:mod:`cascaded_cdc.analysis`.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .design import Design
from .mapper import MapOutput, payload_block

# QN above which the exhaustive checks refuse to run unless forced
DEFAULT_GUARD = 2_000_000


class OracleTooLarge(RuntimeError):
    pass


def _guard(design: Design, limit: int | None) -> None:
    qn = design.params.Q * design.params.N
    if limit is not None and qn > limit:
        raise OracleTooLarge(f"QN={qn} exceeds the oracle guard {limit}")


def membership(design: Design) -> tuple[np.ndarray, np.ndarray]:
    """Boolean (K, Q) function assignment and (K, N) file storage matrices."""
    p = design.params
    W = np.zeros((p.K, p.Q), dtype=bool)
    M = np.zeros((p.K, p.N), dtype=bool)
    for k in design.nodes:
        view = design.node_view(k)
        W[k - 1, np.fromiter(view.functions, dtype=np.int64) - 1] = True
        M[k - 1, np.fromiter(view.files, dtype=np.int64) - 1] = True
    return W, M


def requester_counts(design: Design, limit: int | None = DEFAULT_GUARD) -> np.ndarray:
    """(Q, N) matrix: number of nodes k with i in W_k and j not in M_k."""
    _guard(design, limit)
    W, M = membership(design)
    return W.T.astype(np.int32) @ (~M).astype(np.int32)


def requester_histogram(design: Design, limit: int | None = DEFAULT_GUARD) -> dict[int, int]:
    counts = requester_counts(design, limit)
    hist = np.bincount(counts.reshape(-1), minlength=design.params.s + 1)
    return {g: int(c) for g, c in enumerate(hist)}


def _tset_pairs(design: Design):
    """Yield (alpha, ell, requesters, owners_in_S, common) over ordered T-set pairs."""
    X = design.params.X
    members = [frozenset(design.t_members(t)) for t in range(1, X + 1)]
    for a, ta in enumerate(members, start=1):
        for l, tl in enumerate(members, start=1):
            yield a, l, ta - tl, tl - ta, ta & tl


def count_round_units(design: Design, strategy="default", limit: int | None = DEFAULT_GUARD) -> list[Fraction]:
    """Bits sent in each round, in units of T, recounted from set definitions."""
    _guard(design, limit)
    p = design.params
    s, block = p.s, p.eta1 * p.eta2
    methods = _methods(s, strategy)

    # IV counts bucketed by who requests them and who in S can compute them
    a_buckets: dict[int, Counter] = defaultdict(Counter)
    b_buckets: dict[int, Counter] = defaultdict(Counter)
    for _, _, req, own, common in _tset_pairs(design):
        g = len(req)
        if g == 0:
            continue
        a_buckets[g][(common, req, own)] += block
        b_buckets[g][(req | own, own)] += block

    units = []
    for g in range(1, s + 1):
        if methods[g] == "A":
            total = Fraction(0)
            seen = set()
            for (common, req, own), n in a_buckets[g].items():
                key = (common, frozenset((req, own)))
                if key in seen:
                    continue
                seen.add(key)
                total += max(n, a_buckets[g].get((common, own, req), 0))
            units.append(total)
        else:
            units.append(_method_b_units(design, g, b_buckets[g]))
    return units


def _method_b_units(design: Design, g: int, buckets: Counter) -> Fraction:
    groups = [set(grp) for grp in design.groups]
    total = Fraction(0)
    for S in itertools.combinations(design.nodes, 2 * g):
        per_group = [len(grp.intersection(S)) for grp in groups]
        if sorted(per_group, reverse=True)[:g] != [2] * g or sum(per_group) != 2 * g:
            continue
        S = frozenset(S)
        splits = []
        for sp in itertools.combinations(sorted(S), g):
            if all(len(grp.intersection(sp)) <= 1 for grp in groups):
                splits.append(frozenset(sp))
        sizes = {sp: buckets.get((S, sp), 0) for sp in splits}
        if len(set(sizes.values())) != 1:
            raise AssertionError(f"unequal value sets inside {sorted(S)}: {sizes}")
        size = next(iter(sizes.values()))
        for k in S:
            # k sends one combination per value set it can compute
            combos = sum(1 for sp in splits if k in sp)
            total += Fraction(combos * size, 2 * g - 1)
    return total


def _methods(s: int, strategy) -> dict[int, str]:
    name = getattr(strategy, "value", strategy)
    if name == "all-b":
        return {g: "B" for g in range(1, s + 1)}
    if name == "default":
        return {g: ("A" if g < s else "B") for g in range(1, s + 1)}
    raise ValueError(f"unknown strategy {strategy!r}")


def count_load_bruteforce(design: Design, strategy="default", limit: int | None = DEFAULT_GUARD) -> Fraction:
    p = design.params
    return sum(count_round_units(design, strategy, limit), Fraction(0)) / (p.Q * p.N)


@dataclass
class AuditReport:
    checked: int = 0
    local: int = 0
    missing: list[dict] = field(default_factory=list)
    corrupt: list[dict] = field(default_factory=list)
    map_mismatch: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.missing or self.corrupt or self.map_mismatch)

    def to_dict(self, max_items: int = 50) -> dict:
        return {
            "ok": self.ok,
            "checked": self.checked,
            "local": self.local,
            "delivered": self.checked - self.local,
            "missing_count": len(self.missing),
            "corrupt_count": len(self.corrupt),
            "map_mismatch_count": len(self.map_mismatch),
            "missing": self.missing[:max_items],
            "corrupt": self.corrupt[:max_items],
            "map_mismatch": self.map_mismatch[:max_items],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def provenance(design: Design, function_id: int, file_id: int) -> dict:
    """Which node sets should have carried v_{i,j}."""
    ta = design.t_set(design.function_tset(function_id))
    tl = design.t_set(design.file_tset(file_id))
    req, own = ta - tl, tl - ta
    return {
        "round": len(req),
        "S": sorted(req | own),
        "S_prime": sorted(own),
        "Y": sorted(ta & tl),
    }


def audit_delivery(design: Design, mapout: MapOutput, delivered) -> AuditReport:
    """Check every (node, assigned function, file) value bit-exactly against fresh payloads."""
    report = AuditReport()
    p = design.params
    nbytes, seed = mapout.nbytes, mapout.seed
    all_files = np.arange(1, p.N + 1)
    for k in design.nodes:
        view = design.node_view(k)
        funcs = np.array(sorted(view.functions), dtype=np.int64)
        expected = payload_block(funcs, all_files, nbytes, seed)
        local = np.zeros(p.N, dtype=bool)
        local[np.array(sorted(view.files)) - 1] = True
        report.checked += funcs.size * p.N
        report.local += funcs.size * int(local.sum())

        local_files = all_files[local]
        computed = mapout[k].gather(np.repeat(funcs, local_files.size), np.tile(local_files, funcs.size))
        bad = np.any(computed.reshape(funcs.size, local_files.size, nbytes) != expected[:, local], axis=2)
        for r, c in zip(*np.nonzero(bad)):
            report.map_mismatch.append({"node": k, "function": int(funcs[r]), "file": int(local_files[c])})

        have = delivered.have[k]
        rows = delivered._row[k][funcs]
        got_have = have[rows]
        got = delivered.values[k][rows]
        miss = ~local[None, :] & ~got_have
        wrong = ~local[None, :] & got_have & np.any(got != expected, axis=2)
        for r, c in zip(*np.nonzero(miss)):
            i, j = int(funcs[r]), int(c + 1)
            report.missing.append({"node": k, "function": i, "file": j, "expected_from": provenance(design, i, j)})
        for r, c in zip(*np.nonzero(wrong)):
            i, j = int(funcs[r]), int(c + 1)
            report.corrupt.append({"node": k, "function": i, "file": j, "expected_from": provenance(design, i, j)})
    return report
