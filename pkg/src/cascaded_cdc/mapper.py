"""Map phase: every node computes v_{i,j} for all functions i and local files j.

Payloads are synthetic. Each intermediate value is a keyed pseudo-random byte
string derived from ``(function_id, file_id, seed)`` with a splitmix64 chain, so
two nodes computing the same v_{i,j} produce identical bytes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .design import Design

_M64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_WORD = np.uint64(0xD1B54A32D192ED03)


class MapError(ValueError):
    pass


class MissingValueError(KeyError):
    """A node was asked for an intermediate value it cannot compute locally."""


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


def payload_block(function_ids, file_ids, nbytes: int, seed: int) -> np.ndarray:
    """Payloads for the grid ``function_ids x file_ids`` as (nf, nj, nbytes) uint8."""
    fi = np.asarray(function_ids, dtype=np.uint64).reshape(-1, 1, 1)
    fj = np.asarray(file_ids, dtype=np.uint64).reshape(1, -1, 1)
    words = -(-nbytes // 8)
    w = np.arange(1, words + 1, dtype=np.uint64).reshape(1, 1, -1)
    with np.errstate(over="ignore"):
        h = _splitmix(np.array([seed & _M64], dtype=np.uint64))
        h = _splitmix(h ^ fi)
        h = _splitmix(h ^ fj)
        out = _splitmix(h + w * _WORD)
    raw = out.astype("<u8").view(np.uint8)
    return np.ascontiguousarray(raw[:, :, :nbytes])


def payload(function_id: int, file_id: int, t_bits: int, seed: int) -> bytes:
    if function_id < 1 or file_id < 1:
        raise MapError(f"ids are 1-based, got ({function_id}, {file_id})")
    nbytes = _nbytes(t_bits)
    return payload_block([function_id], [file_id], nbytes, seed)[0, 0].tobytes()


def _nbytes(t_bits: int) -> int:
    if t_bits <= 0 or t_bits % 8:
        raise MapError(f"t_bits={t_bits} must be a positive multiple of 8")
    return t_bits // 8


@dataclass(frozen=True)
class IntermediateValue:
    function_id: int
    file_id: int
    payload: bytes


class NodeMap:
    """Locally computed intermediate values of one node, all Q functions x local files."""

    def __init__(self, node: int, files: np.ndarray, values: np.ndarray, n_files_total: int):
        self.node = node
        self.files = files
        self.values = values
        self.values.setflags(write=False)
        self._col = np.full(n_files_total + 1, -1, dtype=np.int64)
        self._col[files] = np.arange(files.size)

    def __len__(self) -> int:
        return self.values.shape[0] * self.values.shape[1]

    def has_file(self, file_id: int) -> bool:
        return 0 < file_id < self._col.size and self._col[file_id] >= 0

    def has_files(self, file_ids) -> bool:
        return bool(np.all(self._col[np.asarray(file_ids)] >= 0))

    def gather(self, function_ids, file_ids) -> np.ndarray:
        """Values at paired ids (flat arrays of equal length) as (n, nbytes)."""
        fi = np.asarray(function_ids, dtype=np.int64)
        cols = self._col[np.asarray(file_ids, dtype=np.int64)]
        if np.any(cols < 0):
            missing = sorted(set(np.asarray(file_ids)[cols < 0].tolist()))
            raise MissingValueError(f"node {self.node} does not store files {missing}")
        return self.values[fi - 1, cols]

    def get(self, function_id: int, file_id: int) -> IntermediateValue:
        data = self.gather([function_id], [file_id])[0]
        return IntermediateValue(function_id, file_id, data.tobytes())

    def __iter__(self) -> Iterator[IntermediateValue]:
        for i in range(self.values.shape[0]):
            for c, j in enumerate(self.files.tolist()):
                yield IntermediateValue(i + 1, j, self.values[i, c].tobytes())

    def digest(self) -> str:
        return hashlib.sha256(self.values.tobytes()).hexdigest()


@dataclass
class MapOutput:
    design: Design
    t_bits: int
    seed: int
    nodes: dict[int, NodeMap]

    @property
    def nbytes(self) -> int:
        return self.t_bits // 8

    @property
    def total_computed(self) -> int:
        return sum(len(m) for m in self.nodes.values())

    def __getitem__(self, node: int) -> NodeMap:
        return self.nodes[node]

    def digests(self) -> dict[int, str]:
        return {k: m.digest() for k, m in self.nodes.items()}


def default_t_bits(s: int, strategy="default") -> int:
    from .shuffle import required_divisor

    return 8 * required_divisor(s, strategy)


def check_t_bits(t_bits: int, s: int, strategy="default") -> None:
    from .shuffle import required_divisor

    _nbytes(t_bits)
    d = required_divisor(s, strategy)
    if t_bits % d:
        raise MapError(f"t_bits={t_bits} must be divisible by {d} for the {strategy} strategy with s={s}")


def run_map(design: Design, t_bits: int | None = None, seed: int = 0, strategy="default") -> MapOutput:
    """Compute every node's local intermediate values.

    ``t_bits=None`` picks the smallest size that makes packet splitting exact
    for ``strategy``.
    """
    p = design.params
    if t_bits is None:
        t_bits = default_t_bits(p.s, strategy)
    check_t_bits(t_bits, p.s, strategy)
    nbytes = t_bits // 8
    funcs = np.arange(1, p.Q + 1)
    nodes = {}
    for k in design.nodes:
        files = np.array(sorted(design.node_view(k).files), dtype=np.int64)
        nodes[k] = NodeMap(k, files, payload_block(funcs, files, nbytes, seed), p.N)
    return MapOutput(design, t_bits, seed, nodes)
