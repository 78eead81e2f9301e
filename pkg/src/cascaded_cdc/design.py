"""Lattice placement of files and Reduce functions on a heterogeneous cluster.

Nodes are split into ``s`` groups of sizes ``x_1..x_s``. Every lattice cell
``(a_1, .., a_s)`` with ``1 <= a_m <= x_m`` picks one node from each group; that
node set is a T-set. T-set ``t`` owns file block ``B_t`` (``eta1`` files) and
function block ``D_t`` (``eta2`` functions), and every member of the T-set
stores the files and is assigned the functions.

Node, file, function and T-set ids are all 1-based.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence


class DesignError(ValueError):
    """Invalid design parameters or out-of-range ids."""


@dataclass(frozen=True)
class DesignParams:
    x: tuple[int, ...]
    eta1: int = 1
    eta2: int = 1

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(int(v) for v in self.x))
        if len(self.x) < 2:
            raise DesignError(f"need at least 2 node groups, got s={len(self.x)}")
        for m, xm in enumerate(self.x, start=1):
            if xm < 2:
                raise DesignError(f"group size x_{m}={xm} violates x_i >= 2")
        if self.eta1 < 1:
            raise DesignError(f"eta1={self.eta1} violates eta1 >= 1")
        if self.eta2 < 1:
            raise DesignError(f"eta2={self.eta2} violates eta2 >= 1")

    @classmethod
    def create(cls, s: int | None, x: Sequence[int], eta1: int = 1, eta2: int = 1) -> "DesignParams":
        """Build params, checking an explicitly given ``s`` against ``len(x)``."""
        if s is not None and s != len(x):
            raise DesignError(f"s={s} does not match len(x)={len(x)}")
        return cls(tuple(x), eta1, eta2)

    @property
    def s(self) -> int:
        return len(self.x)

    @property
    def K(self) -> int:
        return sum(self.x)

    @property
    def X(self) -> int:
        return math.prod(self.x)

    @property
    def N(self) -> int:
        return self.eta1 * self.X

    @property
    def Q(self) -> int:
        return self.eta2 * self.X

    def as_dict(self) -> dict:
        return {"s": self.s, "x": list(self.x), "eta1": self.eta1, "eta2": self.eta2}


@dataclass(frozen=True)
class NodeView:
    node: int
    files: frozenset[int]
    functions: frozenset[int]


@dataclass(frozen=True)
class Design:
    """Immutable placement. Build it with :func:`build_design`."""

    params: DesignParams
    groups: tuple[tuple[int, ...], ...]
    # lattice coordinates of each T-set, tsets[t - 1] = (a_1, .., a_s)
    tsets: tuple[tuple[int, ...], ...]
    _coord_index: dict = field(repr=False, compare=False)
    _node_pos: dict = field(repr=False, compare=False)

    # -- ids -------------------------------------------------------------
    @property
    def nodes(self) -> range:
        return range(1, self.params.K + 1)

    def group_of(self, node: int) -> int:
        """0-based group index of ``node``."""
        return self._node_pos[self._check_node(node)][0]

    def coord_of(self, node: int) -> int:
        """1-based lattice coordinate of ``node`` inside its group."""
        return self._node_pos[self._check_node(node)][1]

    def _check_node(self, node: int) -> int:
        if node not in self._node_pos:
            raise DesignError(f"node {node} outside 1..{self.params.K}")
        return node

    def _check_t(self, t: int) -> int:
        if not 1 <= t <= self.params.X:
            raise DesignError(f"T-set index {t} outside 1..{self.params.X}")
        return t

    # -- T-sets ----------------------------------------------------------
    def t_members(self, t: int) -> tuple[int, ...]:
        """Nodes of T-set ``t`` ordered by group."""
        coord = self.tsets[self._check_t(t) - 1]
        return tuple(self.groups[m][a - 1] for m, a in enumerate(coord))

    def t_index(self, nodes: Iterable[int]) -> int:
        """Index of the T-set formed by ``nodes`` (one node per group)."""
        nodes = tuple(nodes)
        coord = [0] * len(self.groups)
        try:
            for k in nodes:
                m, a = self._node_pos[k]
                if coord[m]:
                    raise DesignError(f"nodes {sorted(nodes)} hit group {m + 1} twice")
                coord[m] = a
            return self._coord_index[tuple(coord)]
        except KeyError:
            raise DesignError(f"nodes {sorted(nodes)} are not one node per group of 1..{self.params.K}") from None

    def coord_t(self, coord: Sequence[int]) -> int:
        """Index of the T-set at lattice cell ``coord``."""
        try:
            return self._coord_index[tuple(coord)]
        except KeyError:
            raise DesignError(f"{tuple(coord)} is not a lattice cell of x={list(self.params.x)}") from None

    @cached_property
    def _member_sets(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(self.t_members(t)) for t in range(1, self.params.X + 1))

    def t_set(self, t: int) -> frozenset[int]:
        return self._member_sets[self._check_t(t) - 1]

    # -- file / function blocks ------------------------------------------
    def file_block(self, t: int) -> range:
        e = self.params.eta1
        return range((self._check_t(t) - 1) * e + 1, t * e + 1)

    def function_block(self, t: int) -> range:
        e = self.params.eta2
        return range((self._check_t(t) - 1) * e + 1, t * e + 1)

    def file_tset(self, file_id: int) -> int:
        if not 1 <= file_id <= self.params.N:
            raise DesignError(f"file {file_id} outside 1..{self.params.N}")
        return (file_id - 1) // self.params.eta1 + 1

    def function_tset(self, function_id: int) -> int:
        if not 1 <= function_id <= self.params.Q:
            raise DesignError(f"function {function_id} outside 1..{self.params.Q}")
        return (function_id - 1) // self.params.eta2 + 1

    # -- per-node views --------------------------------------------------
    @cached_property
    def _node_tsets(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {k: [] for k in self.nodes}
        for t in range(1, self.params.X + 1):
            for k in self.t_members(t):
                out[k].append(t)
        return {k: tuple(v) for k, v in out.items()}

    def node_tsets(self, node: int) -> tuple[int, ...]:
        """T-set indices containing ``node``, ascending."""
        return self._node_tsets[self._check_node(node)]

    def node_view(self, node: int) -> NodeView:
        ts = self.node_tsets(node)
        files = frozenset(j for t in ts for j in self.file_block(t))
        funcs = frozenset(i for t in ts for i in self.function_block(t))
        return NodeView(node, files, funcs)

    def requesters(self, function_id: int, file_id: int) -> frozenset[int]:
        """Nodes assigned ``function_id`` that do not store ``file_id``."""
        alpha = self.function_tset(function_id)
        ell = self.file_tset(file_id)
        return self.t_set(alpha) - self.t_set(ell)

    # -- relabeling & export ---------------------------------------------
    def relabeled(self, lattice_order=None, node_order=None) -> "Design":
        """Same params with a different T-index bijection and/or node order."""
        return build_design(
            self.params,
            lattice_order=lattice_order if lattice_order is not None else self.tsets,
            groups=node_order if node_order is not None else self.groups,
        )

    def to_dict(self) -> dict:
        nodes = []
        for k in self.nodes:
            view = self.node_view(k)
            nodes.append({
                "node": k,
                "group": self.group_of(k) + 1,
                "files": sorted(view.files),
                "functions": sorted(view.functions),
            })
        return {
            "params": self.params.as_dict(),
            "K": self.params.K,
            "X": self.params.X,
            "N": self.params.N,
            "Q": self.params.Q,
            "groups": [list(g) for g in self.groups],
            "tsets": [
                {"t": t, "coord": list(self.tsets[t - 1]), "nodes": list(self.t_members(t))}
                for t in range(1, self.params.X + 1)
            ],
            "nodes": nodes,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def canonical_lattice(x: Sequence[int]) -> list[tuple[int, ...]]:
    """Mixed-radix order of lattice cells, ``a_1`` slowest and ``a_s`` fastest."""
    return list(itertools.product(*(range(1, xm + 1) for xm in x)))


def build_design(params: DesignParams, lattice_order=None, groups=None) -> Design:
    """Construct the placement for ``params``.

    ``lattice_order`` overrides the T-index bijection (a permutation of all
    lattice cells). ``groups`` overrides the node-to-group assignment; each
    group's listed order fixes the lattice coordinate of its nodes. Both
    default to the canonical contiguous layout.
    """
    x = params.x
    if groups is None:
        groups, start = [], 1
        for xm in x:
            groups.append(tuple(range(start, start + xm)))
            start += xm
    groups = tuple(tuple(int(k) for k in g) for g in groups)
    if tuple(len(g) for g in groups) != x:
        raise DesignError(f"group sizes {[len(g) for g in groups]} do not match x={list(x)}")
    flat = [k for g in groups for k in g]
    if sorted(flat) != list(range(1, params.K + 1)):
        raise DesignError(f"groups must partition nodes 1..{params.K}")

    cells = canonical_lattice(x)
    if lattice_order is None:
        order = tuple(cells)
    else:
        order = tuple(tuple(int(a) for a in c) for c in lattice_order)
        if sorted(order) != cells:
            raise DesignError("lattice_order is not a permutation of the lattice cells")

    node_pos = {k: (m, a) for m, g in enumerate(groups) for a, k in enumerate(g, start=1)}
    coord_index = {c: t for t, c in enumerate(order, start=1)}
    return Design(params, groups, order, coord_index, node_pos)


def t_members(design: Design, t: int) -> frozenset[int]:
    return design.t_set(t)


def requesters(design: Design, function_id: int, file_id: int) -> frozenset[int]:
    return design.requesters(function_id, file_id)
