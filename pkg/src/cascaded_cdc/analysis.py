"""Closed-form computation and communication loads of the lattice scheme.

Every quantity is an exact ``Fraction``. Round totals are in units of ``T``
bits (the size of one intermediate value).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .design import DesignParams


def _subset_products(x, gamma: int) -> int:
    """Sum over |A| = gamma of prod_{i in A} (x_i - 1)."""
    return sum(math.prod(x[i] - 1 for i in A) for A in combinations(range(len(x)), gamma))


def computation_load(params: DesignParams) -> int:
    return params.s


def communication_load_formula(params: DesignParams) -> Fraction:
    s, x, X = params.s, params.x, params.X
    coded_pairs = Fraction(sum(_subset_products(x, g) for g in range(1, s)), 2 * X)
    last = Fraction(s * math.prod(xi - 1 for xi in x), X * (2 * s - 1))
    return coded_pairs + last


def round_A_bits(params: DesignParams, gamma: int) -> Fraction:
    if not 1 <= gamma <= params.s - 1:
        raise ValueError(f"Method A rounds are 1..{params.s - 1}, got {gamma}")
    return Fraction(params.eta1 * params.eta2 * params.X, 2) * _subset_products(params.x, gamma)


def round_B_bits(params: DesignParams, gamma: int) -> Fraction:
    if not 1 <= gamma <= params.s:
        raise ValueError(f"Method B rounds are 1..{params.s}, got {gamma}")
    scale = Fraction(gamma, 2 * gamma - 1)
    return scale * params.eta1 * params.eta2 * params.X * _subset_products(params.x, gamma)


def round_s_bits(params: DesignParams) -> Fraction:
    s = params.s
    return Fraction(s * params.eta1 * params.eta2 * params.X * math.prod(xi - 1 for xi in params.x), 2 * s - 1)


@dataclass(frozen=True)
class LoadFormulaResult:
    params: DesignParams
    r_c: int
    L_c: Fraction
    per_round_A_bits: tuple[Fraction, ...]
    round_s_bits: Fraction
    per_round_B_bits: tuple[Fraction, ...]

    @property
    def default_round_bits(self) -> tuple[Fraction, ...]:
        return self.per_round_A_bits + (self.round_s_bits,)

    @property
    def all_b_load(self) -> Fraction:
        p = self.params
        return sum(self.per_round_B_bits, Fraction(0)) / (p.Q * p.N)

    def to_dict(self) -> dict:
        def q(v):
            return {"numerator": str(v.numerator), "denominator": str(v.denominator),
                    "decimal": float(f"{float(v):.12g}")}

        return {
            "params": self.params.as_dict(),
            "r_c": self.r_c,
            "L_c": q(self.L_c),
            "per_round_A_bits": [q(v) for v in self.per_round_A_bits],
            "round_s_bits": q(self.round_s_bits),
            "per_round_B_bits": [q(v) for v in self.per_round_B_bits],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def load_formula(params: DesignParams) -> LoadFormulaResult:
    s = params.s
    res = LoadFormulaResult(
        params=params,
        r_c=computation_load(params),
        L_c=communication_load_formula(params),
        per_round_A_bits=tuple(round_A_bits(params, g) for g in range(1, s)),
        round_s_bits=round_s_bits(params),
        per_round_B_bits=tuple(round_B_bits(params, g) for g in range(1, s + 1)),
    )
    total = sum(res.default_round_bits, Fraction(0)) / (params.Q * params.N)
    # the aggregate formula and the per-round count are derived separately
    assert total == res.L_c, (total, res.L_c)
    return res
