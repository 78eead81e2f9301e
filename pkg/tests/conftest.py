import random
from dataclasses import dataclass
from fractions import Fraction

import pytest

from cascaded_cdc.design import DesignParams, build_design
from cascaded_cdc.mapper import run_map
from cascaded_cdc.oracle import audit_delivery
from cascaded_cdc.shuffle import run_shuffle

SAMPLE_SEED = 20261018
SAMPLE_SIZE = 24

# criterion -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def random_configs(n=SAMPLE_SIZE, seed=SAMPLE_SEED) -> list[DesignParams]:
    """Seeded sample over s in {2,3,4}, x_i in 2..5, eta in {1,2}; every s appears."""
    rng = random.Random(seed)
    out = []
    for k in range(n):
        s = (2, 3, 4)[k % 3] if k < 3 else rng.choice((2, 3, 4))
        x = tuple(rng.randint(2, 5) for _ in range(s))
        out.append(DesignParams(x, rng.randint(1, 2), rng.randint(1, 2)))
    return out


@dataclass
class RunSummary:
    params: DesignParams
    strategy: str
    t_bits: int
    load: Fraction
    r: Fraction
    per_round_count: list
    per_round_bits: list
    per_round_units: list
    round_sizes: list
    audit_ok: bool
    missing: int
    corrupt: int
    redundant: int


def summarize_run(design, strategy="default", seed=0, coeff_seed=0, sender_policy="lowest") -> RunSummary:
    p = design.params
    mapout = run_map(design, seed=seed, strategy=strategy)
    delivered, ledger = run_shuffle(design, mapout, strategy, coeff_seed, sender_policy)
    audit = audit_delivery(design, mapout, delivered)
    return RunSummary(
        params=p,
        strategy=strategy,
        t_bits=mapout.t_bits,
        load=ledger.normalized_load,
        r=Fraction(mapout.total_computed, p.Q * p.N),
        per_round_count=ledger.per_round_count,
        per_round_bits=ledger.per_round_bits,
        per_round_units=ledger.per_round_units,
        round_sizes=[ledger.round_sizes(g) for g in range(1, p.s + 1)],
        audit_ok=audit.ok,
        missing=len(audit.missing),
        corrupt=len(audit.corrupt),
        redundant=delivered.redundant,
    )


def summarize(params, strategy="default", **kw) -> RunSummary:
    return summarize_run(build_design(params), strategy, **kw)


@pytest.fixture(scope="session")
def sample_configs():
    return random_configs()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
