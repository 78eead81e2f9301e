"""Heterogeneous cascaded coded distributed computing: placement, map, coded shuffle and load accounting."""

from .analysis import communication_load_formula, computation_load, load_formula
from .design import Design, DesignError, DesignParams, build_design
from .mapper import MapOutput, run_map
from .oracle import audit_delivery, count_load_bruteforce, requester_histogram
from .shuffle import ShuffleLedger, Strategy, run_shuffle

__version__ = "0.1.0"

__all__ = [
    "Design", "DesignError", "DesignParams", "MapOutput", "ShuffleLedger", "Strategy",
    "audit_delivery", "build_design", "communication_load_formula", "computation_load",
    "count_load_bruteforce", "load_formula", "requester_histogram", "run_map", "run_shuffle",
]
