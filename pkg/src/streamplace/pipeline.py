"""Placement heuristic + server selection + downgrade, end to end."""
from __future__ import annotations

from .constraints import is_feasible
from .download import SELECTORS, downgrade_all
from .model import Instance, Solution
from .placement import place


def default_selector(heuristic: str) -> str:
    return "random" if heuristic == "random" else "intelligent"


def solve_heuristic(instance: Instance, heuristic: str, selector: str | None = None,
                    seed: int = 0, downgrade: bool = True) -> Solution:
    """Run one heuristic to completion.

    Raises :class:`~streamplace.placement.HeuristicFailure` or
    :class:`~streamplace.download.SelectionFailure` when a phase fails. A
    mapping that passes both phases but breaks a processor-link constraint
    is returned with ``feasible=False``.
    """
    selector = selector or default_selector(heuristic)
    ledger = place(instance, heuristic, seed)
    if selector == "random":
        mapping = SELECTORS["random"](instance, ledger, seed)
    elif selector == "intelligent":
        mapping = SELECTORS["intelligent"](instance, ledger)
    else:
        raise ValueError(f"unknown selector {selector!r}")
    sol = is_feasible(instance, mapping)
    if sol.feasible and downgrade:
        sol = is_feasible(instance, downgrade_all(instance, mapping))
    return sol
