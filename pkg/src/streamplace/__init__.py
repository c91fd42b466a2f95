"""Operator placement for in-network stream processing on purchased platforms."""
from .constraints import ViolationReport, is_feasible
from .download import downgrade_all, select_servers_intelligent, select_servers_random
from .exact import solve_exact
from .ilp import export_ilp_constr, export_ilp_nonconstr
from .instances import GeneratorConfig, default_catalog, generate, three_partition_instance
from .model import (
    ApplicationTree, BasicObject, Instance, Mapping, Operator, PlatformSpec, ProcessorClass, ServerSpec,
    Solution, Variant, build_tree, derive_demands, object_rate,
)
from .pipeline import solve_heuristic
from .placement import HEURISTICS, PurchaseLedger, place

__version__ = "0.1.0"

__all__ = [
    "ApplicationTree", "BasicObject", "GeneratorConfig", "HEURISTICS", "Instance", "Mapping", "Operator",
    "PlatformSpec", "ProcessorClass", "PurchaseLedger", "ServerSpec", "Solution", "Variant", "ViolationReport",
    "build_tree", "default_catalog", "derive_demands", "downgrade_all", "export_ilp_constr",
    "export_ilp_nonconstr", "generate", "is_feasible", "object_rate", "place", "select_servers_intelligent",
    "select_servers_random", "solve_exact", "solve_heuristic", "three_partition_instance",
]
