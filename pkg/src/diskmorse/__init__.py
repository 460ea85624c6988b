"""Critical points and topology of configuration spaces of hard disks in a square."""
from .bonds import BondNetwork, check_balance, classify_index, extract_bonds
from .census import (
    CampaignSpec,
    Census,
    CriticalType,
    expand_orbit,
    filter_nondegenerate,
    neb_saddles,
    run_campaign,
)
from .core import Configuration, SymmetryClassKey, apply_symmetry, canonicalize, orbit_size, preliminary_radius
from .energy import EnergyParams, energy, evaluate, gradient, hessian
from .estimators import CriticalPointCensus
from .harden import HardenedPoint, harden, harden_critical, verify_hard_critical
from .morse import betti_table, build_dendrogram, render_report
from .optimize import DescentSettings, cg_pr_minimize_F, steepest_descent_E
from .saddle import descend_from_saddle, neb

__version__ = "0.1.0"

__all__ = [
    "BondNetwork",
    "CampaignSpec",
    "Census",
    "Configuration",
    "CriticalPointCensus",
    "CriticalType",
    "DescentSettings",
    "EnergyParams",
    "HardenedPoint",
    "SymmetryClassKey",
    "apply_symmetry",
    "betti_table",
    "build_dendrogram",
    "canonicalize",
    "cg_pr_minimize_F",
    "check_balance",
    "classify_index",
    "descend_from_saddle",
    "energy",
    "evaluate",
    "expand_orbit",
    "extract_bonds",
    "filter_nondegenerate",
    "gradient",
    "harden",
    "harden_critical",
    "hessian",
    "neb",
    "neb_saddles",
    "orbit_size",
    "preliminary_radius",
    "render_report",
    "run_campaign",
    "steepest_descent_E",
    "verify_hard_critical",
]
