"""Set-sharing analysis of logic programs with environment trimming and clause reassociation."""

from .share import Sharing, ShareDomain
from .clique import CliqueSharing, CliqueDomain
from .solver import AnalysisResult, analyze
from .syntax import parse_program, program_to_str
from .reassoc import optimal_plan, transform_program

__all__ = [
    "Sharing",
    "ShareDomain",
    "CliqueSharing",
    "CliqueDomain",
    "AnalysisResult",
    "analyze",
    "parse_program",
    "program_to_str",
    "optimal_plan",
    "transform_program",
]

__version__ = "0.1.0"
