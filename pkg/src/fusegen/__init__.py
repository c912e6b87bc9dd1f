"""fusegen: compile physics descriptions into embedded C state estimators.

The package parses a small declarative description language for physical
systems (invariants over signal-typed quantities with Gaussian noise
annotations), checks it dimensionally, classifies variables into state /
measurement / extra roles, derives process and measurement models with
either symbolic or reverse-accumulation derivatives, and emits
self-contained C99 filter sources plus a simulation harness for
validating them.
"""

from .ast import Description
from .codegen import GeneratedSource, GenOptions, dump_ssa, generate
from .diagnostics import Diagnostic, SourceError, Span
from .model import StateSpaceModel, build_model, dump_model
from .parser import parse_description, parse_only
from .reference import ReferenceFilter, run_filter
from .signals import build_signal_table, load_description, load_description_text
from .simulate import simulate_diff_drive, simulate_pendulum, stroll_segments

__version__ = "0.1.0"

__all__ = [
    "Description",
    "Diagnostic",
    "GenOptions",
    "GeneratedSource",
    "ReferenceFilter",
    "SourceError",
    "Span",
    "StateSpaceModel",
    "__version__",
    "build_model",
    "build_signal_table",
    "dump_model",
    "dump_ssa",
    "generate",
    "load_description",
    "load_description_text",
    "parse_description",
    "parse_only",
    "run_filter",
    "simulate_diff_drive",
    "simulate_pendulum",
    "stroll_segments",
]
