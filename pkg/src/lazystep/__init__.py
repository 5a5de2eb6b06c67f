"""An algebraic stepper for a small lazy functional language.

The main entry points are re-exported here; see the submodules for the
rewriting semantics, the machines and the instrumentation pipeline.
"""
from .pipeline import Step, Trace, check_bisimulation, run_instrumented, run_reference
from .syntax import parse, render_text

__all__ = ["Step", "Trace", "check_bisimulation", "parse", "render_text", "run_instrumented", "run_reference"]
__version__ = "0.1.0"
