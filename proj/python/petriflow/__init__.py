# Copyright (c) 2026 Petriflow Contributors
# SPDX-License-Identifier: Apache-2.0
"""Petri-net runtime for DAG-structured reasoning traces.

The heavy lifting lives in the compiled extension; this package re-exports
its surface. Traces and plans travel as text in the line-oriented format,
reports and metrics as plain dicts.
"""

from ._core import (
    Handle,
    PetriflowError,
    RadixStore,
    canonicalize_trace,
    check_trace,
    compile_chains,
    mask_binary,
    mask_export,
    parse_trace,
    replay_trace,
    run_scripted,
    run_synthetic,
    __version__,
)

__all__ = [
    "Handle",
    "PetriflowError",
    "RadixStore",
    "canonicalize_trace",
    "check_trace",
    "compile_chains",
    "mask_binary",
    "mask_export",
    "parse_trace",
    "replay_trace",
    "run_scripted",
    "run_synthetic",
    "__version__",
]
