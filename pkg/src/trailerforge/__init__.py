"""trailerforge: compile a learning pathway into a deterministic trailer storyboard."""

from .adapters import AdapterRegistry, Cassette, response_schema_errors
from .composition import Storyboard, assemble_storyboard, emit_renderplan, emit_srt
from .corpus import compute_stats, load_manifest
from .errors import TrailerForgeError
from .pipeline import CompileResult, PipelineConfig, compile_pathway, write_outputs
from .selection import FilterConfig, select_outline
from .templates import load_template

__version__ = "0.1.0"

__all__ = [
    "AdapterRegistry",
    "Cassette",
    "CompileResult",
    "FilterConfig",
    "PipelineConfig",
    "Storyboard",
    "TrailerForgeError",
    "__version__",
    "assemble_storyboard",
    "compile_pathway",
    "compute_stats",
    "emit_renderplan",
    "emit_srt",
    "load_manifest",
    "load_template",
    "response_schema_errors",
    "select_outline",
    "write_outputs",
]
