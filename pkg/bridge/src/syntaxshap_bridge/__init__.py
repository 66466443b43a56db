"""Companion service for the attribution engine.

Serves a pretrained causal LM behind POST /v1/score and GET /v1/meta, and
exports dependency parses as CoNLL-U for the engine to consume. The engine
is deliberately not imported anywhere here; the HTTP wire format and the
CoNLL-U files are the only shared surface.
"""

from .config import ServerConfig, TINY_MODEL
from .errors import BridgeStartupError
from .parse import ExportStats, ParsedWord, SpacyParser, export_parses
from .scorer import CausalLMScorer
from .server import create_app

__version__ = "0.1.0"
