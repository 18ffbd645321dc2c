"""Private spectrum-database queries over replicated servers (LP-Chor, LP-Goldberg)."""

from .chor import chor_build_queries, chor_reconstruct, chor_respond
from .client import ServerEndpoint, SessionMetrics, private_fetch
from .goldberg import RecoveryReport, goldberg_build_queries, goldberg_reconstruct, goldberg_respond
from .specdb import DatabaseMatrix, DbGeometry, SpectrumKey, generate_synthetic, inv_index, load_db, save_db

__version__ = "0.1.0"

__all__ = [
    "DatabaseMatrix",
    "DbGeometry",
    "RecoveryReport",
    "ServerEndpoint",
    "SessionMetrics",
    "SpectrumKey",
    "chor_build_queries",
    "chor_reconstruct",
    "chor_respond",
    "generate_synthetic",
    "goldberg_build_queries",
    "goldberg_reconstruct",
    "goldberg_respond",
    "inv_index",
    "load_db",
    "private_fetch",
    "save_db",
]
