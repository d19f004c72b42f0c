"""Agent-based simulation of emotional forum discussions and their statistics."""
from .engine import SimulationOutput, run_simulation, simulate_thread
from .errors import DataError, FitError, ForumsimError, LogFormatError, ParamError
from .model import AgentCategory, ModelParams, Post, Valence
from .records import ForumRecord, RecordSet

__version__ = "0.1.0"

__all__ = [
    "AgentCategory", "DataError", "FitError", "ForumRecord", "ForumsimError", "LogFormatError",
    "ModelParams", "ParamError", "Post", "RecordSet", "SimulationOutput", "Valence",
    "run_simulation", "simulate_thread", "__version__",
]
