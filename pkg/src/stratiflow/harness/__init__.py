"""Configuration, initial data, persistence, run driver and CLI."""
from .config import PRESETS, RunConfig, load_config, preset
from .initial import generate_initial_data
from .io import Checkpoint, load_checkpoint, save_checkpoint
from .runner import RunResult, fit_decay, resume, run

__all__ = ["PRESETS", "RunConfig", "load_config", "preset", "generate_initial_data", "Checkpoint",
           "load_checkpoint", "save_checkpoint", "RunResult", "fit_decay", "resume", "run"]
