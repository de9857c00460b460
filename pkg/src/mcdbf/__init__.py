"""Online multiclass learning from diluted bandit feedback."""

__version__ = "0.1.0"

from .core import Example, predict_top1, predict_top_m, score  # noqa: E402
from .data import Stream, SynthConfig, generate_separable, load_features  # noqa: E402
from .learners import MCDBF, MCSLP, LabelOracle, Perceptron, run_online  # noqa: E402

__all__ = [
    "Example",
    "LabelOracle",
    "MCDBF",
    "MCSLP",
    "Perceptron",
    "Stream",
    "SynthConfig",
    "generate_separable",
    "load_features",
    "predict_top1",
    "predict_top_m",
    "run_online",
    "score",
]
