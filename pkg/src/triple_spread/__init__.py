"""Triangle decompositions of random 3-graphs: exact oracle, absorber
pipeline and empirical spread / threshold measurements."""
from .core import DenseGraph, Decomposition, Triple, TripleSet, verify_decomposition
from .params import PipelineParams
from .sampling import Seed

__all__ = ["DenseGraph", "Decomposition", "PipelineParams", "Seed", "Triple", "TripleSet", "verify_decomposition"]
__version__ = "0.1.0"
