"""Average Renyi-2 purities of superposed spin-network states via their dual
constrained random Ising models, with isometry diagnostics and an exact
small-Hilbert-space cross-check."""

__version__ = "0.1.0"
