"""Selection from read-only memory under a metered bit budget."""

__version__ = "0.1.0"

__all__ = [
    "baseline",
    "bench",
    "bitvector",
    "cli",
    "pruning",
    "readonly",
    "selection",
    "structs",
    "wavelet_stack",
    "workspace",
]
