"""Wave-operator dynamics on Hilbert-space and phase-space backends."""

__version__ = "0.1.0"
