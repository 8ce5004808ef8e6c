"""Active learning of model preconditions for planning with inaccurate dynamics models."""

__version__ = "0.1.0"
