"""Semi-supervised intent clustering and interactive bulk-labeling workbench."""

__version__ = "0.1.0"
