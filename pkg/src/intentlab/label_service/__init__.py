"""Bulk-labeling service: session state machine and HTTP API."""

from .session import (
    LabelAction,
    LabelSession,
    SessionStore,
    import_labeled,
    points_in_polygon,
    polygon_area,
    validate_polygon,
)

__all__ = [
    "LabelAction",
    "LabelSession",
    "SessionStore",
    "import_labeled",
    "points_in_polygon",
    "polygon_area",
    "validate_polygon",
]
