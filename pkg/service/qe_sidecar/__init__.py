from .app import create_app
from .scoring import (
    COMETKIWI_SCALE,
    METRICX_SCALE,
    FakeScorer,
    Scale,
    ServiceConfig,
    family_scale,
    load_scorer,
)

__all__ = [
    "COMETKIWI_SCALE",
    "METRICX_SCALE",
    "FakeScorer",
    "Scale",
    "ServiceConfig",
    "create_app",
    "family_scale",
    "load_scorer",
]
