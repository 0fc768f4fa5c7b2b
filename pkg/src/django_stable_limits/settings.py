from copy import deepcopy

from django.conf import settings

DEFAULTS: dict[str, object] = {
    # Output
    "OUTPUT_DIR": None,
    # Parallelism
    "WORKERS": 1,
    "BATCH_SIZE": 64,
    # Simulation
    "NUM_PATHS": 4000,
    "FINE_STEP": 0.05,
    "COARSE_RATIO": 0.01,
    "DISTANCE_RATIO": 0.02,
    "SWITCH_RADIUS": None,
    "GRID_MODE": "hybrid",
    "BLOCK_SIZE": 512,
    # Local time
    "LOCAL_TIME_STEP": 1e-4,
    "LOCAL_TIME_EPSILON": None,
    # Verdicts
    "BIAS_BUDGET": 0.01,
    # Quadrature
    "QUAD_EPSABS": 1e-8,
    "QUAD_EPSREL": 1e-6,
    "QUAD_LIMIT": 200,
    # Quasi-Monte-Carlo
    "QMC_POINTS": 4096,
    "QMC_REPLICATES": 8,
    # Test functions
    "TEST_FUNCTIONS": {},
    "TABULATED_FUNCTIONS": {},
}


def get_setting(key: str) -> object:
    """Get a django-stable-limits setting, falling back to defaults."""
    user_settings: dict[str, object] = getattr(settings, "DJANGO_STABLE_LIMITS", {})
    if key in user_settings:
        value = user_settings[key]
        return deepcopy(value) if isinstance(value, (dict, list, set)) else value
    if key in DEFAULTS:
        value = DEFAULTS[key]
        return deepcopy(value) if isinstance(value, (dict, list, set)) else value
    msg = f"Unknown django-stable-limits setting: {key}"
    raise KeyError(msg)
