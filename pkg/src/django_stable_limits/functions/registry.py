from __future__ import annotations

from ..exceptions import FunctionNotFound
from ..settings import get_setting
from .base import BaseTestFunction
from .tabulated import Tabulated

DEFAULT_TEST_FUNCTIONS: dict[str, str] = {
    "gauss": "django_stable_limits.functions.builtin.Gauss",
    "gauss_deriv": "django_stable_limits.functions.builtin.GaussDerivative",
    "dog": "django_stable_limits.functions.builtin.DifferenceOfGaussians",
    "hat": "django_stable_limits.functions.builtin.HatPair",
    "zero": "django_stable_limits.functions.builtin.ZeroFunction",
}


def _import_function(dotted_path: str) -> type[BaseTestFunction]:
    module_path, class_name = dotted_path.rsplit(".", 1)
    import importlib

    module = importlib.import_module(module_path)
    return getattr(module, class_name)


def available_test_functions() -> list[str]:
    """All ids that `get_test_function` can resolve, sorted."""
    overrides: dict[str, str] = get_setting("TEST_FUNCTIONS")  # type: ignore[assignment]
    tabulated: dict[str, str] = get_setting("TABULATED_FUNCTIONS")  # type: ignore[assignment]
    return sorted({*DEFAULT_TEST_FUNCTIONS, *overrides, *tabulated})


def get_test_function(f_id: str) -> BaseTestFunction:
    """Get a test function instance for the given id."""
    # Dotted-path overrides win over tabulated files, which win over built-ins
    overrides: dict[str, str] = get_setting("TEST_FUNCTIONS")  # type: ignore[assignment]
    if f_id in overrides:
        function = _import_function(overrides[f_id])()
        function.f_id = f_id
        return function

    tabulated: dict[str, str] = get_setting("TABULATED_FUNCTIONS")  # type: ignore[assignment]
    if f_id in tabulated:
        return Tabulated.from_file(tabulated[f_id], f_id=f_id)

    if f_id not in DEFAULT_TEST_FUNCTIONS:
        raise FunctionNotFound(f_id, available_test_functions())
    return _import_function(DEFAULT_TEST_FUNCTIONS[f_id])()
