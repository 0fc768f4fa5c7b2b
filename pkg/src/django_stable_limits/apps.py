from django.apps import AppConfig


class StableLimitsConfig(AppConfig):
    name = "django_stable_limits"
    verbose_name = "Stable Limits"
