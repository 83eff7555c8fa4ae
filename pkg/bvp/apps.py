from django.apps import AppConfig


class BvpConfig(AppConfig):
    name = "bvp"
    verbose_name = "Singular fractional boundary value problems"
