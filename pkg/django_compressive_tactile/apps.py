from django.apps import AppConfig


class CompressiveTactileConfig(AppConfig):
    name = "django_compressive_tactile"
    verbose_name = "Compressive tactile sampling"
