from django.apps import AppConfig


class RampsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'ramps'
    verbose_name = 'Ramp regularization'
