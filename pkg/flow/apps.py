from django.apps import AppConfig


class CurveFlowConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'flow'
    verbose_name = 'Curve shortening flow'
