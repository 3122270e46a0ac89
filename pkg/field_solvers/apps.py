from django.apps import AppConfig


class FieldSolversConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'field_solvers'
