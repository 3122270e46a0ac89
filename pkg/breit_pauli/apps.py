from django.apps import AppConfig


class BreitPauliConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'breit_pauli'
