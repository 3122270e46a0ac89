"""
Django settings for the femto_pauli project.

The project hosts a semi-relativistic Pauli mean-field simulator. Django provides
the command-line surface (management commands), configuration, the run registry
model and the test runner. Every tunable below can be overridden from the
environment or a `.env` file.
"""

from pathlib import Path
import os
from dotenv import load_dotenv
from scipy import constants as codata
from utils.logger import Logger

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

VERSION = '1.0.0'

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-femto-pauli-local-only')

DEBUG = os.getenv('DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []

# Logger Config
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
Logger.setup_logging(LOG_LEVEL)

# Numerics
FFT_WORKERS = int(os.getenv('FFT_WORKERS', '1'))
SPEED_OF_LIGHT_AU = float(os.getenv('SPEED_OF_LIGHT_AU', str(1.0 / codata.fine_structure)))

# Propagation
RK4_STABILITY_CONSTANT = float(os.getenv('RK4_STABILITY_CONSTANT', '0.2'))
NORM_DRIFT_ABORT = float(os.getenv('NORM_DRIFT_ABORT', '1e-4'))
BOUNDARY_DENSITY_WARNING = float(os.getenv('BOUNDARY_DENSITY_WARNING', '1e-8'))

# Breit-Pauli oracle
BP_DIRECT_SUM_MAX_POINTS = int(os.getenv('BP_DIRECT_SUM_MAX_POINTS', str(24 ** 3)))
BP_RELATIVE_TOLERANCE = float(os.getenv('BP_RELATIVE_TOLERANCE', '1e-3'))
BP_SCALE_FLOOR = float(os.getenv('BP_SCALE_FLOOR', '1e-12'))
BP_SOFTENING_SENSITIVITY = float(os.getenv('BP_SOFTENING_SENSITIVITY', '1e-2'))

# Outputs
OUTPUT_DIR = Path(os.getenv('OUTPUT_DIR', str(BASE_DIR / 'runs')))

# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'core',
    'sources',
    'field_solvers',
    'hamiltonian',
    'propagator',
    'breit_pauli',
    'analysis',
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/5.1/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.getenv('DB_NAME', str(BASE_DIR / 'femto_pauli.sqlite3')),
    }
}

# Internationalization
# https://docs.djangoproject.com/en/5.1/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

# Default primary key field type
# https://docs.djangoproject.com/en/5.1/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'
