import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('SECRET_KEY', 'extlab-dev-_k9v!2m@q3#r8w+d0t^s7e6x1c4p5n')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('DEBUG', 'True').lower() == 'true'

ALLOWED_HOSTS = ['localhost', '127.0.0.1']


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    'whitenoise.runserver_nostatic',
    'django_extensions',
    'django_filters',
    'django_tables2',

    'geometry.apps.GeometryConfig',
    'flow.apps.CurveFlowConfig',
    'ramps.apps.RampsConfig',
    'comparison.apps.ComparisonConfig',
    'harness.apps.HarnessConfig',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'whitenoise.middleware.WhiteNoiseMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'ExtinctionLab.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'ExtinctionLab.wsgi.application'


# Database
# Run records go to DATABASE_URL when set, local SQLite otherwise.
if os.environ.get('DATABASE_URL'):
    import dj_database_url
    DATABASES = {
        'default': dj_database_url.parse(os.environ.get('DATABASE_URL'))
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': os.path.join(BASE_DIR, 'db.sqlite3'),
        }
    }


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)

STATIC_URL = 'static/'
STATIC_ROOT = os.path.join(BASE_DIR, 'staticfiles')

STORAGES = {
    'default': {
        'BACKEND': 'django.core.files.storage.FileSystemStorage',
    },
    'staticfiles': {
        'BACKEND': 'whitenoise.storage.CompressedStaticFilesStorage',
    },
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

DJANGO_TABLES2_TEMPLATE = 'django_tables2/semantic.html'

LOGIN_URL = 'admin:login'


# Logging

EXTLAB_LOG_LEVEL = os.environ.get('EXTLAB_LOG_LEVEL', 'WARNING').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': EXTLAB_LOG_LEVEL,
            'propagate': False,
        }
        for app in ('geometry', 'flow', 'ramps', 'comparison', 'harness')
    },
}


# Lab settings
# EXTLAB_OUT overrides the output prefix of every scenario.

EXTLAB = {
    'CFL': 0.2,
    'CURVATURE_CEILING': 1.0e3,
    'AMBIENT_CONSTANT_FACTOR': 10.0,
    'EXTINCTION_FRACTION': 1.0e-2,
    'SNAPSHOT_STRIDE': 0,
    'DEFAULT_JOBS': 1,
    # Wall-clock seconds allowed for the shrinking-circle check.
    'RUNTIME_BUDGET': 10.0,
    'SCENARIO_DIR': BASE_DIR / 'scenarios',
    'OUTPUT_PREFIX': os.environ.get('EXTLAB_OUT', ''),
    'REPORT_DIR': BASE_DIR / 'out' / 'reports',
}
