import django
from django.conf import settings

# Mirror runtests.py so the suite can also be collected by pytest.
if not settings.configured:
    settings.configure(
        DATABASES={},
        INSTALLED_APPS=[
            "django_compressive_tactile",
        ],
        USE_TZ=True,
    )

django.setup()
