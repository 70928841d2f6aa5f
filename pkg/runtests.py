import sys

import django
from django.conf import settings
from django.test.utils import get_runner

if not settings.configured:
    settings.configure(
        DATABASES={},
        INSTALLED_APPS=[
            "django_compressive_tactile",
        ],
        USE_TZ=True,
        # Tests can override library defaults with @override_settings
    )

django.setup()

if __name__ == "__main__":
    TestRunner = get_runner(settings)
    test_runner = TestRunner()
    labels = sys.argv[1:] or ["django_compressive_tactile"]
    failures = test_runner.run_tests(labels)
    sys.exit(bool(failures))
