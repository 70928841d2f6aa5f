# Release process setup see:
# https://github.com/pypa/twine
#
# Run this to build the `dist/PACKAGE_NAME-xxx.tar.gz` file
#     rm -rf ./dist && python3 setup.py sdist
#
# Check dist/*
#     python3 -m twine check dist/*
#
# In one command line:
#     rm -rf ./dist && python3 setup.py sdist bdist_wheel && python3 -m twine check dist/*
#

from setuptools import setup

# Usage: python setup.py sdist bdist_wheel

DESCRIPTION = "Django app for adaptive compressive subsampling and reconstruction of tactile sensor arrays."
VERSION = "0.1.0"

setup(
    name="django-compressive-tactile",
    version=VERSION,
    description=DESCRIPTION,
    long_description_content_type='text/markdown',
    long_description=open('README.md').read(),
    license="MIT",
    packages=[
        'django_compressive_tactile',
        'django_compressive_tactile.management',
        'django_compressive_tactile.management.commands',
        'django_compressive_tactile.tests',
    ],
    platforms=["any"],
    keywords=["django", "tactile", "compressive sensing", "sparse coding", "k-svd"],
    classifiers=[
        "Programming Language :: Python :: 3.9",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9",
    install_requires=open('requirements.txt').read(),
    entry_points={
        "console_scripts": ["tactile = django_compressive_tactile.__main__:main"],
    },
)
