# -*- coding: utf-8 -*-

import ast
import re
import sys

from setuptools import setup


_version_re = re.compile(r"__version__\s+=\s+(.*)")
with open("propclass/__init__.py", "rb") as f:
    version = str(ast.literal_eval(_version_re.search(f.read().decode("utf-8")).group(1)))

try:
    with open("README.rst", "r") as f:
        readme = f.read()
    with open("CHANGELOG.rst", "r") as f:
        changelog = f.read()
except IOError:
    readme = ""
    changelog = ""

if sys.version_info[:2] < (3, 8):
    raise RuntimeError("This package requires Python 3.8+")

setup(
    name="propclass",
    author="Aaron Toth",
    version=version,
    description="Hierarchical interdisciplinary research proposal classification on a from-scratch numpy autograd",
    long_description=readme + "\n\n" + changelog,
    extras_require={"fast": ["python-rapidjson"]},
    test_suite="tests",
    include_package_data=True,
    packages=["propclass", "propclass.tensorcore"],
    license="Apache 2.0",
    python_requires=">=3.8",
    install_requires=["click", "pytz", "arrow", "numpy", "networkx", "scikit-learn", "pandas"],
    setup_requires=["wheel"],
    entry_points="""
        [console_scripts]
        propc=propclass.cli:main
    """,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Natural Language :: English",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
