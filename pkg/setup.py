import pathlib
from setuptools import setup, find_packages

# The directory containing this file
HERE = pathlib.Path(__file__).parent

# The text of the README file
README = (HERE / "README.md").read_text()

setup(
    name="deflation-lab",
    version="0.1.0",
    description="Deflation, coarse correction and adapted deflation preconditioners: "
    "spectral bounds under perturbed coarse spaces and inexact coarse solves.",
    long_description=README,
    long_description_content_type="text/markdown",
    license="GPL",
    classifiers=[
        "License :: OSI Approved :: GNU General Public License v3 (GPLv3)",
        "Programming Language :: Python :: 3",
    ],
    packages=find_packages(exclude=["tests"]),
    include_package_data=True,
    package_data={
        "deflation_lab": ["utils/templates/*.json", "utils/config/schema.json"],
    },
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "tqdm",
        "pyyaml",
        "jsonschema",
        "tabulate",
    ],
    entry_points={"console_scripts": ["deflation-lab=deflation_lab.cli:main"]},
    python_requires=">=3.8",
)
