import setuptools
from distutils.util import convert_path

with open("README.md", "r") as fh:
    long_description = fh.read()

main_ns = {}
version_path = convert_path('docs/version')
with open(version_path) as version_file:
    exec(version_file.read(), main_ns)

setuptools.setup(
    name="oscitrace",
    version=main_ns['__version__'],
    author="Tatiana Burek",
    description="heat invariants, eigenvalue asymptotics and trace formulas "
                "for the perturbed harmonic oscillator",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["test", "test.*"]),
    install_requires=[
        "numpy>=1.19",
        "scipy>=1.5",
        "pandas>=1.1",
        "PyYAML>=5.4",
    ],
    extras_require={"test": ["pytest>=6.2"]},
    entry_points={
        "console_scripts": ["oscitrace=oscitrace.cli:main"],
    },
    classifiers=[
         "Programming Language :: Python :: 3",
         "License :: OSI Approved :: Apache Software License",
         "Operating System :: OS Independent",
    ],
    python_requires='>=3.8',
)
