import setuptools

with open('requirements.txt') as f:
    requirements = f.read().splitlines()

with open('README.md') as fh:
    long_description = fh.read()

setuptools.setup(
    name="sparse-meter",
    use_scm_version=True,
    setup_requires=['setuptools_scm'],
    author="sparse-meter developers",
    description="Privacy-preserving sparse release of smart meter data by learned "
    "non-uniform down-sampling.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests/*", "docs/*", "examples/*"]),
    include_package_data=True,
    python_requires=">=3.8",
    install_requires=requirements,
    entry_points={"console_scripts": ["sparse-meter = sparse_meter.cli:main"]},
    classifiers=[
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: Implementation :: CPython",
        "Operating System :: OS Independent"
    ],
)
