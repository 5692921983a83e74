from setuptools import find_packages, setup

with open("README.md", "r", encoding="utf-8") as fh:
        long_description = fh.read()

setup(
        name="nearfield-de",
        version="0.1.0",
        description="Near-field multi-source localization with differential evolution and MUSIC baselines",
        long_description=long_description,
        long_description_content_type="text/markdown",
        packages=find_packages(exclude=["tests", "tests.*"]),
        py_modules=["main"],
        install_requires=[
                    "pydantic~=2.10.4",
                    "loguru~=0.7.3",
                    "numpy",
                    "scipy>=1.11",
                    "pandas>=2.1",
        ],
        extras_require={
                    "test": ["pytest~=8.3.5", "pytest-asyncio~=0.25.3"],
        },
        classifiers=[
                    "Development Status :: 3 - Alpha",
                    "Intended Audience :: Science/Research",
                    "Topic :: Scientific/Engineering",
                    "Programming Language :: Python :: 3",
                    "Programming Language :: Python :: 3.12",
                    "Operating System :: OS Independent",
        ],
        python_requires=">=3.12",
        entry_points={
                    "console_scripts": [
                                    "nearfield=main:main",
                    ],
        },
        keywords="near-field localization array signal processing differential evolution music",
)
