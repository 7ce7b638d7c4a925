from setuptools import find_packages, setup

setup(
    name="v2vsim",
    version="0.1.0",
    description="Discrete-event simulator and attack harness for vehicle-to-vehicle authentication schemes",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    license="MIT",
    keywords=["v2v", "vanet", "authentication", "simulation", "dolev-yao", "puf", "mitm"],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Security :: Cryptography",
        "Topic :: Scientific/Engineering",
    ],
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    package_data={"v2vsim": ["scenarios/*.scn"]},
    python_requires=">=3.10",
    install_requires=[
        "pydantic>=2.11.7",
        "psutil>=7.0.0",
        "filelock>=3.18.0",
        "cryptography>=42.0.0",
        "numpy>=1.26.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
            "hypothesis>=6.100.0",
            "black>=23.0.0",
            "isort>=5.12.0",
            "flake8>=6.0.0",
            "mypy>=1.0.0",
            "pre-commit>=3.0.0",
        ],
        "test": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
            "hypothesis>=6.100.0",
        ],
    },
    entry_points={"console_scripts": ["v2vsim = v2vsim.sim.cli:main"]},
    include_package_data=True,
)
