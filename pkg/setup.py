import setuptools

with open("README.md", "r", encoding="utf-8") as f:
    long_description = f.read()


setuptools.setup(
    name="channel_dimension_certifier",
    version="0.1.0",
    author="Channel Dimension Certifier developers",
    description="Certify the Schmidt number of simulated multi-mode fiber channels",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(include=["channel_dimension_certifier"]),
    package_data={"channel_dimension_certifier": ["schemas/*/*.xsd"]},
    install_requires=[
        "lxml",
        "numpy",
        "scipy",
        "pandas",
        "matplotlib",
    ],
    extras_require={
        "dev": [
            "pytest>=6.2",
            "pytest-mock",
            "pytest-xdist",
            "pytest-cov",
            "flake8",
            "rope",
            "black",
        ]
    },
    python_requires=">=3.7",
    entry_points={
        "console_scripts": ["channel_dimension_certifier=channel_dimension_certifier:main"]
    },
)
