#!/usr/bin/env python
# -*- coding: utf-8 -*-

from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="covol-ldp",
    version="1.0.0",
    author="Your Name",
    author_email="your.email@example.com",
    description="二维跳跃扩散阈值估计量的模拟、速率函数求值与偏差验证",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/yourusername/covol-ldp",
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.8",
    install_requires=[
        "click>=8.0.0",
        "tabulate>=0.8.9",
        "pandas>=1.5.0",
        "numpy>=1.20.0",
        "statsmodels>=0.13.0",
        "scipy>=1.7.0",
        'tomli>=1.1.0; python_version < "3.11"',
    ],
    extras_require={
        "test": ["hypothesis>=6.0.0"],
    },
    entry_points={
        "console_scripts": [
            "covol-ldp=covol_ldp.__main__:main",
        ],
    },
)
