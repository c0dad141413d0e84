#!/usr/bin/env python3
"""
CachePilot 安装脚本
"""
from setuptools import setup, find_packages

with open("cachepilot/README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("cachepilot/requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line.strip() for line in fh if line.strip() and not line.startswith("#")]

setup(
    name="cachepilot",
    version="1.0.0",
    author="CachePilot",
    author_email="",
    description="多租户缓存容量学习型管理实验台：KS分布估计、命中率回归、容量调整与共享池预算",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require={
        "test": ["pytest>=7.4.0"],
    },
    entry_points={
        "console_scripts": [
            "cachepilot=cachepilot.main:main",
        ],
    },
    include_package_data=True,
    package_data={
        "cachepilot": ["*.md", "*.txt"],
    },
)
