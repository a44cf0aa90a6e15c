#!/usr/bin/env python
import os

import setuptools

package_name = 'spinaffinity'
root_dir = os.path.dirname(__file__)
python_dir = os.path.join(root_dir, 'python')

with open(os.path.join(python_dir, 'README.md'), mode='r', encoding='utf-8') as f:
    long_description = f.read()


def _no_guess_dev_version(version):
    if version.exact:
        return version.format_with("{tag}")
    else:
        return version.format_with("{tag}.post1.dev{distance}")


setuptools.setup(
    name=package_name,

    # Use setuptools_scm to determine version from git tags
    use_scm_version={
        "relative_to": __file__,
        "version_scheme": _no_guess_dev_version,
        "local_scheme": "no-local-version",
        "parentdir_prefix_version": package_name + "-",
        "fallback_version": "0.0.0",
    },
    description='Protein-ligand binding affinity from a graph transformer and a vdW energy head',
    long_description=long_description,
    long_description_content_type='text/markdown',
    license='Apache License 2.0',
    python_requires='>=3.6',
    packages=setuptools.find_packages('python', exclude=['tests']),
    package_dir={
        '': 'python',
    },
    package_data={
        'spinaffinity': ['data/*.json'],
    },
    setup_requires=[
        "setuptools_scm>=4.1.2",
    ],
    install_requires=[
        "numpy>=1.17.0",
        "scipy>=1.4.0",
        "pandas>=1.0.0",
        'six',
    ],
    extras_require={
        'test': [
            'pytest>=6.1.2',
            'pytest-timeout>=1.4.2',
        ],
    },
    entry_points={
        'console_scripts': [
            'spin-affinity=spinaffinity.tool.spin:main',
        ],
    },
)
