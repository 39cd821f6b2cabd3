from setuptools import setup, find_packages
from os import path

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

install_requires = [
    'numpy',
    'scipy',
    'cvxpy',
    'PyYAML',
]

tests_require = [
    'pytest',
]

setup(
    name='cowbound',
    version='0.0.1',
    description='Sequential-attack simulation and key-rate upper bounds for '
                'coherent-one-way QKD',
    long_description=long_description,
    license='MIT',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3.8',
        'Topic :: Scientific/Engineering :: Physics',
    ],
    keywords='qkd cow sequential-attack monte-carlo',
    packages=find_packages(exclude=('test', 'examples', 'examples.*')),
    install_requires=install_requires,
    tests_require=tests_require,
    extras_require={
        'test': tests_require,
    },
    entry_points={
        'console_scripts': ['cowbound=cowbound:main'],
    },
)
