""" PIP INSTALLATION INFO """
from setuptools import setup

setup(
    name='hbnpuf',
    version='0.1.0',
    packages=['hbnpuf', 'hbnpuf.analysis'],
    license='LICENSE.txt',
    description='Hybrid Boolean Network PUF simulation and analysis lab',
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.5',
        'PyDispatcher>=2.0.5',
    ],
    entry_points={
        'console_scripts': ['hbnpuf=hbnpuf.cli:main'],
    },
)
