from setuptools import setup, find_packages

setup(
    name='fdim',
    version='0.1.0',
    packages=find_packages(exclude=['tests', 'tests.*']),
    python_requires='>=3.8',
    install_requires=[
    	'numpy',
    	'scipy',
    	'matplotlib',
    	'tqdm',
    	'more_itertools',
    	'psutil',
    	'pandas',
    	'torch',
    	'torchvision'
    	],
    extras_require={'test': ['pytest>=7']},
    entry_points={'console_scripts': [
    	'fdim=fdim.cli:run',
    	'fdim_sweep=fdim.opt.sweep:run'
    	]}
)
