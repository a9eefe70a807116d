from configparser import ConfigParser
from pathlib import Path
import setuptools, shlex

# metadata lives in settings.ini
config = ConfigParser(delimiters=['='])
config.read('settings.ini', encoding='utf-8')
cfg = config['DEFAULT']

required = 'version description keywords author author_email lib_name lib_path user license status min_python audience language'.split()
missing = [o for o in required if o not in cfg]
if missing: raise SystemExit(f"settings.ini is missing: {', '.join(missing)}")

statuses = {'1': 'Planning', '2': 'Pre-Alpha', '3': 'Alpha', '4': 'Beta', '5': 'Production/Stable'}
py_versions = '3.9 3.10 3.11 3.12'.split()
supported = py_versions[py_versions.index(cfg['min_python']):]

lib_path = cfg['lib_path']
readme = Path('README.md')

setuptools.setup(
    name = cfg['lib_name'],
    version = cfg['version'],
    description = cfg['description'],
    keywords = cfg['keywords'],
    author = cfg['author'],
    author_email = cfg['author_email'],
    license = 'Apache Software License 2.0' if cfg['license'] == 'apache2' else cfg['license'],
    classifiers = [
        f"Development Status :: {cfg['status']} - {statuses[cfg['status']]}",
        f"Intended Audience :: {cfg['audience']}",
        f"Natural Language :: {cfg['language']}",
        'Topic :: Scientific/Engineering :: Mathematics',
    ] + [f'Programming Language :: Python :: {v}' for v in supported],
    url = cfg['git_url'],
    packages = setuptools.find_packages(include=[lib_path, f'{lib_path}.*']),
    package_data = {lib_path: shlex.split(cfg.get('package_data', ''))},
    include_package_data = True,
    install_requires = shlex.split(cfg.get('requirements', '')),
    extras_require = {'dev': shlex.split(cfg.get('dev_requirements', ''))},
    python_requires = '>=' + cfg['min_python'],
    long_description = readme.read_text(encoding='utf-8') if readme.exists() else cfg['description'],
    long_description_content_type = 'text/markdown',
    zip_safe = False,
    entry_points = {
        'console_scripts': cfg.get('console_scripts', '').split(),
        'nbdev': [f'{lib_path}={lib_path}._modidx:d'],
    },
)
