# Autogenerated by nbdev

d = { 'settings': { 'branch': 'main',
                'doc_baseurl': '/kato-toolkit',
                'doc_host': 'https://kato-toolkit.github.io',
                'git_url': 'https://github.com/kato-toolkit/kato-toolkit',
                'lib_path': 'kato_toolkit'},
  'syms': { 'kato_toolkit.api': { 'kato_toolkit.api.classify_measure': ('api.html#classify_measure', 'kato_toolkit/api.py'),
                                  'kato_toolkit.api.ClassificationBuilder': ('api.html#classificationbuilder', 'kato_toolkit/api.py')},
            'kato_toolkit.cli': { 'kato_toolkit.cli.run': ('cli.html#run', 'kato_toolkit/cli.py'),
                                  'kato_toolkit.cli.report_render': ('cli.html#report_render', 'kato_toolkit/cli.py')}}}
