# Copyright 2021 The SphMIMO Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Command-line entry point.

  sphmimo <command> --config=sys1.json [--out=DIR] [--seed=N] [--sigma-db=X]
          [--threads=N] [--beamformer=max_di|max_wng] [--reflection=I]
          [--quiet]

Commands: ``ofr``, ``match``, ``rir``, ``beampattern``, ``table``,
``validate``. Exit status is 0 on success, 1 for configuration errors and 2
for numerical failures.

Long flag names may be written with hyphens or underscores
(``--sigma-db`` and ``--sigma_db`` are the same flag).
"""

import sys

from absl import app
from absl import flags
from absl import logging

from . import commands
from . import errors
from . import run_config

FLAGS = flags.FLAGS

flags.DEFINE_string('config', None, 'Path to the JSON run configuration.')
flags.DEFINE_string('out', None, 'Output directory; overrides output_dir.')
flags.DEFINE_integer('seed', None, 'Random seed; overrides error.seed.')
flags.DEFINE_float('sigma_db', None,
                   'OFR threshold in dB; overrides analysis.sigma_db.')
flags.DEFINE_integer('threads', None,
                     'Worker threads for bin-parallel stages (default: all '
                     'cores). Results do not depend on it.')
flags.DEFINE_enum('beamformer', None, ['max_di', 'max_wng'],
                  'Beamformer; overrides analysis.beamformer.')
flags.DEFINE_integer('reflection', None,
                     'Look reflection index (0 is the direct path); '
                     'overrides analysis.look_reflection.')
flags.DEFINE_bool('quiet', False, 'Only log warnings and errors.')

EXIT_CONFIG_ERROR = 1
EXIT_NUMERICAL_ERROR = 2

_COMMANDS = ('ofr', 'match', 'rir', 'beampattern', 'table', 'validate')


def run(command: str) -> int:
  """Runs ``command`` with the parsed flags and returns the exit status."""
  if command not in _COMMANDS:
    logging.error('Unknown command %r; expected one of %s.', command,
                  ', '.join(_COMMANDS))
    return EXIT_CONFIG_ERROR
  if not FLAGS.config:
    logging.error('--config is required.')
    return EXIT_CONFIG_ERROR
  overrides = {'error.seed': FLAGS.seed, 'analysis.sigma_db': FLAGS.sigma_db,
               'output_dir': FLAGS.out}
  try:
    config = run_config.load_config(FLAGS.config, overrides)
    if command == 'validate':
      commands.cmd_validate(config)
    elif command == 'ofr':
      commands.cmd_ofr(config, threads=FLAGS.threads)
    elif command == 'match':
      commands.cmd_match(config, threads=FLAGS.threads)
    elif command == 'table':
      commands.cmd_table(config)
    elif command == 'beampattern':
      commands.cmd_beampattern(config, FLAGS.beamformer, FLAGS.reflection)
    else:
      commands.cmd_rir(config, FLAGS.beamformer, FLAGS.reflection,
                       threads=FLAGS.threads)
  except errors.NumericalError as e:
    logging.error('%s', e)
    return EXIT_NUMERICAL_ERROR
  except errors.SphMimoError as e:
    logging.error('%s', e)
    return EXIT_CONFIG_ERROR
  return 0


def main(argv):
  if len(argv) != 2:
    raise app.UsageError(f'Expected one command out of {_COMMANDS}.')
  if FLAGS.quiet:
    logging.set_verbosity(logging.WARNING)
  else:
    logging.set_verbosity(logging.INFO)
  sys.exit(run(argv[1]))


def parse_flags(argv):
  """Parses absl flags, reading hyphens in long flag names as underscores."""
  args = []
  for i, arg in enumerate(argv):
    if arg == '--':
      args.extend(argv[i:])
      break
    if i > 0 and arg.startswith('--'):
      name, sep, value = arg[2:].partition('=')
      arg = '--' + name.replace('-', '_') + sep + value
    args.append(arg)
  return FLAGS(args)


def console_main():
  app.run(main, flags_parser=parse_flags)


if __name__ == '__main__':
  console_main()
