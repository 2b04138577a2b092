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

"""Writers for the CSV, JSON, WAV and msgpack result files.

Every file is written to a temporary name first and renamed into place, so a
crashed run never leaves a truncated result behind. Number formatting is
fixed, which makes identical results produce byte-identical files.
"""

import io
import json
import os
from typing import Any, Dict, Optional, Sequence

from absl import logging
import numpy as np
import soundfile

from . import analysis
from . import room
from . import serialization
from . import sh

# Dynamic range of exported beampatterns, in dB below the peak.
PATTERN_DYNAMIC_RANGE_DB = 30.0

_FLOAT_FORMAT = '%.12e'

ERROR_CURVES_CSV = 'error_curves.csv'
ERROR_CURVES_SNAPSHOT = 'error_curves.msgpack'
OFR_JSON = 'ofr.json'
MATCH_JSON = 'match.json'
REFLECTIONS_CSV = 'reflections.csv'
RIR_WAV = 'rir.wav'
RIR_CSV = 'rir.csv'
UPSILON_CSV = 'upsilon.csv'
BEAMPATTERN_CSV = 'beampattern_{}.csv'
BEAMPATTERN_JSON = 'beampattern_summary.json'


def _write_atomic(path: str, data: bytes):
  directory = os.path.dirname(path)
  if directory:
    os.makedirs(directory, exist_ok=True)
  tmp_path = f'{path}.tmp'
  with open(tmp_path, 'wb') as fp:
    fp.write(data)
  os.replace(tmp_path, path)
  logging.info('Wrote %s (%d bytes).', path, len(data))


def write_csv(path: str, header: Sequence[str], columns: Sequence[Any],
              fmt: Optional[Sequence[str]] = None):
  """Writes equally long columns under a one-line header."""
  table = np.column_stack([np.asarray(c, dtype=np.float64) for c in columns])
  buffer = io.StringIO()
  np.savetxt(buffer, table, fmt=fmt or _FLOAT_FORMAT, delimiter=',',
             header=','.join(header), comments='')
  _write_atomic(path, buffer.getvalue().encode('utf-8'))


def write_json(path: str, document: Dict[str, Any]):
  text = json.dumps(document, sort_keys=True, indent=2, allow_nan=False)
  _write_atomic(path, (text + '\n').encode('utf-8'))


def write_wav(path: str, signal: np.ndarray, fs: float):
  """Writes a mono 32-bit float WAV file."""
  buffer = io.BytesIO()
  soundfile.write(buffer, np.asarray(signal, dtype=np.float32), int(fs),
                  subtype='FLOAT', format='WAV')
  _write_atomic(path, buffer.getvalue())


def write_error_curves(path: str, curves: analysis.ErrorCurves):
  header = ['f_hz'] + [f'{name}_db' for name in analysis.CURVE_NAMES]
  columns = [curves.frequencies] + [curves.in_db(name)
                                    for name in analysis.CURVE_NAMES]
  write_csv(path, header, columns)


def save_error_curves(path: str, curves: analysis.ErrorCurves):
  _write_atomic(path, serialization.to_bytes(curves))


def load_error_curves(path: str) -> analysis.ErrorCurves:
  """Restores a snapshot written by `save_error_curves`."""
  with open(path, 'rb') as fp:
    data = fp.read()
  state = serialization.msgpack_restore(data)
  template = analysis.ErrorCurves.empty(len(state['frequencies']))
  return serialization.from_state_dict(template, state)


def write_reflection_table(path: str, paths: room.ReflectionPaths):
  dor_theta, dor_phi = paths.dor.to_degrees()
  doa_theta, doa_phi = paths.doa.to_degrees()
  header = ['idx', 'td_s', 'dor_theta_deg', 'dor_phi_deg', 'doa_theta_deg',
            'doa_phi_deg', 'amplitude']
  columns = [np.arange(len(paths)), paths.td, dor_theta,
             np.mod(dor_phi, 360.0), doa_theta, np.mod(doa_phi, 360.0),
             paths.amplitude]
  write_csv(path, header, columns, fmt=['%d'] + [_FLOAT_FORMAT] * 6)


def write_rir(wav_path: str, csv_path: str, rir: np.ndarray, fs: float):
  write_wav(wav_path, rir, fs)
  t = np.arange(rir.size) / fs
  write_csv(csv_path, ['t_s', 'amplitude'], [t, rir])


def write_upsilon(path: str, frequencies: np.ndarray, upsilon: np.ndarray):
  """``f_hz, upsilon_db``; undefined bins are written as ``nan``."""
  with np.errstate(divide='ignore', invalid='ignore'):
    upsilon_db = np.where(np.isnan(upsilon), np.nan,
                          analysis.to_db(np.nan_to_num(upsilon)))
  write_csv(path, ['f_hz', 'upsilon_db'], [frequencies, upsilon_db])


def clip_dynamic_range(power_db: np.ndarray,
                       dynamic_range: float = PATTERN_DYNAMIC_RANGE_DB):
  power_db = np.asarray(power_db, dtype=np.float64)
  return np.maximum(power_db, np.max(power_db) - dynamic_range)


def write_beampattern(path: str, directions: sh.Direction,
                      power_db: np.ndarray):
  theta, phi = directions.to_degrees()
  write_csv(path, ['theta_deg', 'phi_deg', 'power_db'],
            [np.ravel(theta), np.mod(np.ravel(phi), 360.0),
             clip_dynamic_range(np.ravel(power_db))])
