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

"""End-to-end results of the shipped SYS1 and SYS2 configurations.

Bins and realizations are reduced; the endpoints carry a 25% tolerance.
"""

import os

from absl.testing import absltest

import sphmimo
from sphmimo import beamforming
from sphmimo import commands
from sphmimo import export
from sphmimo import radial
from sphmimo import run_config

import jax
import numpy as np

# Parse absl flags test_srcdir and test_tmpdir.
jax.config.parse_flags_with_absl()

CONFIG_DIR = os.path.join(os.path.dirname(sphmimo.__file__), 'configs')

# Band edges the interval endpoints are compared against, in Hz.
SYS1_OFR_L = (900.0, 5000.0)
SYS1_OFR_M = (1200.0, 3000.0)
SYS2_REDUCED_OFR = (900.0, 5600.0)
ENDPOINT_TOLERANCE = 0.25

# TD of the fifth reflection, in seconds.
FIFTH_REFLECTION_TD = 0.0546


def load(name, output_dir, **overrides):
  overrides['output_dir'] = output_dir
  return run_config.load_config(os.path.join(CONFIG_DIR, name), overrides)


def widest(intervals):
  if not intervals:
    raise AssertionError('Expected a non-empty OFR.')
  return max(((i['lo'], i['hi']) for i in intervals),
             key=lambda interval: interval[1] / interval[0])


def read_csv(path):
  return np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)


def peak_to_sidelobe_db(rir, fs, duration, guard=1e-3):
  """Peak over the RMS of the response outside ``guard`` of the peak."""
  rir = rir[:int(round(duration * fs))]
  peak = int(np.argmax(np.abs(rir)))
  far = np.abs(np.arange(rir.size) - peak) > guard * fs
  rms = np.sqrt(np.mean(rir[far] ** 2))
  return 20 * np.log10(np.abs(rir[peak]) / rms)


class FreeFieldTest(absltest.TestCase):

  def assertEndpointsNear(self, interval, expected):
    for value, target in zip(interval, expected):
      self.assertBetween(value, (1 - ENDPOINT_TOLERANCE) * target,
                         (1 + ENDPOINT_TOLERANCE) * target)

  def test_sys1_ofr(self):
    config = load('sys1.json', self.create_tempdir().full_path,
                  **{'grid.bins': 60, 'error.realizations': 5})
    summary = commands.cmd_ofr(config)
    ofr_l = widest(summary['ofr_L'])
    ofr_m = widest(summary['ofr_M'])
    self.assertEndpointsNear(ofr_l, SYS1_OFR_L)
    self.assertEndpointsNear(ofr_m, SYS1_OFR_M)
    # The system OFR is the intersection of the two.
    self.assertEndpointsNear(widest(summary['ofr']),
                             (max(SYS1_OFR_L[0], SYS1_OFR_M[0]),
                              min(SYS1_OFR_L[1], SYS1_OFR_M[1])))

  def test_sys2_needs_order_reduction(self):
    config = load('sys2.json', self.create_tempdir().full_path,
                  **{'grid.bins': 60, 'error.realizations': 5})
    report = commands.cmd_match(config)
    self.assertEqual(report['ofr_before'], [])
    self.assertEqual(report['recommended_side'], radial.SMA)
    self.assertEqual(report['recommended_order'], 2)
    self.assertEndpointsNear(widest(report['ofr_after']), SYS2_REDUCED_OFR)


class RoomTest(absltest.TestCase):

  def test_small_microphone_array_hears_direct_sound(self):
    responses = []
    for name in ('sys1_room.json', 'sys2_room.json'):
      config = load(name, self.create_tempdir().full_path,
                    **{'analysis.pattern_step_deg': 15.0})
      summary = commands.cmd_beampattern(config, kind=beamforming.MAX_WNG)
      self.assertEqual(summary['frequency_hz'], 1100.0)
      responses.append(summary['sma_direct_db'])
    self.assertLessEqual(responses[0], responses[1] - 12.0)

  def test_directional_rirs(self):
    results = {}
    for name in ('sys1_room.json', 'sys2_room.json'):
      out = self.create_tempdir().full_path
      config = load(name, out, **{'analysis.pattern_step_deg': 15.0,
                                  'analysis.upsilon_bins': 24,
                                  'error.realizations': 4})
      summary = commands.cmd_rir(config)
      rir = read_csv(os.path.join(out, export.RIR_CSV))[:, 1]
      upsilon = read_csv(os.path.join(out, export.UPSILON_CSV))
      results[name] = (summary, rir, upsilon, config)

    summary, rir, upsilon, config = results['sys1_room.json']
    self.assertEqual(summary['reflection'], 5)
    self.assertAlmostEqual(summary['peak_time_s'], FIFTH_REFLECTION_TD,
                           delta=1e-3)
    duration = config.options.room.duration
    self.assertGreaterEqual(
        peak_to_sidelobe_db(rir, config.room.fs, duration), 10.0)
    self.assertGreaterEqual(np.mean(upsilon[:, 1] < 0.0), 0.8)

    _, rir, upsilon, config = results['sys2_room.json']
    self.assertLess(peak_to_sidelobe_db(rir, config.room.fs, duration), 6.0)
    lowest_octave = upsilon[:, 0] <= 2 * upsilon[0, 0]
    self.assertTrue(np.all(upsilon[lowest_octave, 1] > 0.0))


if __name__ == '__main__':
  absltest.main()
