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

"""The commands behind the ``sphmimo`` command line.

Each ``cmd_*`` function takes a validated `run_config.RunConfig`, writes its
result files to ``config.output_dir`` and returns the JSON summary it wrote
(or the main result), so the commands can be driven without flags.
"""

import os
from typing import Any, Dict, Optional

from absl import logging
import numpy as np

from . import analysis
from . import beamforming
from . import errors
from . import export
from . import mimo
from . import radial
from . import room
from . import run_config


def _out(config: run_config.RunConfig, name: str) -> str:
  return os.path.join(config.output_dir, name)


def _ofr_summary(curves: analysis.ErrorCurves, grid: analysis.FrequencyGrid,
                 sigma_db: float) -> Dict[str, Any]:
  freqs = curves.frequencies
  ofr_l = analysis.compute_ofr(freqs, curves.in_db('delta_L'), sigma_db)
  ofr_m = analysis.compute_ofr(freqs, curves.in_db('delta_M'), sigma_db)
  ofr = analysis.compute_ofr(freqs, curves.in_db('delta'), sigma_db)
  matched = analysis.is_matched(ofr_l, ofr_m, grid.half_bin_log())
  return {'sigma_db': float(sigma_db), 'ofr': ofr.to_json(),
          'ofr_L': ofr_l.to_json(), 'ofr_M': ofr_m.to_json(),
          'matched': matched}


def cmd_validate(config: run_config.RunConfig) -> Dict[str, Any]:
  """Logs what the configuration resolved to; writes nothing."""
  system = config.system
  summary = {
      'order_tilde_L': system.sla.order_tilde,
      'order_tilde_M': system.sma.order_tilde,
      'elements_L': system.sla.element_count,
      'elements_M': system.sma.element_count,
      'bins': config.grid.bins,
      'room': config.room is not None,
  }
  logging.info('Configuration %s is valid: %s', config.path, summary)
  return summary


def cmd_ofr(config: run_config.RunConfig,
            threads: Optional[int] = None) -> Dict[str, Any]:
  """Error curves of the system and its operating frequency ranges.

  Writes the curves as CSV and msgpack snapshot and the OFR summary as JSON.
  """
  curves = analysis.error_curves(config.system, config.grid, config.error,
                                 threads=threads)
  export.write_error_curves(_out(config, export.ERROR_CURVES_CSV), curves)
  export.save_error_curves(_out(config, export.ERROR_CURVES_SNAPSHOT), curves)
  summary = _ofr_summary(curves, config.grid, config.sigma_db)
  export.write_json(_out(config, export.OFR_JSON), summary)
  logging.info('OFR %s, matched: %s.', summary['ofr'], summary['matched'])
  return summary


def cmd_match(config: run_config.RunConfig,
              threads: Optional[int] = None) -> Dict[str, Any]:
  """Checks the matching criterion and recommends an order reduction.

  The report holds the criterion residual, the recommended side and order
  (null when the criterion already holds) and the system OFR before and after
  the reduction.
  """
  spec = config.system
  residual = analysis.matching_criterion(spec)
  side = order = None
  try:
    side, order = analysis.reduce_order(spec)
  except errors.OrderReductionNotNeededError:
    logging.info('Matching criterion holds; no reduction needed.')
  curves = analysis.error_curves(spec, config.grid, config.error,
                                 threads=threads)
  before = _ofr_summary(curves, config.grid, config.sigma_db)['ofr']
  after = before
  if side is not None:
    reduced = analysis.reduced_system(spec, side, order)
    curves = analysis.error_curves(reduced, config.grid, config.error,
                                   threads=threads)
    after = _ofr_summary(curves, config.grid, config.sigma_db)['ofr']
  report = {'criterion_residual': float(residual), 'recommended_side': side,
            'recommended_order': order, 'ofr_before': before,
            'ofr_after': after}
  export.write_json(_out(config, export.MATCH_JSON), report)
  return report


def _require_room(config: run_config.RunConfig, command: str):
  if config.room is None:
    raise errors.MissingRoomError(command)
  return config.room


def _paths(config: run_config.RunConfig) -> room.ReflectionPaths:
  return room.image_sources(config.room,
                            max_delay=config.options.room.duration)


def cmd_table(config: run_config.RunConfig) -> room.ReflectionPaths:
  """Writes the reflection table of the room."""
  _require_room(config, 'table')
  paths = _paths(config)
  export.write_reflection_table(_out(config, export.REFLECTIONS_CSV), paths)
  return paths


def _beamformer(config, paths, kind, reflection):
  kind = kind or config.options.analysis.beamformer
  reflection = (config.options.analysis.look_reflection
                if reflection is None else reflection)
  return room.beamformer_for_reflection(paths, reflection, kind), reflection


def _pattern(spec: mimo.SystemSpec, array: mimo.ArraySpec, weights, look,
             k, directions):
  modal = radial.modal_matrix(array.radial, k, array.order_tilde)
  modal = radial.ModalDiagonal(values=modal.values[0], order=modal.order)
  mats = array.sampling_matrices()
  return beamforming.beampattern(weights, directions, look, modal, mats)


def cmd_beampattern(config: run_config.RunConfig, kind: Optional[str] = None,
                    reflection: Optional[int] = None) -> Dict[str, Any]:
  """Beampatterns of both arrays at the pattern frequency.

  Patterns include the aliasing of the sampled arrays. The summary reports
  the microphone-array response at the direct-sound DOA and the
  loudspeaker-array response at the direct-sound DOR.
  """
  _require_room(config, 'beampattern')
  spec = config.room_system
  paths = _paths(config)
  beamformer, reflection = _beamformer(config, paths, kind, reflection)
  frequency = config.options.analysis.pattern_freq_hz
  k = spec.wavenumber([frequency])
  weights = beamforming.design_weights(spec, beamformer, k)
  directions = beamforming.pattern_grid(
      config.options.analysis.pattern_step_deg)
  direct = paths.path(0)
  result = {}
  for name, array, w, look, toward in (
      ('sla', spec.sla, weights.gamma, beamformer.look_sla, direct.dor),
      ('sma', spec.sma, weights.lam, beamformer.look_sma, direct.doa)):
    w = w.replace(coeffs=w.coeffs[0])
    power = _pattern(spec, array, w, look, k, directions)
    export.write_beampattern(_out(config, export.BEAMPATTERN_CSV.format(name)),
                             directions, power)
    at_direct = _pattern(spec, array, w, look, k, toward)
    result[f'{name}_direct_db'] = float(at_direct)
    result[f'{name}_di_db'] = beamforming.directivity_index(w, look)
  summary = {
      'frequency_hz': float(frequency), 'beamformer': beamformer.kind,
      'look_reflection': int(reflection), **result}
  export.write_json(_out(config, export.BEAMPATTERN_JSON), summary)
  logging.info('SMA response at the direct-sound DOA: %.2f dB.',
               summary['sma_direct_db'])
  return summary


def cmd_rir(config: run_config.RunConfig, kind: Optional[str] = None,
            reflection: Optional[int] = None,
            threads: Optional[int] = None) -> Dict[str, Any]:
  """Directional RIR of the array pair steered at one reflection.

  Writes the reflection table, the RIR (WAV and CSV), the beamforming error
  over the band and the beampatterns.
  """
  room_spec = _require_room(config, 'rir')
  spec = config.room_system
  options = config.options.room
  paths = cmd_table(config)
  beamformer, reflection = _beamformer(config, paths, kind, reflection)
  logging.info('Steering at reflection %d (TD %.4f s) with %s weights.',
               reflection, paths.td[reflection], beamformer.kind)
  rir = room.directional_rir(room_spec, spec, beamformer, config.band,
                             config.error, n_fft=options.n_fft,
                             duration=options.duration,
                             transition=options.transition_hz,
                             threads=threads, paths=paths)
  export.write_rir(_out(config, export.RIR_WAV), _out(config, export.RIR_CSV),
                   rir, room_spec.fs)
  freqs, upsilon = room.room_upsilon(
      room_spec, spec, beamformer, config.band, config.error,
      bins=config.options.analysis.upsilon_bins, threads=threads, paths=paths)
  export.write_upsilon(_out(config, export.UPSILON_CSV), freqs, upsilon)
  cmd_beampattern(config, beamformer.kind, reflection)
  peak = int(np.argmax(np.abs(rir)))
  return {'peak_time_s': peak / room_spec.fs,
          'target_td_s': float(paths.td[reflection]),
          'reflection': int(reflection)}
