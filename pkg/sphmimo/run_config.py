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

"""Run configuration: a JSON document validated into typed specs.

A configuration has the sections ``system``, ``grid``, ``error``, ``room``
(optional) and ``analysis``, plus ``output_dir``. `default_config` lists every
accepted key with its default. Errors name the dotted key and the line that
holds it.
"""

import json
import os
import re
from typing import Any, Dict, Mapping, Optional

from absl import logging
import ml_collections
import numpy as np

from . import analysis
from . import beamforming
from . import errors
from . import geometry
from . import mimo
from . import radial
from . import room
from . import sh
from . import struct

INCH = 0.0254

_SPEC_ERRORS = (errors.InvalidArraySpecError, errors.InvalidSystemSpecError,
                errors.InvalidRoomSpecError,
                errors.InfeasibleReverberationError,
                errors.BandOutsideNyquistError, errors.InvalidDirectionError,
                ValueError)


def _array_defaults(cap: bool) -> ml_collections.ConfigDict:
  array = ml_collections.ConfigDict()
  array.radius = 0.2
  array.order = 8
  array.order_tilde = None
  array.elements = ml_collections.ConfigDict()
  array.elements.kind = geometry.GAUSSIAN
  array.elements.order = None
  array.elements.count = None
  array.elements.path = None
  if cap:
    array.cap_diameter_in = 2.0
  return array


def default_config() -> ml_collections.ConfigDict:
  """Every accepted key with its default value."""
  config = ml_collections.ConfigDict()

  config.system = ml_collections.ConfigDict()
  config.system.r0 = 1.0
  config.system.speed_of_sound = 343.0
  # (theta, phi) in degrees
  config.system.dor_deg = None
  config.system.doa_deg = None
  config.system.sla = _array_defaults(cap=True)
  config.system.sma = _array_defaults(cap=False)

  config.grid = ml_collections.ConfigDict()
  config.grid.f_min = 30.0
  config.grid.f_max = 10000.0
  config.grid.bins = 200
  config.grid.spacing = analysis.LOG

  config.error = ml_collections.ConfigDict()
  config.error.enabled = True
  config.error.snr_db = 40.0
  config.error.calib_freq_hz = 1000.0
  config.error.realizations = 30
  config.error.seed = 0
  config.error.positioning_deg = 0.0

  config.room = None

  config.analysis = ml_collections.ConfigDict()
  config.analysis.sigma_db = 0.0
  config.analysis.beamformer = beamforming.MAX_DI
  config.analysis.look_reflection = 5
  config.analysis.pattern_freq_hz = 1100.0
  config.analysis.pattern_step_deg = 1.0
  config.analysis.upsilon_bins = 100

  config.output_dir = 'out'
  return config


def default_room_config() -> ml_collections.ConfigDict:
  config = ml_collections.ConfigDict()
  config.dims = None
  config.t60 = 0.75
  config.sla_pos = None
  config.sma_pos = None
  config.fs = 48000.0
  config.max_image_order = 30
  config.absorption_formula = room.FITTED
  config.band = None
  config.transition_hz = 50.0
  config.n_fft = 2 ** 16
  config.duration = 0.25
  return config


@struct.dataclass
class RunConfig:
  """A validated run configuration.

  Attributes:
    system: the array pair, with ``N_tilde`` chosen for the analysis grid.
    grid: free-field analysis frequencies.
    error: error model.
    room: the room, or None.
    room_system: the array pair with ``N_tilde`` chosen for the room band, or
      None without a room.
    options: the validated configuration tree, for everything else.
    path: the file it was read from.
  """
  system: mimo.SystemSpec
  grid: analysis.FrequencyGrid
  error: mimo.ErrorModel
  room: Optional[room.RoomSpec]
  room_system: Optional[mimo.SystemSpec]
  options: ml_collections.ConfigDict = struct.field(pytree_node=False)
  path: Optional[str] = struct.field(pytree_node=False, default=None)

  @property
  def sigma_db(self) -> float:
    return self.options.analysis.sigma_db

  @property
  def output_dir(self) -> str:
    return self.options.output_dir

  @property
  def band(self):
    return tuple(self.options.room.band)


class _Locator:
  """Maps dotted keys to lines of the source text."""

  def __init__(self, text: str, path: Optional[str]):
    self.text = text
    self.path = path

  def line(self, key: str) -> Optional[int]:
    position = 0
    found = None
    for part in key.split('.'):
      match = re.compile(r'"%s"\s*:' % re.escape(part)).search(self.text,
                                                               position)
      if match is None:
        break
      position = found = match.start()
    if found is None:
      return None
    return self.text.count('\n', 0, found) + 1

  def error(self, key: str, message: str) -> errors.ConfigError:
    return errors.ConfigError(message, path=self.path, key=key,
                              line=self.line(key))


def _merge(target: ml_collections.ConfigDict, source: Mapping[str, Any],
           prefix: str, locator: _Locator):
  for key, value in source.items():
    dotted = f'{prefix}{key}'
    if key not in target:
      raise locator.error(dotted, 'unknown key.')
    if key == 'room' and not prefix:
      if value is None:
        continue
      target.room = default_room_config()
    current = target[key]
    if isinstance(current, ml_collections.ConfigDict):
      if not isinstance(value, dict):
        raise locator.error(dotted, 'expected an object.')
      _merge(current, value, f'{dotted}.', locator)
      continue
    if isinstance(value, dict):
      raise locator.error(dotted, 'unexpected object.')
    if isinstance(current, bool) != isinstance(value, bool) and (
        current is not None):
      raise locator.error(dotted, f'expected {type(current).__name__}, got '
                          f'{value!r}.')
    try:
      target[key] = value
    except TypeError:
      raise locator.error(dotted, f'expected {type(current).__name__}, got '
                          f'{value!r}.') from None


def _vector(locator, key, value, size):
  if value is None:
    raise locator.error(key, 'is required.')
  try:
    array = np.asarray(value, dtype=np.float64)
  except (TypeError, ValueError):
    array = None
  if array is None or array.shape != (size,) or not np.all(np.isfinite(array)):
    raise locator.error(key, f'expected a list of {size} numbers.')
  return array


def _check(locator, key, condition, message):
  if not condition:
    raise locator.error(key, message)


def _scheme(options, key, locator, base_dir):
  kind = options.kind
  if kind == geometry.GAUSSIAN:
    _check(locator, f'{key}.order', isinstance(options.order, int)
           and options.order >= 0, 'gaussian elements need an order >= 0.')
    return geometry.make_gaussian_grid(options.order)
  if kind == geometry.UNIFORM:
    _check(locator, f'{key}.count', isinstance(options.count, int)
           and options.count >= 1, 'uniform elements need a count >= 1.')
    return geometry.make_uniform_grid(options.count)
  if kind == geometry.CUSTOM:
    _check(locator, f'{key}.path', isinstance(options.path, str),
           'custom elements need a path.')
    path = os.path.join(base_dir, options.path)
    _check(locator, f'{key}.path', os.path.exists(path),
           f'file {path} does not exist.')
    return geometry.load_custom_grid(path)
  raise locator.error(f'{key}.kind', f'unknown element layout {kind!r}.')


def _array(options, key, role, order_tilde, locator, base_dir):
  _check(locator, f'{key}.order', options.order >= 0, 'must be >= 0.')
  if role == radial.SLA:
    radial_spec = radial.RadialSpec.sla(options.radius,
                                        options.cap_diameter_in * INCH)
  else:
    radial_spec = radial.RadialSpec.sma(options.radius)
  scheme = _scheme(options.elements, f'{key}.elements', locator, base_dir)
  if options.order_tilde is not None:
    order_tilde = options.order_tilde
  return mimo.ArraySpec(scheme=scheme, radial=radial_spec,
                        order=options.order, order_tilde=order_tilde)


def _direction(locator, key, value, default):
  if value is None:
    return sh.Direction.from_degrees(*default)
  theta, phi = _vector(locator, key, value, 2)
  return sh.Direction.from_degrees(theta, phi)


def build_system(options: ml_collections.ConfigDict, f_max: float,
                 locator: _Locator, base_dir: str) -> mimo.SystemSpec:
  """Array pair whose unset ``order_tilde`` is chosen for ``f_max``."""
  system = options.system
  radius = max(system.sla.radius, system.sma.radius)
  _check(locator, 'system.sla.radius', system.sla.radius > 0, 'must be > 0.')
  _check(locator, 'system.sma.radius', system.sma.radius > 0, 'must be > 0.')
  _check(locator, 'system.speed_of_sound', system.speed_of_sound > 0,
         'must be > 0.')
  order_tilde = analysis.select_order_tilde(radius, f_max,
                                            system.speed_of_sound)
  try:
    sla = _array(system.sla, 'system.sla', radial.SLA, order_tilde, locator,
                 base_dir)
  except _SPEC_ERRORS as e:
    raise locator.error('system.sla', str(e)) from e
  try:
    sma = _array(system.sma, 'system.sma', radial.SMA, order_tilde, locator,
                 base_dir)
  except _SPEC_ERRORS as e:
    raise locator.error('system.sma', str(e)) from e
  try:
    return mimo.SystemSpec(
        sla=sla, sma=sma,
        dor=_direction(locator, 'system.dor_deg', system.dor_deg, (0.0, 0.0)),
        doa=_direction(locator, 'system.doa_deg', system.doa_deg, (0.0, 0.0)),
        r0=system.r0, speed_of_sound=system.speed_of_sound)
  except _SPEC_ERRORS as e:
    raise locator.error('system', str(e)) from e


def _build_room(options, locator, speed_of_sound):
  room_options = options.room
  dims = _vector(locator, 'room.dims', room_options.dims, 3)
  sla_pos = _vector(locator, 'room.sla_pos', room_options.sla_pos, 3)
  sma_pos = _vector(locator, 'room.sma_pos', room_options.sma_pos, 3)
  band = _vector(locator, 'room.band', room_options.band, 2)
  _check(locator, 'room.n_fft', room_options.n_fft >= 2
         and room_options.n_fft % 2 == 0, 'must be an even number >= 2.')
  _check(locator, 'room.transition_hz', room_options.transition_hz > 0,
         'must be > 0.')
  _check(locator, 'room.duration', room_options.duration is None
         or room_options.duration > 0, 'must be > 0.')
  try:
    spec = room.RoomSpec.create(
        dims, sla_pos, sma_pos, room_options.t60, fs=room_options.fs,
        max_image_order=room_options.max_image_order,
        speed_of_sound=speed_of_sound,
        absorption_formula=room_options.absorption_formula)
    room.wall_coefficients(spec)
    room.check_band(spec, band, room_options.transition_hz)
  except _SPEC_ERRORS as e:
    raise locator.error('room', str(e)) from e
  return spec


def _validate_scalars(options, locator):
  grid, error, opts = options.grid, options.error, options.analysis
  _check(locator, 'analysis.sigma_db', np.isfinite(opts.sigma_db),
         'must be finite.')
  _check(locator, 'analysis.beamformer',
         opts.beamformer in (beamforming.MAX_DI, beamforming.MAX_WNG),
         f'unknown beamformer {opts.beamformer!r}.')
  _check(locator, 'analysis.look_reflection', opts.look_reflection >= 0,
         'must be >= 0.')
  _check(locator, 'analysis.pattern_step_deg',
         0 < opts.pattern_step_deg <= 90, 'must be in (0, 90].')
  _check(locator, 'analysis.upsilon_bins', opts.upsilon_bins >= 2,
         'must be >= 2.')
  _check(locator, 'error.realizations', error.realizations >= 1,
         'must be >= 1.')
  _check(locator, 'error.snr_db', np.isfinite(error.snr_db), 'must be finite.')
  _check(locator, 'error.positioning_deg', error.positioning_deg >= 0,
         'must be >= 0.')
  _check(locator, 'error.seed', error.seed >= 0, 'must be >= 0.')
  _check(locator, 'grid.bins', grid.bins >= 2, 'must be >= 2.')
  _check(locator, 'grid.f_min', 0 < grid.f_min < grid.f_max,
         'need 0 < f_min < f_max.')
  _check(locator, 'grid.spacing', grid.spacing in (analysis.LOG,
                                                   analysis.LINEAR),
         f'unknown spacing {grid.spacing!r}.')


def parse_config(text: str, path: Optional[str] = None,
                 overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
  """Validates a JSON configuration document.

  Args:
    text: the JSON text.
    path: file name used in messages and as the base of relative paths.
    overrides: values replacing config entries, keyed by dotted name (e.g.
      ``{'error.seed': 3}``); None values are skipped.
  Returns:
    The validated configuration.
  Raises:
    ConfigError: the document is not valid.
  """
  locator = _Locator(text, path)
  try:
    raw = json.loads(text)
  except json.JSONDecodeError as e:
    raise errors.ConfigError(e.msg, path=path, line=e.lineno) from None
  if not isinstance(raw, dict):
    raise errors.ConfigError('expected a JSON object.', path=path, line=1)
  options = default_config()
  _merge(options, raw, '', locator)
  for key, value in (overrides or {}).items():
    if value is None:
      continue
    *parents, leaf = key.split('.')
    node = options
    for parent in parents:
      node = node[parent]
    node[leaf] = value
  _validate_scalars(options, locator)

  base_dir = os.path.dirname(os.path.abspath(path)) if path else os.getcwd()
  grid = analysis.FrequencyGrid(f_min=options.grid.f_min,
                                f_max=options.grid.f_max,
                                bins=options.grid.bins,
                                spacing=options.grid.spacing)
  error = mimo.ErrorModel(enabled=options.error.enabled,
                          snr_db=options.error.snr_db,
                          calib_freq_hz=options.error.calib_freq_hz,
                          realizations=options.error.realizations,
                          rng_seed=options.error.seed,
                          positioning_deg=options.error.positioning_deg)
  system = build_system(options, grid.f_max, locator, base_dir)
  room_spec = room_system = None
  if options.room is not None:
    room_spec = _build_room(options, locator, options.system.speed_of_sound)
    band_top = options.room.band[1] + options.room.transition_hz
    room_system = build_system(options, band_top, locator, base_dir)
  logging.info('Loaded configuration %s (N_tilde: SLA %d, SMA %d).',
               path or '<string>', system.sla.order_tilde,
               system.sma.order_tilde)
  return RunConfig(system=system, grid=grid, error=error, room=room_spec,
                   room_system=room_system, options=options, path=path)


def load_config(path: str,
                overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
  try:
    with open(path, encoding='utf-8') as fp:
      text = fp.read()
  except OSError as e:
    raise errors.ConfigError(f'cannot read file: {e.strerror}.',
                             path=path) from None
  return parse_config(text, path, overrides)
