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

"""Shoebox room model and directional room impulse responses.

Specular reflections are enumerated with the image-source method. Image cells
are indexed by integer triples ``i``: along an axis of length ``L`` the cell
``i`` holds the mirror image of a point ``x`` at ``i L + x`` (``i`` even) or
``(i + 1) L - x`` (``i`` odd), reached after ``|i|`` wall reflections.

Every path enters the array pair like a free-field arrival with its own
direction of radiation (at the loudspeaker array), direction of arrival (at
the microphone array), delay and amplitude, so the room transfer matrix is a
sum of rank-one free-field terms. Spectra use the ``e^{-i omega t}``
convention of the free-field model and are conjugated before the inverse FFT.
"""

import functools
from typing import Optional, Sequence, Tuple

from absl import logging
import numpy as np

from . import beamforming
from . import errors
from . import jax_utils
from . import mimo
from . import radial
from . import sh
from . import struct

SABINE = 'sabine'
EYRING = 'eyring'
FITTED = 'fitted'
ABSORPTION_FORMULAS = (FITTED, SABINE, EYRING)

# Sabine's constant, s/m.
_SABINE_CONSTANT = 0.161

# Schroeder fit levels of the fitted absorption, dB.
_FIT_START_DB = -5.0
_FIT_STOP_DB = -25.0
# The complete part of the decay must reach this far below the fit.
_FIT_MARGIN_DB = 20.0
# Bracket and bisection steps of the absorption search.
_ABSORPTION_RANGE = (1e-4, 1.0 - 1e-9)
_FIT_STEPS = 48

# Paths synthesized together; bounds the (bins x paths) working set.
_PATH_CHUNK = 4096


@struct.dataclass
class RoomSpec:
  """A shoebox room with one loudspeaker array and one microphone array.

  Attributes:
    dims: room size ``(Lx, Ly, Lz)`` in meters.
    sla_pos: loudspeaker-array center.
    sma_pos: microphone-array center.
    t60: reverberation time in seconds.
    fs: sampling frequency in Hz.
    max_image_order: highest number of wall reflections enumerated.
    speed_of_sound: in m/s.
    absorption_formula: ``fitted``, ``sabine`` or ``eyring``, for the wall
      coefficients.
  """
  dims: np.ndarray
  sla_pos: np.ndarray
  sma_pos: np.ndarray
  t60: float = struct.field(pytree_node=False)
  fs: float = struct.field(pytree_node=False, default=48000.0)
  max_image_order: int = struct.field(pytree_node=False, default=30)
  speed_of_sound: float = struct.field(pytree_node=False, default=343.0)
  absorption_formula: str = struct.field(pytree_node=False, default=FITTED)

  def __post_init__(self):
    dims = np.asarray(self.dims, dtype=np.float64)
    if dims.shape != (3,) or np.any(dims <= 0):
      raise errors.InvalidRoomSpecError(f'Invalid room dimensions {self.dims}.')
    for name in ('sla_pos', 'sma_pos'):
      pos = np.asarray(getattr(self, name), dtype=np.float64)
      if pos.shape != (3,) or np.any(pos <= 0) or np.any(pos >= dims):
        raise errors.InvalidRoomSpecError(
            f'{name} {getattr(self, name)} is not strictly inside the room.')
    if not self.t60 > 0:
      raise errors.InvalidRoomSpecError(
          f't60 must be positive, got {self.t60}.')
    if not self.fs > 0:
      raise errors.InvalidRoomSpecError(f'fs must be positive, got {self.fs}.')
    if self.max_image_order < 0:
      raise errors.InvalidRoomSpecError('max_image_order must be >= 0.')
    if self.absorption_formula not in ABSORPTION_FORMULAS:
      raise errors.InvalidRoomSpecError(
          f'Unknown absorption formula {self.absorption_formula!r}.')

  @classmethod
  def create(cls, dims, sla_pos, sma_pos, t60, **kwargs) -> 'RoomSpec':
    return cls(dims=np.asarray(dims, dtype=np.float64),
               sla_pos=np.asarray(sla_pos, dtype=np.float64),
               sma_pos=np.asarray(sma_pos, dtype=np.float64), t60=t60,
               **kwargs)

  @property
  def volume(self) -> float:
    return float(np.prod(self.dims))

  @property
  def surface(self) -> float:
    lx, ly, lz = self.dims
    return float(2 * (lx * ly + lx * lz + ly * lz))


@struct.dataclass
class ReflectionPath:
  dor: sh.Direction
  doa: sh.Direction
  td: float = struct.field(pytree_node=False)
  amplitude: float = struct.field(pytree_node=False)
  image_index: Tuple[int, int, int] = struct.field(pytree_node=False)

  @property
  def reflections(self) -> int:
    return int(sum(abs(i) for i in self.image_index))


@struct.dataclass
class ReflectionPaths:
  """All enumerated paths as parallel arrays, sorted by delay."""
  td: np.ndarray
  distance: np.ndarray
  amplitude: np.ndarray
  dor: sh.Direction
  doa: sh.Direction
  image_index: np.ndarray

  def __len__(self):
    return int(self.td.size)

  def path(self, i: int) -> ReflectionPath:
    return ReflectionPath(dor=self.dor[i], doa=self.doa[i],
                          td=float(self.td[i]),
                          amplitude=float(self.amplitude[i]),
                          image_index=tuple(int(v) for v in
                                            self.image_index[i]))

  def __iter__(self):
    return (self.path(i) for i in range(len(self)))

  def select(self, index) -> 'ReflectionPaths':
    return ReflectionPaths(td=self.td[index], distance=self.distance[index],
                           amplitude=self.amplitude[index],
                           dor=self.dor[index], doa=self.doa[index],
                           image_index=self.image_index[index])


def wall_coefficients(room: RoomSpec) -> np.ndarray:
  """Uniform pressure reflection coefficient of the six walls.

  With ``sabine`` or ``eyring`` the absorption coefficient solves
  ``T60 = 0.161 V / (S a)`` or ``T60 = 0.161 V / (-S ln(1 - a))`` for the
  room's T60. With ``fitted`` it is searched so that the Schroeder decay of
  the image-source response meets the T60 (see `fitted_absorption`). In all
  cases ``|r| = sqrt(1 - a)``.

  Raises:
    InfeasibleReverberationError: the absorption would exceed one.
  """
  if not room.t60 > 0:
    raise errors.InvalidRoomSpecError('t60 must be positive.')
  ratio = _SABINE_CONSTANT * room.volume / (room.surface * room.t60)
  if room.absorption_formula == SABINE:
    absorption = ratio
  elif room.absorption_formula == EYRING:
    absorption = 1.0 - np.exp(-ratio)
  else:
    absorption = fitted_absorption(room)
  if absorption > 1:
    raise errors.InfeasibleReverberationError(room.t60, absorption)
  return np.full(6, np.sqrt(1.0 - absorption))


def fitted_absorption(room: RoomSpec) -> float:
  """Absorption whose image-source decay has the room's T60.

  The decay is the Schroeder curve of the impulse-train response of all
  images up to ``room.max_image_order``, read over the time span in which
  that enumeration is complete, and fitted between -5 and -25 dB like
  `estimate_t60`. Falls back to Eyring's formula (with a warning) when the
  span is too short for the requested T60.
  """
  return _fit_absorption(tuple(float(v) for v in room.dims),
                         tuple(float(v) for v in room.sla_pos),
                         tuple(float(v) for v in room.sma_pos),
                         float(room.t60), float(room.fs),
                         int(room.max_image_order),
                         float(room.speed_of_sound))


@functools.lru_cache(maxsize=32)
def _fit_absorption(dims, sla_pos, sma_pos, t60, fs, order, speed_of_sound):
  dims = np.asarray(dims)
  surface = 2 * (dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2])
  eyring = 1.0 - np.exp(-_SABINE_CONSTANT * np.prod(dims) / (surface * t60))
  cells, reflections = _image_cells(order)
  images = _mirror(np.asarray(sma_pos)[None, :], cells, dims[None, :])
  distance = np.linalg.norm(images - np.asarray(sla_pos)[None, :], axis=-1)
  # Cells one reflection further out than the enumeration are farther than
  # the nearest cell of the outermost shell.
  complete = (np.min(distance[reflections == order]) / speed_of_sound
              if order > 0 else 0.0)
  needed = t60 * (_FIT_STOP_DB - _FIT_MARGIN_DB) / -60.0
  if complete < needed:
    logging.warning('Images up to order %d cover %.3f s, too short to fit a '
                    'T60 of %.2f s; using Eyring absorption.', order,
                    complete, t60)
    return float(eyring)
  length = int(complete * fs)
  samples = np.round(distance / speed_of_sound * fs).astype(np.int64)
  keep = samples < length
  samples, reflections = samples[keep], reflections[keep]
  direct = 1.0 / distance[keep]

  def measured_t60(absorption):
    train = np.zeros(length)
    np.add.at(train, samples,
              direct * np.sqrt(1.0 - absorption) ** reflections)
    try:
      return estimate_t60(train, fs, _FIT_START_DB, _FIT_STOP_DB)
    except ValueError:
      # Nothing left between the fit levels: faster than any target.
      return 0.0

  lo, hi = _ABSORPTION_RANGE
  if measured_t60(hi) > t60:
    raise errors.InfeasibleReverberationError(t60, hi)
  if measured_t60(lo) < t60:
    logging.warning('T60 of %.2f s is beyond the image-source room; using '
                    'Eyring absorption.', t60)
    return float(eyring)
  # T60 falls as the absorption grows; bisect on a log scale.
  for _ in range(_FIT_STEPS):
    mid = np.sqrt(lo * hi)
    if measured_t60(mid) > t60:
      lo = mid
    else:
      hi = mid
  absorption = float(np.sqrt(lo * hi))
  logging.info('Fitted wall absorption %.4f for a T60 of %.2f s '
               '(Eyring: %.4f).', absorption, t60, eyring)
  return absorption


def _mirror(coord, cell, length):
  # Image of ``coord`` in cell ``cell`` along one axis.
  odd = np.mod(cell, 2) == 1
  return np.where(odd, (cell + 1) * length - coord, cell * length + coord)


def image_sources(room: RoomSpec, order: Optional[int] = None,
                  max_delay: Optional[float] = None) -> ReflectionPaths:
  """Enumerates specular paths from the loudspeaker to the microphone array.

  Args:
    room: the room.
    order: highest reflection order, default ``room.max_image_order``.
    max_delay: drop paths with a longer delay, in seconds.
  Returns:
    Paths sorted by delay (ties by image index). The direction of radiation
    points from the loudspeaker array to the image of the microphone array,
    the direction of arrival from the microphone array to the image of the
    loudspeaker array.
  """
  order = room.max_image_order if order is None else order
  if order < 0:
    raise ValueError(f'Image order must be >= 0, got {order}.')
  r = wall_coefficients(room)[0]
  cells, reflections = _image_cells(order)

  images = _mirror(room.sma_pos[None, :], cells, room.dims[None, :])
  radiation = images - room.sla_pos[None, :]
  # Unfolding the path from the microphone side flips the axes with an odd
  # number of reflections only.
  flip = np.where(np.mod(cells, 2) == 1, 1.0, -1.0)
  arrival = radiation * flip
  distance = np.linalg.norm(radiation, axis=-1)
  td = distance / room.speed_of_sound
  keep = np.ones(td.shape, dtype=bool) if max_delay is None else (
      td <= max_delay)
  cells, reflections = cells[keep], reflections[keep]
  radiation, arrival = radiation[keep], arrival[keep]
  distance, td = distance[keep], td[keep]

  ordering = np.lexsort((cells[:, 2], cells[:, 1], cells[:, 0], td))
  logging.info('Enumerated %d image sources up to order %d.', td.size, order)
  return ReflectionPaths(
      td=td[ordering], distance=distance[ordering],
      amplitude=r ** reflections[ordering] / distance[ordering],
      dor=sh.Direction.from_cartesian(radiation[ordering]),
      doa=sh.Direction.from_cartesian(arrival[ordering]),
      image_index=cells[ordering])


def bandpass_response(frequencies, band: Sequence[float],
                      transition: float = 50.0) -> np.ndarray:
  """Zero-phase band-pass: one inside ``band``, raised-cosine edges outside."""
  f = np.asarray(frequencies, dtype=np.float64)
  lo, hi = band
  response = ((f >= lo) & (f <= hi)).astype(np.float64)
  rising = (f > lo - transition) & (f < lo)
  response[rising] = 0.5 * (1.0 - np.cos(
      np.pi * (f[rising] - (lo - transition)) / transition))
  falling = (f > hi) & (f < hi + transition)
  response[falling] = 0.5 * (1.0 + np.cos(np.pi * (f[falling] - hi) /
                                         transition))
  return response


def check_band(room: RoomSpec, band: Sequence[float], transition: float):
  lo, hi = band
  if not (0 < lo - transition and lo < hi and hi + transition < room.fs / 2):
    raise errors.BandOutsideNyquistError(tuple(band), room.fs)


def fft_frequencies(room: RoomSpec, n_fft: int) -> np.ndarray:
  return np.arange(n_fft // 2 + 1) * room.fs / n_fft


def to_time_domain(spectrum: np.ndarray, n_fft: int) -> np.ndarray:
  """Inverse FFT of a one-sided ``e^{-i omega t}`` spectrum."""
  return np.fft.irfft(np.conj(spectrum), n=n_fft)


def spectral_energy(spectrum: np.ndarray, n_fft: int) -> float:
  """Energy of the real signal of even length ``n_fft`` with this spectrum."""
  power = np.abs(spectrum) ** 2
  return float((power[0] + 2 * np.sum(power[1:-1]) + power[-1]) / n_fft)


def omni_rir(room: RoomSpec, paths: ReflectionPaths, n_fft: int = 2 ** 16,
             band: Optional[Sequence[float]] = None,
             transition: float = 50.0) -> np.ndarray:
  """Omnidirectional RIR, the order-zero channel of the normalized room matrix.

  Without ``band`` every path is an impulse at its nearest sample. With a band
  the response is synthesized in the frequency domain and band-passed.
  """
  gain = paths.amplitude / (4.0 * np.pi)
  if band is None:
    samples = np.round(paths.td * room.fs).astype(np.int64)
    keep = samples < n_fft
    rir = np.zeros(n_fft)
    np.add.at(rir, samples[keep], gain[keep])
    return rir
  check_band(room, band, transition)
  freqs = fft_frequencies(room, n_fft)
  window = bandpass_response(freqs, band, transition)
  active = np.nonzero(window > 0)[0]
  k = 2.0 * np.pi * freqs[active] / room.speed_of_sound
  spectrum = np.zeros(freqs.size, dtype=np.complex128)
  for start in range(0, len(paths), _PATH_CHUNK):
    part = slice(start, start + _PATH_CHUNK)
    phase = np.exp(1j * k[:, None] * paths.distance[None, part])
    spectrum[active] += phase @ gain[part]
  spectrum[active] *= window[active]
  return to_time_domain(spectrum, n_fft)


def schroeder_decay(rir: np.ndarray) -> np.ndarray:
  """Backward-integrated energy decay in dB, 0 dB at the start."""
  energy = np.cumsum(np.asarray(rir, dtype=np.float64)[::-1] ** 2)[::-1]
  return 10.0 * np.log10(np.maximum(energy / energy[0], 1e-300))


def estimate_t60(rir: np.ndarray, fs: float, start_db: float = -5.0,
                 stop_db: float = -25.0, max_time: Optional[float] = None
                 ) -> float:
  """T60 from a line fit to the Schroeder decay between two levels."""
  rir = np.asarray(rir, dtype=np.float64)
  if max_time is not None:
    rir = rir[:int(round(max_time * fs))]
  decay = schroeder_decay(rir)
  t = np.arange(decay.size) / fs
  fit = (decay <= start_db) & (decay >= stop_db)
  if np.count_nonzero(fit) < 2:
    raise ValueError('Decay does not span the fit range.')
  slope, _ = np.polyfit(t[fit], decay[fit], 1)
  return float(-60.0 / slope)


class RoomSystem:
  """An array pair in a room, ready for per-bin synthesis.

  Holds the enumerated paths, the harmonics at every path direction, the
  sampling matrices of both arrays and the transducer noise, calibrated on
  the drive signals of `beamformer` (default: steered at the direct path).
  """

  def __init__(self, room: RoomSpec, spec: mimo.SystemSpec,
               paths: ReflectionPaths, error: mimo.ErrorModel,
               beamformer: Optional[beamforming.BeamformerSpec] = None):
    if len(paths) == 0:
      raise ValueError('Need at least one path.')
    self.room = room
    self.spec = spec
    self.paths = paths
    self.error = error
    self.model = mimo.SystemModel(
        sla_mats=spec.sla.sampling_matrices(),
        sma_mats=spec.sma.sampling_matrices(), noise_var_L=0.0,
        noise_var_M=0.0, spec=spec, error=error)
    self.y_dor = sh.sh_matrix(paths.dor, spec.sla.order_tilde)
    self.y_doa = sh.sh_matrix(paths.doa, spec.sma.order_tilde)
    self.beamformer = beamformer or beamforming.BeamformerSpec(
        look_sla=paths.dor[0], look_sma=paths.doa[0])
    self.noise_var_L, self.noise_var_M = self._noise_variances()

  def wavenumbers(self, frequencies):
    return 2.0 * np.pi * np.asarray(frequencies) / self.room.speed_of_sound

  def _path_weights(self, k):
    # amplitude * e^{ikd}, shape (bins, paths)
    return self.paths.amplitude[None, :] * np.exp(
        1j * k[:, None] * self.paths.distance[None, :])

  def transfer_matrix(self, k: float, basis_L=None, basis_M=None):
    """Element-domain room transfer matrix ``H`` (S x R) at one wavenumber."""
    spec = self.spec
    basis_L = self.model.sla_mats.basis if basis_L is None else basis_L
    basis_M = self.model.sma_mats.basis if basis_M is None else basis_M
    k = np.asarray([k], dtype=np.float64)
    g = radial.modal_matrix(spec.sla.radial, k, spec.sla.order_tilde).expand()
    b = radial.modal_matrix(spec.sma.radial, k, spec.sma.order_tilde).expand()
    h_L = (self.y_dor * g) @ basis_L.T
    h_M = (self.y_doa * b) @ basis_M.T
    weights = self._path_weights(k)[0]
    return (h_L * weights[:, None]).T @ np.conj(h_M)

  def _noise_variances(self):
    error = self.error
    if not error.enabled:
      return 0.0, 0.0
    k = self.wavenumbers([error.calib_freq_hz])
    scale = 10.0 ** (-error.snr_db / 10.0)
    weights = beamforming.design_weights(
        self.spec, self.beamformer, k, self.model)
    # Element drive signals, and the microphone signals they produce.
    drive = weights.space_gamma[0]
    mics = drive @ self.transfer_matrix(k[0])
    return (float(np.mean(np.abs(drive) ** 2) * scale),
            float(np.mean(np.abs(mics) ** 2) * scale))

  def _sampled(self, array, mats, realization, with_errors):
    # alpha @ Y at the actual element positions, (N+1)^2 x (N_tilde+1)^2
    if not with_errors:
      return mats.expanded
    basis = mimo.actual_basis(self.model, array, mats, realization)
    if basis is None:
      return mats.expanded
    return mats.alpha @ basis

  def outputs(self, k, bins, weights: beamforming.BeamWeights,
              realization: int = 0, with_errors: bool = True,
              ideal: bool = False) -> np.ndarray:
    """Beamformer output ``y(k)`` of the array pair in the room.

    Args:
      k: wavenumbers.
      bins: bin index of each wavenumber, for the noise streams.
      weights: beamforming weights at ``k``.
      realization: realization counter of the random streams.
      with_errors: apply positioning errors and transducer noise.
      ideal: use the error-free, alias-free normalized model instead (the
        reference of the beamforming error).
    Returns:
      One complex output per bin.
    """
    spec = self.spec
    k = np.asarray(k, dtype=np.float64)
    gamma = np.conj(weights.gamma.coeffs)
    lam = np.conj(weights.lam.coeffs)
    low_L = sh.num_coeffs(spec.sla.order)
    low_M = sh.num_coeffs(spec.sma.order)
    path_weights = self._path_weights(k)
    if ideal:
      gain_L = gamma @ self.y_dor[:, :low_L].T
      gain_M = lam @ self.y_doa[:, :low_M].T
      return np.sum(path_weights * gain_L * np.conj(gain_M), axis=-1)

    g = radial.modal_matrix(spec.sla.radial, k, spec.sla.order_tilde)
    b = radial.modal_matrix(spec.sma.radial, k, spec.sma.order_tilde)
    g_inv = radial.modal_inverse(g.truncate(spec.sla.order)).expand()
    b_inv = radial.modal_inverse(b.truncate(spec.sma.order)).expand()
    sampled_L = self._sampled(spec.sla, self.model.sla_mats, realization,
                              with_errors)
    sampled_M = self._sampled(spec.sma, self.model.sma_mats, realization,
                              with_errors)
    u_L = ((gamma * g_inv) @ sampled_L) * g.expand()
    u_M = ((lam * b_inv) @ sampled_M) * b.expand()
    gain_L = u_L @ self.y_dor.T
    conj_gain_M = np.conj(u_M @ self.y_doa.T)
    y = np.sum(path_weights * gain_L * conj_gain_M, axis=-1)
    if not (with_errors and self.error.enabled):
      return y

    # Drive noise travels through the room into the microphone beamformer.
    basis_L = mimo.actual_basis(self.model, spec.sla, self.model.sla_mats,
                                 realization)
    basis_L = self.model.sla_mats.basis if basis_L is None else basis_L
    coupled = ((path_weights * conj_gain_M) @ self.y_dor) * g.expand()
    drive_response = coupled @ basis_L.T
    bins = np.asarray(bins)
    drive_noise = np.sqrt(self.noise_var_L) * jax_utils.bin_noise(
        self.error.rng_seed, jax_utils.SLA_NOISE, realization, bins,
        spec.sla.element_count)
    mic_noise = np.sqrt(self.noise_var_M) * jax_utils.bin_noise(
        self.error.rng_seed, jax_utils.SMA_NOISE, realization, bins,
        spec.sma.element_count)
    y = y + np.sum(drive_noise * drive_response, axis=-1)
    return y + np.sum(mic_noise * weights.space_lambda, axis=-1)


def room_mimo_matrix(room: RoomSpec, spec: mimo.SystemSpec, k: float,
                     paths: ReflectionPaths) -> np.ndarray:
  """Element-domain transfer matrix ``H(k)`` (S x R) of the array pair.

  ``H = sum_j a_j e^{i k d_j} h_L(k; dor_j) h_M(k; doa_j)^H`` with the
  free-field element responses at each path's directions.
  """
  system = RoomSystem(room, spec, paths, mimo.ErrorModel.disabled())
  return system.transfer_matrix(k)


def _look_directions(paths: ReflectionPaths, index: int):
  if not 0 <= index < len(paths):
    raise errors.ReflectionIndexError(index, len(paths))
  return paths.dor[index], paths.doa[index]


def beamformer_for_reflection(paths: ReflectionPaths, index: int,
                              kind: str) -> beamforming.BeamformerSpec:
  """Steers both arrays at path ``index`` (0 is the direct path)."""
  dor, doa = _look_directions(paths, index)
  return beamforming.BeamformerSpec(look_sla=dor, look_sma=doa, kind=kind)


def directional_rir(room: RoomSpec, spec: mimo.SystemSpec,
                    beamformer: beamforming.BeamformerSpec,
                    band: Sequence[float], error: mimo.ErrorModel,
                    realization: int = 0, n_fft: int = 2 ** 16,
                    duration: Optional[float] = 0.25,
                    transition: float = 50.0,
                    threads: Optional[int] = None,
                    paths: Optional[ReflectionPaths] = None) -> np.ndarray:
  """Band-limited RIR between the two beamformers.

  Args:
    room: the room.
    spec: array descriptions; ``r0``, ``dor`` and ``doa`` are unused.
    beamformer: beamformer kind and look directions.
    band: pass band ``[f_lo, f_hi]`` in Hz.
    error: positioning errors and transducer noise; disabled for an
      error-free response.
    realization: realization counter of the random streams.
    n_fft: FFT length.
    duration: paths with longer delays are left out of the synthesis.
    transition: width of the raised-cosine band edges in Hz.
    threads: worker threads for the bin-parallel synthesis.
    paths: precomputed paths (default: enumerated from ``room``).
  Returns:
    The real impulse response, ``n_fft`` samples at ``room.fs``.
  """
  check_band(room, band, transition)
  if paths is None:
    paths = image_sources(room, max_delay=duration or n_fft / room.fs)
  elif duration is not None:
    paths = paths.select(paths.td <= duration)
  system = RoomSystem(room, spec, paths, error, beamformer)
  freqs = fft_frequencies(room, n_fft)
  window = bandpass_response(freqs, band, transition)
  active = np.nonzero(window > 0)[0]
  k = system.wavenumbers(freqs[active])

  def run_chunk(index):
    weights = beamforming.design_weights(spec, beamformer, k[index],
                                         system.model)
    return system.outputs(k[index], active[index], weights, realization,
                          with_errors=error.enabled)

  logging.info('Synthesizing %d bins over %d paths.', active.size, len(paths))
  spectrum = np.zeros(freqs.size, dtype=np.complex128)
  spectrum[active] = jax_utils.chunked_map(run_chunk, active.size,
                                           threads=threads) * window[active]
  return to_time_domain(spectrum, n_fft)


def room_upsilon(room: RoomSpec, spec: mimo.SystemSpec,
                 beamformer: beamforming.BeamformerSpec,
                 band: Sequence[float], error: mimo.ErrorModel,
                 bins: int = 100, duration: Optional[float] = 0.25,
                 threads: Optional[int] = None,
                 paths: Optional[ReflectionPaths] = None):
  """Beamforming error in the room over a log grid inside ``band``.

  The reference is the error-free, alias-free normalized room response; the
  measurement includes sampling, positioning errors and noise. Ratios are
  averaged over ``error.realizations``.

  Returns:
    ``(frequencies, upsilon)`` with linear-scale ratios.
  """
  if paths is None:
    paths = image_sources(room, max_delay=duration)
  system = RoomSystem(room, spec, paths, error, beamformer)
  freqs = np.geomspace(band[0], band[1], bins)
  k = system.wavenumbers(freqs)
  count = error.realizations if error.enabled else 1

  def run_chunk(index):
    weights = beamforming.design_weights(spec, beamformer, k[index],
                                         system.model)
    reference = system.outputs(k[index], index, weights, ideal=True)
    return np.stack([
        beamforming.output_error(
            reference, system.outputs(k[index], index, weights, r,
                                      with_errors=error.enabled))
        for r in range(count)], axis=0).T

  ratios = jax_utils.chunked_map(run_chunk, k.size, threads=threads)
  return freqs, beamforming.average_output_errors(list(ratios.T))
