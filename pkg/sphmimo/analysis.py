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

"""Error measures, operating frequency ranges and system matching.

Per frequency bin the normalized system error is

  delta = ||Psi - Psi_hat||_2 / ||Psi||_2,

and the array errors ``delta_L``, ``delta_M`` and their aliasing (``a``) and
noise (``m``) bounds are norm ratios of the terms of
``psi_hat = psi + z + n``. The operating frequency range (OFR) of a measure is
where it stays below a threshold.
"""

import math
from typing import List, Optional, Sequence, Tuple

from absl import logging
import jax
import jax.numpy as jnp
import numpy as np

from . import errors
from . import jax_utils
from . import mimo
from . import radial
from . import struct

LOG = 'log'
LINEAR = 'linear'

# dB value reported for an exactly zero ratio.
DB_FLOOR = -300.0

CURVE_NAMES = ('delta', 'delta_L', 'delta_M', 'a_L', 'm_L', 'a_M', 'm_M')


def to_db(ratio) -> np.ndarray:
  """``20 log10`` of a norm ratio, floored at `DB_FLOOR`."""
  ratio = np.asarray(ratio, dtype=np.float64)
  return np.maximum(20.0 * np.log10(np.maximum(ratio, 1e-300)), DB_FLOOR)


@struct.dataclass
class FrequencyGrid:
  f_min: float = struct.field(pytree_node=False)
  f_max: float = struct.field(pytree_node=False)
  bins: int = struct.field(pytree_node=False, default=200)
  spacing: str = struct.field(pytree_node=False, default=LOG)

  def __post_init__(self):
    if not 0 < self.f_min < self.f_max:
      raise ValueError(f'Need 0 < f_min < f_max, got {self.f_min}, '
                       f'{self.f_max}.')
    if self.bins < 2:
      raise ValueError(f'Need at least 2 bins, got {self.bins}.')
    if self.spacing not in (LOG, LINEAR):
      raise ValueError(f'Unknown spacing {self.spacing!r}.')

  def frequencies(self) -> np.ndarray:
    if self.spacing == LOG:
      return np.geomspace(self.f_min, self.f_max, self.bins)
    return np.linspace(self.f_min, self.f_max, self.bins)

  def wavenumbers(self, speed_of_sound: float) -> np.ndarray:
    return 2.0 * np.pi * self.frequencies() / speed_of_sound

  def half_bin_log(self) -> float:
    """Half the largest bin spacing, in natural-log frequency."""
    return 0.5 * float(np.max(np.diff(np.log(self.frequencies()))))


class ErrorCurves(struct.PyTreeNode):
  """Linear-scale error ratios per bin, averaged over realizations."""
  frequencies: np.ndarray
  delta: np.ndarray
  delta_L: np.ndarray
  delta_M: np.ndarray
  a_L: np.ndarray
  m_L: np.ndarray
  a_M: np.ndarray
  m_M: np.ndarray
  realizations: int = struct.field(pytree_node=False, default=1)

  def in_db(self, name: str) -> np.ndarray:
    return to_db(getattr(self, name))

  @classmethod
  def empty(cls, bins: int) -> 'ErrorCurves':
    """A template of the right shape, e.g. for `serialization.from_bytes`."""
    zeros = np.zeros(bins)
    return cls(frequencies=zeros, **{name: zeros for name in CURVE_NAMES})


@struct.dataclass
class OFRInterval:
  intervals: Tuple[Tuple[float, float], ...] = struct.field(
      pytree_node=False, default=())
  sigma_db: float = struct.field(pytree_node=False, default=0.0)

  def __bool__(self):
    return bool(self.intervals)

  def to_json(self) -> List[dict]:
    return [{'lo': float(lo), 'hi': float(hi)} for lo, hi in self.intervals]


def select_N_tilde(spec: mimo.SystemSpec, f_max: float) -> int:  # pylint: disable=invalid-name
  """``ceil(max(r_M, r_L) 2 pi f_max / c) + 2``."""
  if not f_max > 0:
    raise ValueError(f'f_max must be positive, got {f_max}.')
  radius = max(spec.sla.radial.radius, spec.sma.radial.radius)
  return select_order_tilde(radius, f_max, spec.speed_of_sound)


def select_order_tilde(radius: float, f_max: float,
                       speed_of_sound: float) -> int:
  return int(math.ceil(radius * 2.0 * math.pi * f_max / speed_of_sound)) + 2


@jax.jit
def _bin_ratios(psi_L, z_L, n_L, psi_M, z_M, n_M):
  """Error ratios for a batch of bins of one realization."""
  norm_L = jnp.linalg.norm(psi_L, axis=-1)
  norm_M = jnp.linalg.norm(psi_M, axis=-1)
  e_L = z_L + n_L
  e_M = z_M + n_M
  # Psi_hat - Psi = [psi_L, e_L] [e_M, psi_M + e_M]^H; its spectral norm is
  # that of the product of the triangular factors.
  left = jnp.stack([psi_L, e_L], axis=-1)
  right = jnp.stack([e_M, psi_M + e_M], axis=-1)
  _, r_left = jnp.linalg.qr(left)
  _, r_right = jnp.linalg.qr(right)
  core = r_left @ jnp.conj(jnp.swapaxes(r_right, -1, -2))
  spectral = jnp.linalg.svd(core, compute_uv=False)[..., 0]
  return jnp.stack([
      spectral / (norm_L * norm_M),
      jnp.linalg.norm(e_L, axis=-1) / norm_L,
      jnp.linalg.norm(e_M, axis=-1) / norm_M,
      jnp.linalg.norm(z_L, axis=-1) / norm_L,
      jnp.linalg.norm(n_L, axis=-1) / norm_L,
      jnp.linalg.norm(z_M, axis=-1) / norm_M,
      jnp.linalg.norm(n_M, axis=-1) / norm_M,
  ], axis=-1)


def bundle_ratios(bundle: mimo.TransferBundle) -> np.ndarray:
  """Ratios in `CURVE_NAMES` order for every bin of a bundle."""
  return np.asarray(_bin_ratios(
      bundle.psi_L.coeffs, bundle.z_L.coeffs, bundle.n_L.coeffs,
      bundle.psi_M.coeffs, bundle.z_M.coeffs, bundle.n_M.coeffs))


def _realization_count(error: mimo.ErrorModel) -> int:
  return error.realizations if error.enabled else 1


def realization_errors(spec: mimo.SystemSpec, grid: FrequencyGrid,
                       error: mimo.ErrorModel,
                       model: Optional[mimo.SystemModel] = None,
                       threads: Optional[int] = None) -> np.ndarray:
  """Per-realization ratios, shape ``(realizations, bins, 7)``."""
  model = model or mimo.build_system_model(spec, error)
  k = grid.wavenumbers(spec.speed_of_sound)
  count = _realization_count(error)

  def run_chunk(bins):
    out = np.empty((len(bins), count, len(CURVE_NAMES)))
    for r in range(count):
      bundle = mimo.sh_transfer_vectors(spec, k[bins], error, r, bins=bins,
                                        model=model)
      out[:, r] = bundle_ratios(bundle)
    return out

  ratios = jax_utils.chunked_map(run_chunk, k.size, threads=threads)
  return np.swapaxes(ratios, 0, 1)


def error_curves(spec: mimo.SystemSpec, grid: FrequencyGrid,
                 error: mimo.ErrorModel,
                 threads: Optional[int] = None) -> ErrorCurves:
  """Realization-averaged error ratios over ``grid``.

  Args:
    spec: the system.
    grid: analysis frequencies.
    error: error model; with errors disabled a single noise-free realization
      is evaluated.
    threads: worker threads for the bin-parallel evaluation.
  Returns:
    The averaged curves (linear scale).
  """
  model = mimo.build_system_model(spec, error)
  logging.info('Noise variances: SLA %.3e, SMA %.3e.', model.noise_var_L,
               model.noise_var_M)
  ratios = realization_errors(spec, grid, error, model, threads)
  # Summation over realizations in index order.
  mean = np.zeros(ratios.shape[1:])
  for r in range(ratios.shape[0]):
    mean += ratios[r]
  mean /= ratios.shape[0]
  logging.info('Evaluated %d bins x %d realizations.', ratios.shape[1],
               ratios.shape[0])
  curves = {name: mean[:, i] for i, name in enumerate(CURVE_NAMES)}
  return ErrorCurves(frequencies=grid.frequencies(),
                     realizations=ratios.shape[0], **curves)


def _crossing(freqs, curve, a, b, sigma):
  t = (sigma - curve[a]) / (curve[b] - curve[a])
  log_f = np.log(freqs[a]) + t * (np.log(freqs[b]) - np.log(freqs[a]))
  return float(np.exp(log_f))


def compute_ofr(frequencies, curve_db, sigma_db: float) -> OFRInterval:
  """Maximal frequency intervals where ``curve_db <= sigma_db``.

  Interval edges between bins are interpolated linearly in
  (log frequency, dB); runs touching the first or last bin end there.
  """
  freqs = np.asarray(frequencies, dtype=np.float64)
  curve = np.asarray(curve_db, dtype=np.float64)
  if not np.all(np.isfinite(curve)):
    raise ValueError('Error curve must be finite.')
  inside = curve <= sigma_db
  intervals = []
  last = len(curve) - 1
  i = 0
  while i <= last:
    if not inside[i]:
      i += 1
      continue
    start = i
    while i < last and inside[i + 1]:
      i += 1
    lo = freqs[0] if start == 0 else _crossing(freqs, curve, start - 1, start,
                                               sigma_db)
    hi = freqs[last] if i == last else _crossing(freqs, curve, i, i + 1,
                                                 sigma_db)
    intervals.append((float(lo), float(hi)))
    i += 1
  return OFRInterval(intervals=tuple(intervals), sigma_db=sigma_db)


def intersect_ofr(a: OFRInterval, b: OFRInterval) -> OFRInterval:
  if a.sigma_db != b.sigma_db:
    raise ValueError('Cannot intersect OFRs of different thresholds.')
  intervals = []
  for a_lo, a_hi in a.intervals:
    for b_lo, b_hi in b.intervals:
      lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
      if lo <= hi:
        intervals.append((lo, hi))
  return OFRInterval(intervals=tuple(sorted(intervals)), sigma_db=a.sigma_db)


def _is_subset(inner: OFRInterval, outer: OFRInterval, tolerance: float):
  for lo, hi in inner.intervals:
    if not any(math.log(o_lo) <= math.log(lo) + tolerance
               and math.log(hi) <= math.log(o_hi) + tolerance
               for o_lo, o_hi in outer.intervals):
      return False
  return True


def is_matched(o_l: OFRInterval, o_m: OFRInterval,
               tolerance: float = 0.0) -> bool:
  """Whether one array's OFR contains the other's.

  An empty OFR matches nothing: a system with an unusable array is not
  matched.

  Args:
    o_l: loudspeaker-array OFR.
    o_m: microphone-array OFR.
    tolerance: endpoint slack in natural-log frequency, typically
      `FrequencyGrid.half_bin_log`.
  """
  if o_l.sigma_db != o_m.sigma_db:
    raise ValueError('Cannot compare OFRs of different thresholds.')
  if not o_l or not o_m:
    return False
  return (_is_subset(o_l, o_m, tolerance) or _is_subset(o_m, o_l, tolerance))


def matching_criterion(spec: mimo.SystemSpec) -> float:
  """``|r_M N_L - r_L N_M|``."""
  r_L, r_M = spec.sla.radial.radius, spec.sma.radial.radius
  return abs(r_M * spec.sla.order - r_L * spec.sma.order)


def reduce_order(spec: mimo.SystemSpec) -> Tuple[str, int]:
  """Side and reduced order that best satisfy ``r_M N_L = r_L N_M``.

  The array whose order is too high for its radius is reduced: the
  loudspeaker array if ``r_M N_L > r_L N_M``, else the microphone array.
  Among orders ``<= N`` the one with the smallest residual wins, the larger
  one on ties.

  Raises:
    OrderReductionNotNeededError: the criterion already holds.
  """
  r_L, r_M = spec.sla.radial.radius, spec.sma.radial.radius
  N_L, N_M = spec.sla.order, spec.sma.order  # pylint: disable=invalid-name
  residual = matching_criterion(spec)
  if math.isclose(residual, 0.0, abs_tol=1e-12):
    raise errors.OrderReductionNotNeededError(residual)
  if r_M * N_L > r_L * N_M:
    side, top = radial.SLA, N_L
    residuals = [abs(r_M * n - r_L * N_M) for n in range(top + 1)]
  else:
    side, top = radial.SMA, N_M
    residuals = [abs(r_M * N_L - r_L * n) for n in range(top + 1)]
  best = min(residuals)
  order = max(n for n, value in enumerate(residuals) if value <= best + 1e-12)
  logging.info('Order reduction: %s order %d -> %d (residual %.3g -> %.3g).',
               side, top, order, residual, residuals[order])
  return side, order


def reduced_system(spec: mimo.SystemSpec, side: str,
                   order: int) -> mimo.SystemSpec:
  """``spec`` with one array's controlled order lowered to ``order``.

  The sampling weights keep their design order and are truncated.
  """
  array = spec.sla if side == radial.SLA else spec.sma
  reduced = array.replace(order=order, design_order=array.weights_order)
  if side == radial.SLA:
    return spec.replace(sla=reduced)
  return spec.replace(sma=reduced)
