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

"""Free-field transfer model of a loudspeaker-array / microphone-array pair.

The loudspeaker array (SLA) radiates towards the microphone array (SMA) at
distance ``r0``, direction of radiation ``dor`` and direction of arrival
``doa``. In the SH domain and after normalization by the modal coefficients,
each side reduces to a steering vector plus two error terms::

  psi_hat = psi + z + n

where ``z`` collects the orders above ``N`` folded back by sampling (aliasing
at the SMA, spurious harmonics at the SLA) and ``n`` is the normalized
transducer noise. The normalized system matrix is the outer product
``Psi = psi_L psi_M^H``.

All functions accept a vector of wavenumbers and return arrays with a leading
bin axis.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from . import errors
from . import geometry
from . import jax_utils
from . import radial as radial_lib
from . import sh
from . import struct


@struct.dataclass
class ArraySpec:
  """One spherical array.

  Attributes:
    radial: sphere radius, role and cap size.
    scheme: element layout.
    order: controlled SH order ``N``.
    order_tilde: representation order ``N_tilde`` of the sound field model.
    design_order: order the sampling weights were designed for; differs from
      ``order`` after order reduction, where the weights are truncated.
  """
  scheme: geometry.SamplingScheme
  radial: radial_lib.RadialSpec = struct.field(pytree_node=False)
  order: int = struct.field(pytree_node=False)
  order_tilde: int = struct.field(pytree_node=False)
  design_order: Optional[int] = struct.field(pytree_node=False, default=None)

  def __post_init__(self):
    if self.order < 0:
      raise errors.InvalidArraySpecError(
          f'Order must be >= 0, got {self.order}.')
    needed = sh.num_coeffs(self.weights_order)
    if needed > self.scheme.count:
      raise errors.InvalidArraySpecError(
          f'Order {self.weights_order} needs {needed}'
          f' elements, the layout has {self.scheme.count}.')
    if self.order_tilde < self.weights_order:
      raise errors.InvalidArraySpecError(
          f'N_tilde={self.order_tilde} must be >= N={self.weights_order}.')
    if self.weights_order < self.order:
      raise errors.InvalidArraySpecError(
          f'Design order {self.weights_order} is below order {self.order}.')

  @property
  def weights_order(self) -> int:
    return self.order if self.design_order is None else self.design_order

  @property
  def role(self) -> str:
    return self.radial.array_role

  @property
  def conjugate(self) -> bool:
    return self.role == radial_lib.SMA

  @property
  def element_count(self) -> int:
    return self.scheme.count

  def sampling_matrices(self) -> geometry.SamplingMatrices:
    mats = geometry.compute_sampling_matrices(
        self.scheme, self.weights_order, self.order_tilde, self.conjugate)
    return geometry.truncate_alpha(mats, self.order)


@struct.dataclass
class SystemSpec:
  sla: ArraySpec
  sma: ArraySpec
  dor: sh.Direction
  doa: sh.Direction
  r0: float = struct.field(pytree_node=False)
  speed_of_sound: float = struct.field(pytree_node=False, default=343.0)

  def __post_init__(self):
    if self.sla.role != radial_lib.SLA or self.sma.role != radial_lib.SMA:
      raise errors.InvalidSystemSpecError(
          'Expected a loudspeaker array and a microphone array.')
    if not self.r0 > self.sla.radial.radius + self.sma.radial.radius:
      raise errors.InvalidSystemSpecError(
          f'r0={self.r0} m does not exceed the sum of the array radii.')
    if not self.speed_of_sound > 0:
      raise errors.InvalidSystemSpecError('Speed of sound must be positive.')

  def wavenumber(self, frequency):
    return 2.0 * np.pi * np.asarray(frequency, dtype=np.float64) / (
        self.speed_of_sound)


@struct.dataclass
class ErrorModel:
  """Transducer noise and element positioning errors.

  Attributes:
    enabled: inject errors at all.
    snr_db: element noise power below the mean element power of the
      error-free space-domain transfer vector at ``calib_freq_hz``.
    calib_freq_hz: calibration frequency of the noise power.
    realizations: number of noise realizations averaged by the analyses.
    rng_seed: seed of the counter-based random streams.
    positioning_deg: half-width of the uniform error on each element angle.
  """
  enabled: bool = struct.field(pytree_node=False, default=True)
  snr_db: float = struct.field(pytree_node=False, default=40.0)
  calib_freq_hz: float = struct.field(pytree_node=False, default=1000.0)
  realizations: int = struct.field(pytree_node=False, default=30)
  rng_seed: int = struct.field(pytree_node=False, default=0)
  positioning_deg: float = struct.field(pytree_node=False, default=0.0)

  def __post_init__(self):
    if self.realizations < 1:
      raise ValueError(
          f'realizations must be >= 1, got {self.realizations}.')
    if self.positioning_deg < 0:
      raise ValueError('positioning_deg must be >= 0.')

  @classmethod
  def disabled(cls) -> 'ErrorModel':
    return cls(enabled=False, realizations=1)


@struct.dataclass
class TransferBundle:
  """Normalized SH transfer vectors of both arrays, one row per bin."""
  psi_L: sh.SHVector
  psi_M: sh.SHVector
  psi_L_hat: sh.SHVector
  psi_M_hat: sh.SHVector
  z_L: sh.SHVector
  z_M: sh.SHVector
  n_L: sh.SHVector
  n_M: sh.SHVector


@struct.dataclass
class SystemModel:
  """Per-run precomputation: sampling matrices and calibrated noise powers."""
  sla_mats: geometry.SamplingMatrices
  sma_mats: geometry.SamplingMatrices
  noise_var_L: float
  noise_var_M: float
  spec: SystemSpec = struct.field(pytree_node=False)
  error: ErrorModel = struct.field(pytree_node=False)


def _as_bins(k):
  k = np.asarray(k, dtype=np.float64)
  return np.atleast_1d(k), k.ndim == 0


def steering_vector(direction: sh.Direction, order: int,
                    r0: Optional[float] = None, k=None,
                    include_propagation: bool = False) -> sh.SHVector:
  """``y_N(direction)``, times ``e^{ikr0} / r0`` on the loudspeaker side.

  With ``include_propagation`` the result has the shape of ``k`` plus the
  coefficient axis.
  """
  y = sh.sh_eval(direction, order).coeffs
  if not include_propagation:
    return sh.SHVector(coeffs=y, order=order)
  if r0 is None or k is None:
    raise ValueError('Propagation needs both r0 and k.')
  k = np.asarray(k, dtype=np.float64)
  if np.any(k <= 0):
    raise ValueError('Wavenumbers must be positive.')
  factor = np.exp(1j * k * r0) / r0
  return sh.SHVector(coeffs=factor[..., None] * y, order=order)


def _steering_tilde(spec: SystemSpec, array: ArraySpec, k):
  if array.role == radial_lib.SLA:
    return steering_vector(spec.dor, array.order_tilde, spec.r0, k,
                           include_propagation=True).coeffs
  y = steering_vector(spec.doa, array.order_tilde).coeffs
  return np.broadcast_to(y, k.shape + y.shape[-1:])


def _modal_weighted(spec: SystemSpec, array: ArraySpec, k):
  # G~ psi~ (SLA) or B~ psi~ (SMA), shape (bins, (N_tilde + 1)^2)
  modal = radial_lib.modal_matrix(array.radial, k, array.order_tilde)
  return modal, modal.expand() * _steering_tilde(spec, array, k)


def noise_variances(spec: SystemSpec, error: ErrorModel,
                    sla_mats: Optional[geometry.SamplingMatrices] = None,
                    sma_mats: Optional[geometry.SamplingMatrices] = None
                    ) -> Tuple[float, float]:
  """Element noise variances of both arrays.

  Each is the mean element power of the error-free space-domain transfer
  vector at the calibration frequency, lowered by ``snr_db``.
  """
  if not error.enabled:
    return 0.0, 0.0
  sla_mats = sla_mats or spec.sla.sampling_matrices()
  sma_mats = sma_mats or spec.sma.sampling_matrices()
  k_cal = spec.wavenumber([error.calib_freq_hz])
  scale = 10.0 ** (-error.snr_db / 10.0)
  variances = []
  for array, mats in ((spec.sla, sla_mats), (spec.sma, sma_mats)):
    _, weighted = _modal_weighted(spec, array, k_cal)
    h = weighted @ mats.basis.T
    variances.append(float(np.mean(np.abs(h) ** 2) * scale))
  return variances[0], variances[1]


def build_system_model(spec: SystemSpec, error: ErrorModel) -> SystemModel:
  sla_mats = spec.sla.sampling_matrices()
  sma_mats = spec.sma.sampling_matrices()
  var_L, var_M = noise_variances(spec, error, sla_mats, sma_mats)
  return SystemModel(sla_mats=sla_mats, sma_mats=sma_mats, noise_var_L=var_L,
                     noise_var_M=var_M, spec=spec, error=error)


def _noise(model: SystemModel, array: ArraySpec, realization: int, bins):
  role = jax_utils.SLA_NOISE if array.role == radial_lib.SLA else (
      jax_utils.SMA_NOISE)
  variance = model.noise_var_L if array.role == radial_lib.SLA else (
      model.noise_var_M)
  if not model.error.enabled or variance == 0:
    return np.zeros((len(bins), array.element_count), dtype=np.complex128)
  unit = jax_utils.bin_noise(model.error.rng_seed, role, realization, bins,
                             array.element_count)
  return np.sqrt(variance) * unit


def actual_basis(model: SystemModel, array: ArraySpec,
                 mats: geometry.SamplingMatrices, realization: int):
  # Element harmonics at perturbed positions, or None without positioning error.
  error = model.error
  if not error.enabled or error.positioning_deg == 0:
    return None
  role = jax_utils.SLA_POSITION if array.role == radial_lib.SLA else (
      jax_utils.SMA_POSITION)
  offsets = jax_utils.angle_offsets(error.rng_seed, role, realization,
                                    array.element_count,
                                    np.deg2rad(error.positioning_deg))
  actual = array.scheme.directions.perturbed(offsets[:, 0], offsets[:, 1])
  return geometry.element_basis(actual, mats.order_tilde, array.conjugate)


def _resolve(spec, error, model, k, bins):
  if model is None:
    model = build_system_model(spec, error)
  k, scalar = _as_bins(k)
  bins = np.arange(k.size) if bins is None else np.atleast_1d(bins)
  if bins.shape != k.shape:
    raise ValueError('Expected one bin index per wavenumber.')
  return model, k, bins, scalar


def space_transfer_vectors(spec: SystemSpec, k, error: ErrorModel,
                           realization: int = 0,
                           bins: Optional[Sequence[int]] = None,
                           model: Optional[SystemModel] = None):
  """Element-domain transfer vectors ``h_L`` (S entries) and ``h_M`` (R).

  Args:
    spec: the system.
    k: wavenumber or vector of wavenumbers.
    error: error model; ignored in favour of ``model.error`` when a model is
      given.
    realization: realization counter of the random streams.
    bins: bin index of every wavenumber (default ``0..len(k)-1``); noise
      depends on (seed, realization, bin) only.
    model: precomputed `SystemModel`.
  Returns:
    ``(h_L, h_M)`` with a leading bin axis unless ``k`` is a scalar.
  """
  model, k, bins, scalar = _resolve(spec, error, model, k, bins)
  outputs = []
  for array, mats in ((spec.sla, model.sla_mats), (spec.sma, model.sma_mats)):
    _, weighted = _modal_weighted(spec, array, k)
    basis = actual_basis(model, array, mats, realization)
    basis = mats.basis if basis is None else basis
    h = weighted @ basis.T + _noise(model, array, realization, bins)
    outputs.append(h[0] if scalar else h)
  return tuple(outputs)


def _array_terms(spec, model, array, mats, k, bins, realization):
  low = sh.num_coeffs(array.order)
  modal, weighted = _modal_weighted(spec, array, k)
  inverse = radial_lib.modal_inverse(modal.truncate(array.order)).expand()
  psi = _steering_tilde(spec, array, k)[:, :low]
  actual = actual_basis(model, array, mats, realization)
  if actual is None:
    z = inverse * (weighted[:, low:] @ mats.epsilon.T)
  else:
    z = inverse * (weighted @ (mats.alpha @ actual).T) - psi
  noise = _noise(model, array, realization, bins)
  n = inverse * (noise @ mats.alpha.T)
  return psi, z, n


def sh_transfer_vectors(spec: SystemSpec, k, error: ErrorModel,
                        realization: int = 0,
                        bins: Optional[Sequence[int]] = None,
                        model: Optional[SystemModel] = None) -> TransferBundle:
  """Normalized SH transfer vectors and their error decomposition.

  Arguments as in `space_transfer_vectors`.

  Raises:
    ModalConditioningError: a modal coefficient falls below the floor.
  """
  model, k, bins, scalar = _resolve(spec, error, model, k, bins)
  psi_L, z_L, n_L = _array_terms(spec, model, spec.sla, model.sla_mats, k,
                                 bins, realization)
  psi_M, z_M, n_M = _array_terms(spec, model, spec.sma, model.sma_mats, k,
                                 bins, realization)

  def vec(x, array):
    return sh.SHVector(coeffs=x[0] if scalar else x, order=array.order)

  return TransferBundle(
      psi_L=vec(psi_L, spec.sla), psi_M=vec(psi_M, spec.sma),
      psi_L_hat=vec(psi_L + z_L + n_L, spec.sla),
      psi_M_hat=vec(psi_M + z_M + n_M, spec.sma),
      z_L=vec(z_L, spec.sla), z_M=vec(z_M, spec.sma),
      n_L=vec(n_L, spec.sla), n_M=vec(n_M, spec.sma))


def normalized_system_matrix(bundle: TransferBundle):
  """``(Psi_hat, Psi)``, the outer products of the normalized vectors."""
  def outer(left, right):
    return left.coeffs[..., :, None] * np.conj(right.coeffs[..., None, :])
  return (outer(bundle.psi_L_hat, bundle.psi_M_hat),
          outer(bundle.psi_L, bundle.psi_M))
