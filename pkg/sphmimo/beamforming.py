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

"""Steering beamformers for the loudspeaker and microphone arrays.

Weights are designed in the normalized SH domain (``gamma`` for the
loudspeakers, ``lam`` for the microphones), where the system output is
``y = gamma^H Psi lam s``. Composing them with the modal normalization and the
sampling weights gives element weights that produce the same output from the
element-domain transfer matrix, ``y = space_gamma^T H space_lambda s``.
"""

from typing import Optional, Sequence

from absl import logging
import numpy as np

from . import errors
from . import geometry
from . import mimo
from . import radial
from . import sh
from . import struct

MAX_DI = 'max_di'
MAX_WNG = 'max_wng'

# Error-free outputs below this are excluded from the beamforming error.
_OUTPUT_GUARD = 1e-30


@struct.dataclass
class BeamformerSpec:
  look_sla: sh.Direction
  look_sma: sh.Direction
  kind: str = struct.field(pytree_node=False, default=MAX_DI)

  def __post_init__(self):
    if self.kind not in (MAX_DI, MAX_WNG):
      raise ValueError(f'Unknown beamformer {self.kind!r}.')


@struct.dataclass
class BeamWeights:
  """Beamforming weights, one row per frequency bin.

  Attributes:
    gamma: loudspeaker-side SH weights, ``(N_L + 1)**2`` per bin.
    lam: microphone-side SH weights, ``(N_M + 1)**2`` per bin.
    space_gamma: loudspeaker drive weights (S per bin), or None when the
      weights were designed without a frequency.
    space_lambda: microphone weights (R per bin), or None.
  """
  gamma: sh.SHVector
  lam: sh.SHVector
  space_gamma: Optional[np.ndarray] = None
  space_lambda: Optional[np.ndarray] = None


def _inverse_modal(array: mimo.ArraySpec, k) -> np.ndarray:
  modal = radial.modal_matrix(array.radial, k, array.order)
  return radial.modal_inverse(modal).expand()


def compose_space_weights(spec: mimo.SystemSpec, k, gamma: np.ndarray,
                          lam: np.ndarray,
                          model: Optional[mimo.SystemModel] = None):
  """Element weights equivalent to SH weights ``gamma``, ``lam`` at ``k``.

  ``space_gamma^T h_L = gamma^H G^-1 alpha_L h_L`` and
  ``h_M^H space_lambda = (B^-1 alpha_M h_M)^H lam``.
  """
  sla_mats = model.sla_mats if model else spec.sla.sampling_matrices()
  sma_mats = model.sma_mats if model else spec.sma.sampling_matrices()
  g_inv = _inverse_modal(spec.sla, k)
  b_inv = _inverse_modal(spec.sma, k)
  space_gamma = (np.conj(gamma) * g_inv) @ sla_mats.alpha
  space_lambda = np.conj((np.conj(lam) * b_inv) @ sma_mats.alpha)
  return space_gamma, space_lambda


def _finish(spec, k, gamma, lam, model):
  if k is None:
    return BeamWeights(gamma=sh.SHVector(coeffs=gamma, order=spec.sla.order),
                       lam=sh.SHVector(coeffs=lam, order=spec.sma.order))
  k = np.atleast_1d(np.asarray(k, dtype=np.float64))
  gamma = np.broadcast_to(gamma, k.shape + gamma.shape[-1:])
  lam = np.broadcast_to(lam, k.shape + lam.shape[-1:])
  space_gamma, space_lambda = compose_space_weights(spec, k, gamma, lam, model)
  return BeamWeights(
      gamma=sh.SHVector(coeffs=np.array(gamma), order=spec.sla.order),
      lam=sh.SHVector(coeffs=np.array(lam), order=spec.sma.order),
      space_gamma=space_gamma, space_lambda=space_lambda)


def max_di_weights(spec: mimo.SystemSpec, look_sla: sh.Direction,
                   look_sma: sh.Direction, k=None,
                   model: Optional[mimo.SystemModel] = None) -> BeamWeights:
  """Plane-wave decomposition beamformers steered at the look directions.

  The SH weights are frequency independent; element weights are added when
  ``k`` is given.
  """
  gamma = sh.sh_eval(look_sla, spec.sla.order).coeffs
  lam = sh.sh_eval(look_sma, spec.sma.order).coeffs
  return _finish(spec, k, gamma, lam, model)


def _wng_steering(array: mimo.ArraySpec, look: sh.Direction, k):
  modal = radial.modal_coefficients(array.radial, k, array.order)
  power = np.abs(modal) ** 2
  n = np.arange(array.order + 1)
  denominator = np.sum((2 * n + 1) / (4 * np.pi) * power, axis=-1)
  y = sh.sh_eval(look, array.order).coeffs
  expanded = power[..., sh.degree_of_flat(array.order)]
  return expanded * y / denominator[..., None]


def max_wng_weights(spec: mimo.SystemSpec, look_sla: sh.Direction,
                    look_sma: sh.Direction, k,
                    model: Optional[mimo.SystemModel] = None) -> BeamWeights:
  """Steering weighted by modal power.

  ``|g_n|^2 y(look) / sum (2n+1)/4pi |g_n|^2``.

  Equivalent to matched filtering before normalization, which maximizes the
  white-noise gain.
  """
  k = np.atleast_1d(np.asarray(k, dtype=np.float64))
  if np.any(k <= 0):
    raise ValueError('Wavenumbers must be positive.')
  gamma = _wng_steering(spec.sla, look_sla, k)
  lam = _wng_steering(spec.sma, look_sma, k)
  return _finish(spec, k, gamma, lam, model)


def design_weights(spec: mimo.SystemSpec, beamformer: BeamformerSpec, k,
                   model: Optional[mimo.SystemModel] = None) -> BeamWeights:
  if beamformer.kind == MAX_DI:
    return max_di_weights(spec, beamformer.look_sla, beamformer.look_sma, k,
                          model)
  return max_wng_weights(spec, beamformer.look_sla, beamformer.look_sma, k,
                         model)


def system_output(h_tilde, weights: BeamWeights, s=1.0):
  """``space_gamma^T H space_lambda s`` for element-domain transfer matrices.

  Args:
    h_tilde: ``(..., S, R)`` transfer matrices, one per bin.
    weights: weights with element-domain parts.
    s: input spectrum, scalar or one value per bin.
  Returns:
    Complex output per bin.
  Raises:
    DimensionMismatchError: shapes of weights and matrices disagree.
  """
  if weights.space_gamma is None or weights.space_lambda is None:
    raise ValueError('Weights carry no element-domain part; design them '
                     'with a wavenumber.')
  h_tilde = np.asarray(h_tilde)
  expected = (weights.space_gamma.shape[-1], weights.space_lambda.shape[-1])
  if h_tilde.shape[-2:] != expected:
    raise errors.DimensionMismatchError(expected, h_tilde.shape[-2:])
  y = np.einsum('...s,...sr,...r->...', weights.space_gamma, h_tilde,
                weights.space_lambda)
  return y * s


def sh_system_output(psi, weights: BeamWeights, s=1.0):
  """``gamma^H Psi lam s`` for normalized SH-domain matrices."""
  psi = np.asarray(psi)
  expected = (weights.gamma.coeffs.shape[-1], weights.lam.coeffs.shape[-1])
  if psi.shape[-2:] != expected:
    raise errors.DimensionMismatchError(expected, psi.shape[-2:])
  y = np.einsum('...l,...lm,...m->...', np.conj(weights.gamma.coeffs), psi,
                weights.lam.coeffs)
  return y * s


def bundle_outputs(bundle: mimo.TransferBundle, weights: BeamWeights):
  """Error-free and erroneous beamformer outputs for a bundle."""
  gamma = np.conj(weights.gamma.coeffs)
  lam = weights.lam.coeffs
  def output(psi_L, psi_M):
    return (np.sum(gamma * psi_L.coeffs, axis=-1)
            * np.sum(np.conj(psi_M.coeffs) * lam, axis=-1))
  return (output(bundle.psi_L, bundle.psi_M),
          output(bundle.psi_L_hat, bundle.psi_M_hat))


def output_error(reference, measured) -> np.ndarray:
  """``|reference - measured| / |reference|`` with guarded bins set to NaN."""
  reference = np.asarray(reference)
  magnitude = np.abs(reference)
  guarded = magnitude < _OUTPUT_GUARD
  ratio = np.abs(reference - measured) / np.where(guarded, 1.0, magnitude)
  return np.where(guarded, np.nan, ratio)


def average_output_errors(ratios: Sequence[np.ndarray]) -> np.ndarray:
  """Mean over realizations, in order, of per-bin output error ratios."""
  total = np.zeros_like(np.asarray(ratios[0], dtype=np.float64))
  for ratio in ratios:
    total = total + ratio
  mean = total / len(ratios)
  masked = np.isnan(mean)
  if np.all(masked):
    raise errors.DegenerateBeamResponseError()
  if np.any(masked):
    logging.warning('Beamforming error undefined at %d of %d bins.',
                    int(np.sum(masked)), masked.size)
  return mean


def upsilon(bundles: Sequence[mimo.TransferBundle],
            weights: BeamWeights) -> np.ndarray:
  """Beamforming error ``|gamma^H (Psi - Psi_hat) lam| / |gamma^H Psi lam|``.

  Args:
    bundles: one bundle per realization, all over the same bins.
    weights: beamforming weights at the bundles' orders.
  Returns:
    The realization average per bin; bins where the error-free output
    vanishes are NaN.
  """
  if isinstance(bundles, mimo.TransferBundle):
    bundles = [bundles]
  ratios = [output_error(*bundle_outputs(bundle, weights))
            for bundle in bundles]
  return average_output_errors(ratios)


def pattern_grid(step_deg: float = 1.0) -> sh.Direction:
  """Elevation-major grid with ``step_deg`` spacing, poles included."""
  theta = np.arange(0.0, 180.0 + step_deg / 2, step_deg)
  phi = np.arange(0.0, 360.0 - step_deg / 2, step_deg)
  theta_grid, phi_grid = np.meshgrid(theta, phi, indexing='ij')
  return sh.Direction.from_degrees(theta_grid.reshape(-1),
                                   phi_grid.reshape(-1))


def array_response(directions: sh.Direction, order: int,
                   modal: Optional[radial.ModalDiagonal] = None,
                   mats: Optional[geometry.SamplingMatrices] = None):
  """Normalized SH response of an array to far-field arrivals.

  Without sampling information this is ``y_N(direction)``. With the sampling
  matrices and the modal diagonal up to ``N_tilde`` at one frequency, the
  aliased orders are added: ``y_N + M^-1 epsilon (m_high * y_high)``.
  """
  if modal is None or mats is None:
    return sh.sh_matrix(directions, order)
  low = sh.num_coeffs(order)
  y = sh.sh_matrix(directions, mats.order_tilde)
  full = modal.expand()
  inverse = 1.0 / full[..., :low]
  aliased = inverse * ((full[..., low:] * y[..., low:]) @ mats.epsilon.T)
  return y[..., :low] + aliased


def beampattern(weights: sh.SHVector, directions: sh.Direction,
                look: sh.Direction,
                modal: Optional[radial.ModalDiagonal] = None,
                mats: Optional[geometry.SamplingMatrices] = None
                ) -> np.ndarray:
  """Beam power in dB at ``directions``, 0 dB at ``look``.

  Args:
    weights: SH weights of one array at one frequency.
    directions: evaluation directions.
    look: normalization direction.
    modal: modal diagonal up to ``N_tilde`` at the pattern frequency.
    mats: sampling matrices of the array; with ``modal`` adds aliasing.
  Returns:
    Power in dB with the shape of ``directions.theta``.
  """
  w = np.conj(np.asarray(weights.coeffs))
  response = array_response(directions, weights.order, modal, mats) @ w
  reference = array_response(look, weights.order, modal, mats) @ w
  power = np.abs(response) ** 2 / np.abs(reference) ** 2
  return 10.0 * np.log10(np.maximum(power, 1e-300))


def white_noise_gain(gamma: sh.SHVector, look: sh.Direction,
                     modal_values) -> float:
  """``|gamma^H y(look)|^2 / sum |gamma|^2 / |m_n|^2`` for one bin."""
  coeffs = np.asarray(gamma.coeffs)
  modal = np.asarray(modal_values)[sh.degree_of_flat(gamma.order)]
  y = sh.sh_eval(look, gamma.order).coeffs
  signal = np.abs(np.vdot(coeffs, y)) ** 2
  return float(signal / np.sum(np.abs(coeffs) ** 2 / np.abs(modal) ** 2))


def directivity_index(weights: sh.SHVector, look: sh.Direction) -> float:
  """Directivity index in dB, by Gauss-Legendre quadrature of the pattern."""
  grid = geometry.make_gaussian_grid(weights.order)
  w = np.conj(np.asarray(weights.coeffs))
  response = sh.sh_matrix(grid.directions, weights.order) @ w
  peak = np.abs(sh.sh_eval(look, weights.order).coeffs @ w) ** 2
  integral = np.sum(grid.weights * np.abs(response) ** 2)
  return float(10.0 * np.log10(4.0 * np.pi * peak / integral))
