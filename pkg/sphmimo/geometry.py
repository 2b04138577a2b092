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

"""Element layouts on the sphere and their sampling-weight matrices.

An array with elements at directions ``e_1..e_E`` samples SH coefficients
through the matrix ``Y`` whose rows are ``y(e_i)`` (loudspeakers) or
``conj(y(e_i))`` (microphones). The sampling weights ``alpha`` invert the
low-order block of ``Y``; whatever ``alpha`` makes of the higher orders is the
aliasing (microphones) or spurious-harmonics (loudspeakers) matrix
``epsilon``::

  alpha @ Y = [I  epsilon]
"""

import os
from typing import Optional

from absl import logging
import numpy as np

from . import errors
from . import sh
from . import struct


GAUSSIAN = 'gaussian'
UNIFORM = 'uniform'
CUSTOM = 'custom'

# (tilt, azimuth) of the axis of the uniform spiral, in radians.
_SPIRAL_AXIS = (np.arccos(1.0 / np.sqrt(3.0)), np.pi / 4.0)

# Residuals above this are logged; they are reported either way.
_RESIDUAL_WARNING = 1e-6


@struct.dataclass
class SamplingScheme:
  directions: sh.Direction
  weights: Optional[np.ndarray]
  kind: str = struct.field(pytree_node=False)
  order: Optional[int] = struct.field(pytree_node=False, default=None)

  @property
  def count(self) -> int:
    return len(self.directions)


def make_gaussian_grid(order: int) -> SamplingScheme:
  """Gauss-Legendre elevations times equiangular azimuths.

  ``order + 1`` elevation nodes and ``2 (order + 1)`` azimuths integrate
  products of harmonics up to ``order`` exactly.

  Args:
    order: highest SH order the grid must transform exactly.
  Returns:
    A scheme with ``2 (order + 1)**2`` directions, elevation-major, and
    quadrature weights summing to ``4 pi``.
  """
  if order < 0:
    raise ValueError(f'Grid order must be >= 0, got {order}.')
  nodes, gl_weights = np.polynomial.legendre.leggauss(order + 1)
  azimuths = np.pi * np.arange(2 * (order + 1)) / (order + 1)
  theta = np.repeat(np.arccos(nodes), azimuths.size)
  phi = np.tile(azimuths, nodes.size)
  weights = np.repeat(gl_weights * np.pi / (order + 1), azimuths.size)
  return SamplingScheme(directions=sh.Direction.create(theta, phi),
                        weights=weights, kind=GAUSSIAN, order=order)


def make_uniform_grid(count: int) -> SamplingScheme:
  """A tilted Fibonacci spiral of ``count`` nearly uniform directions.

  Points sit at the centers of ``count`` equal-area bands in ``z`` and
  advance by the golden angle in azimuth. The spiral axis is then turned to
  `_SPIRAL_AXIS`, so the layout has no element and no axis of symmetry at the
  poles, where the arrays of a pair usually face each other. A single
  element sits at the north pole.
  """
  if count < 1:
    raise ValueError(f'Uniform grid needs at least one element, got {count}.')
  if count == 1:
    return SamplingScheme(directions=sh.Direction.create(np.zeros(1),
                                                         np.zeros(1)),
                          weights=None, kind=UNIFORM)
  index = np.arange(count)
  z = 1.0 - (2.0 * index + 1.0) / count
  rho = np.sqrt(1.0 - z ** 2)
  golden_angle = np.pi * (3.0 - np.sqrt(5.0))
  phi = golden_angle * index
  points = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
  tilt, turn = _SPIRAL_AXIS
  rot_y = np.array([[np.cos(tilt), 0.0, np.sin(tilt)],
                    [0.0, 1.0, 0.0],
                    [-np.sin(tilt), 0.0, np.cos(tilt)]])
  rot_z = np.array([[np.cos(turn), -np.sin(turn), 0.0],
                    [np.sin(turn), np.cos(turn), 0.0],
                    [0.0, 0.0, 1.0]])
  points = points @ (rot_z @ rot_y).T
  return SamplingScheme(directions=sh.Direction.from_cartesian(points),
                        weights=None, kind=UNIFORM)


def load_custom_grid(path: str) -> SamplingScheme:
  """Reads a ``theta_deg,phi_deg`` CSV with a header row."""
  with open(path, encoding='utf-8') as f:
    header = f.readline().strip().replace(' ', '')
  if header != 'theta_deg,phi_deg':
    raise ValueError(f'{path}: expected header "theta_deg,phi_deg", '
                     f'got "{header}".')
  data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
  if data.shape[0] == 0 or data.shape[1] != 2:
    raise ValueError(f'{path}: expected one "theta,phi" row per element.')
  logging.info('Loaded %d element directions from %s.', data.shape[0],
               os.path.basename(path))
  return SamplingScheme(
      directions=sh.Direction.from_degrees(data[:, 0], data[:, 1]),
      weights=None, kind=CUSTOM)


@struct.dataclass
class SamplingMatrices:
  """Sampling weights ``alpha`` and the high-order block ``epsilon``.

  Attributes:
    alpha: ``(N + 1)**2 x E`` sampling weights.
    epsilon: ``(N + 1)**2 x ((N_tilde + 1)**2 - (N + 1)**2)`` matrix.
    basis: ``E x (N_tilde + 1)**2`` harmonics at the elements (conjugated for
      microphone arrays), the ``Y`` of ``alpha @ Y = [I epsilon]``.
    identity_residual: ``max |alpha @ Y_low - I|``.
    order: controlled order ``N``.
    order_tilde: representation order ``N_tilde``.
  """
  alpha: np.ndarray
  epsilon: np.ndarray
  basis: np.ndarray
  identity_residual: float
  order: int = struct.field(pytree_node=False)
  order_tilde: int = struct.field(pytree_node=False)

  @property
  def expanded(self) -> np.ndarray:
    """``alpha @ Y`` assembled from the identity and ``epsilon`` blocks."""
    low = sh.num_coeffs(self.order)
    return np.concatenate([np.eye(low), self.epsilon], axis=1)


def element_basis(directions: sh.Direction, order_tilde: int,
                  conjugate: bool = False) -> np.ndarray:
  basis = sh.sh_matrix(directions, order_tilde)
  return np.conj(basis) if conjugate else basis


def _matrices_from_alpha(alpha, basis, order, order_tilde):
  low = sh.num_coeffs(order)
  residual = float(np.max(np.abs(alpha @ basis[:, :low] - np.eye(low))))
  epsilon = alpha @ basis[:, low:]
  return SamplingMatrices(alpha=alpha, epsilon=epsilon, basis=basis,
                          identity_residual=residual, order=order,
                          order_tilde=order_tilde)


def compute_sampling_matrices(scheme: SamplingScheme, order: int,
                              order_tilde: int,
                              conjugate: bool = False) -> SamplingMatrices:
  """Sampling weights for ``scheme`` at controlled order ``order``.

  Gaussian grids of sufficient order use their quadrature weights; any other
  layout uses the pseudoinverse of the low-order block of the basis.

  Args:
    scheme: element layout.
    order: controlled SH order ``N``.
    order_tilde: representation order ``N_tilde >= N``.
    conjugate: sample with ``conj(y)`` rows, the microphone convention.
  Returns:
    The sampling matrices.
  Raises:
    InvalidArraySpecError: the orders are inconsistent with the layout.
    SamplingRankError: the layout cannot resolve order ``order``.
  """
  low = sh.num_coeffs(order)
  if order_tilde < order:
    raise errors.InvalidArraySpecError(
        f'N_tilde={order_tilde} must be >= N={order}.')
  if low > scheme.count:
    raise errors.InvalidArraySpecError(
        f'Order {order} needs {low} elements, the layout has {scheme.count}.')
  basis = element_basis(scheme.directions, order_tilde, conjugate)
  basis_low = basis[:, :low]
  if (scheme.kind == GAUSSIAN and scheme.order is not None
      and scheme.order >= order):
    alpha = (scheme.weights[:, None] * np.conj(basis_low)).T
  else:
    rank = np.linalg.matrix_rank(basis_low)
    if rank < low:
      raise errors.SamplingRankError(order, rank, scheme.count)
    alpha = np.linalg.pinv(basis_low)
  mats = _matrices_from_alpha(alpha, basis, order, order_tilde)
  if mats.identity_residual > _RESIDUAL_WARNING:
    logging.warning('Sampling identity residual %.3e for a %s layout of %d '
                    'elements at order %d.', mats.identity_residual,
                    scheme.kind, scheme.count, order)
  return mats


def truncate_alpha(mats: SamplingMatrices, order: int) -> SamplingMatrices:
  """Keeps the first ``(order + 1)**2`` rows of ``alpha``.

  The harmonics of orders ``order + 1 .. N`` that the full weights resolved
  now join the high-order block, evaluated against the same basis.
  """
  if order > mats.order:
    raise ValueError(f'Cannot truncate order {mats.order} weights to '
                     f'order {order}.')
  if order == mats.order:
    return mats
  alpha = mats.alpha[:sh.num_coeffs(order)]
  return _matrices_from_alpha(alpha, mats.basis, order, mats.order_tilde)
