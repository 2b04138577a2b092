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

"""Complex spherical harmonics and the records built on them.

Convention: orthonormal complex harmonics with the Condon-Shortley phase,

  Y_n^m(theta, phi) = P_n^m(cos theta) e^{i m phi},  Y_n^{-m} = (-1)^m conj(Y_n^m)

where ``P_n^m`` are the fully normalized associated Legendre functions
(including the ``(-1)^m`` phase). Coefficient vectors are stored in flat order
``n**2 + n + m``.
"""

import math
from typing import Tuple

import numpy as np

from . import errors
from . import struct


def flat_index(n, m):
  """Flat position of ``(n, m)`` in an SH coefficient vector."""
  return n * n + n + m


def num_coeffs(order: int) -> int:
  return (order + 1) ** 2


def degree_of_flat(order: int) -> np.ndarray:
  """The order ``n`` of every flat index up to ``order``."""
  return np.repeat(np.arange(order + 1), 2 * np.arange(order + 1) + 1)


def mode_of_flat(order: int) -> np.ndarray:
  """The degree ``m`` of every flat index up to ``order``."""
  return np.concatenate([np.arange(-n, n + 1) for n in range(order + 1)])


@struct.dataclass
class SHIndex:
  n: int = struct.field(pytree_node=False)
  m: int = struct.field(pytree_node=False)

  def __post_init__(self):
    if self.n < 0 or abs(self.m) > self.n:
      raise ValueError(f'Invalid SH index (n={self.n}, m={self.m}).')

  @property
  def flat(self) -> int:
    return flat_index(self.n, self.m)

  @classmethod
  def from_flat(cls, index: int) -> 'SHIndex':
    n = math.isqrt(index)
    return cls(n=n, m=index - n * n - n)


@struct.dataclass
class Direction:
  """Elevation ``theta`` in ``[0, pi]`` and azimuth ``phi`` in ``[0, 2 pi)``.

  Both fields may be arrays of equal shape, in which case the record holds a
  set of directions (e.g. the elements of an array).
  """
  theta: np.ndarray
  phi: np.ndarray

  @classmethod
  def create(cls, theta, phi) -> 'Direction':
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if np.any(theta < 0) or np.any(theta > np.pi):
      bad = theta[(theta < 0) | (theta > np.pi)]
      raise errors.InvalidDirectionError(float(np.ravel(bad)[0]))
    theta, phi = np.broadcast_arrays(theta, phi)
    return cls(theta=theta.copy(), phi=np.mod(phi, 2 * np.pi))

  @classmethod
  def from_degrees(cls, theta_deg, phi_deg) -> 'Direction':
    return cls.create(np.deg2rad(theta_deg), np.deg2rad(phi_deg))

  @classmethod
  def from_cartesian(cls, vectors) -> 'Direction':
    """Directions of the vectors stacked on the last axis of ``vectors``."""
    vectors = np.asarray(vectors, dtype=np.float64)
    radius = np.linalg.norm(vectors, axis=-1)
    cos_theta = np.clip(vectors[..., 2] / radius, -1.0, 1.0)
    phi = np.arctan2(vectors[..., 1], vectors[..., 0])
    return cls.create(np.arccos(cos_theta), phi)

  def to_cartesian(self) -> np.ndarray:
    sin_theta = np.sin(self.theta)
    return np.stack([sin_theta * np.cos(self.phi),
                     sin_theta * np.sin(self.phi),
                     np.cos(self.theta)], axis=-1)

  def to_degrees(self) -> Tuple[np.ndarray, np.ndarray]:
    return np.rad2deg(self.theta), np.rad2deg(self.phi)

  def perturbed(self, d_theta, d_phi) -> 'Direction':
    """Adds angle offsets, folding elevations back over the poles."""
    theta = np.asarray(self.theta + d_theta, dtype=np.float64)
    phi = np.asarray(self.phi + d_phi, dtype=np.float64)
    below = theta < 0
    above = theta > np.pi
    theta = np.where(below, -theta, theta)
    theta = np.where(above, 2 * np.pi - theta, theta)
    phi = np.where(below | above, phi + np.pi, phi)
    return Direction.create(theta, phi)

  def __len__(self):
    return int(np.size(self.theta))

  def __getitem__(self, index) -> 'Direction':
    return Direction(theta=np.asarray(self.theta)[index],
                     phi=np.asarray(self.phi)[index])


@struct.dataclass
class SHVector:
  coeffs: np.ndarray
  order: int = struct.field(pytree_node=False)

  @classmethod
  def create(cls, coeffs, order=None) -> 'SHVector':
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if order is None:
      order = math.isqrt(coeffs.shape[-1]) - 1
    if coeffs.shape[-1] != num_coeffs(order):
      raise ValueError(f'Expected {num_coeffs(order)} coefficients for order '
                       f'{order}, got {coeffs.shape[-1]}.')
    return cls(coeffs=coeffs, order=order)

  def truncate(self, order: int) -> 'SHVector':
    return SHVector(coeffs=self.coeffs[..., :num_coeffs(order)], order=order)

  def __getitem__(self, index: SHIndex):
    return self.coeffs[..., index.flat]


def _legendre_index(n, m):
  return n * (n + 1) // 2 + m


def normalized_legendre(order: int, cos_theta, sin_theta) -> np.ndarray:
  """Fully normalized ``P_n^m`` for ``0 <= m <= n <= order``.

  Computed with the two-term recurrence in ``n`` at fixed ``m``, seeded by
  the sectoral values, so no factorial ratios appear. Entries are stored at
  ``n (n + 1) / 2 + m``.
  """
  x = np.asarray(cos_theta, dtype=np.float64)
  s = np.asarray(sin_theta, dtype=np.float64)
  table = np.zeros(x.shape + ((order + 1) * (order + 2) // 2,))
  table[..., 0] = 1.0 / np.sqrt(4.0 * np.pi)
  for m in range(1, order + 1):
    table[..., _legendre_index(m, m)] = (
        -np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s
        * table[..., _legendre_index(m - 1, m - 1)])
  for m in range(order):
    table[..., _legendre_index(m + 1, m)] = (
        np.sqrt(2.0 * m + 3.0) * x * table[..., _legendre_index(m, m)])
  for m in range(order + 1):
    for n in range(m + 2, order + 1):
      a = np.sqrt((4.0 * n * n - 1.0) / (n * n - m * m))
      b = np.sqrt(((n - 1.0) ** 2 - m * m) / (4.0 * (n - 1.0) ** 2 - 1.0))
      table[..., _legendre_index(n, m)] = a * (
          x * table[..., _legendre_index(n - 1, m)]
          - b * table[..., _legendre_index(n - 2, m)])
  return table


def sh_matrix(directions: Direction, order: int) -> np.ndarray:
  """``Y_n^m`` at every direction, shape ``theta.shape + ((order + 1)**2,)``."""
  theta = np.asarray(directions.theta, dtype=np.float64)
  phi = np.asarray(directions.phi, dtype=np.float64)
  legendre = normalized_legendre(order, np.cos(theta), np.sin(theta))
  n = degree_of_flat(order)
  m = mode_of_flat(order)
  values = legendre[..., _legendre_index(n, np.abs(m))]
  phase = np.where((m < 0) & (m % 2 == 1), -1.0, 1.0)
  return values * phase * np.exp(1j * m * phi[..., None])


def sh_eval(direction: Direction, order: int) -> SHVector:
  """The vector ``y_N(direction)`` of all harmonics up to ``order``."""
  if order < 0:
    raise ValueError(f'SH order must be >= 0, got {order}.')
  return SHVector(coeffs=sh_matrix(direction, order), order=order)
