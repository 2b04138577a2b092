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

"""Spherical Bessel and Hankel functions of integer order.

All routines return whole tables over orders ``0..order`` at once, with the
order on the last axis, because every caller needs all orders up to the
representation order. ``y_n`` is obtained by upward recurrence, which is
stable for it everywhere. ``j_n`` is obtained by Miller's downward recurrence,
normalized with ``sum_n (2n + 1) j_n(x)**2 = 1``, which stays accurate for
``n > x`` where the upward recurrence loses all digits.
"""

import numpy as np

from . import errors

# Rescaling threshold of the downward recurrence.
_BIG = 1e100


def _check_domain(x):
  x = np.asarray(x, dtype=np.float64)
  if x.size and not np.all(x > 0):
    raise errors.BesselDomainError(float(np.min(x)))
  return x


def _miller_start(order, x_max):
  top = max(order, x_max)
  return int(np.ceil(top)) + 20 + int(np.sqrt(40.0 * max(top, 1.0)))


def spherical_jn_table(order: int, x) -> np.ndarray:
  """``j_n(x)`` for ``n = 0..order``, shape ``x.shape + (order + 1,)``."""
  x = _check_domain(x)
  flat = x.reshape(-1)
  if flat.size == 0:
    return np.zeros(x.shape + (order + 1,))
  start = _miller_start(order, float(flat.max()))
  table = np.zeros((start + 2, flat.size))
  table[start] = 1e-30
  for n in range(start, 0, -1):
    table[n - 1] = (2 * n + 1) / flat * table[n] - table[n + 1]
    big = np.abs(table[n - 1]) > _BIG
    if np.any(big):
      table[n - 1:, big] /= _BIG
  weights = 2.0 * np.arange(start + 2) + 1.0
  norm = np.sqrt(np.einsum('n,nx->x', weights, table ** 2))
  table /= norm
  # The normalization fixes the magnitude only; take the sign from whichever
  # of the closed forms j_0, j_1 is better conditioned.
  j0 = np.sin(flat) / flat
  j1 = np.sin(flat) / flat ** 2 - np.cos(flat) / flat
  use_j0 = np.abs(j0) >= np.abs(j1)
  sign = np.where(use_j0, np.sign(j0) * np.sign(table[0]),
                  np.sign(j1) * np.sign(table[1]))
  sign = np.where(sign == 0, 1.0, sign)
  table *= sign
  return table[:order + 1].T.reshape(x.shape + (order + 1,))


def spherical_yn_table(order: int, x) -> np.ndarray:
  """``y_n(x)`` for ``n = 0..order`` by upward recurrence."""
  x = _check_domain(x)
  table = np.zeros(x.shape + (order + 1,))
  table[..., 0] = -np.cos(x) / x
  if order >= 1:
    table[..., 1] = -np.cos(x) / x ** 2 - np.sin(x) / x
  for n in range(1, order):
    table[..., n + 1] = (2 * n + 1) / x * table[..., n] - table[..., n - 1]
  return table


def derivative_table(table: np.ndarray, x) -> np.ndarray:
  """Derivatives from ``f_n' = f_{n-1} - (n + 1) / x f_n``, ``f_0' = -f_1``.

  ``table`` must hold at least orders 0 and 1.
  """
  if table.shape[-1] < 2:
    raise ValueError('derivative_table needs at least orders 0 and 1.')
  x = np.asarray(x, dtype=np.float64)[..., None]
  n = np.arange(table.shape[-1])
  deriv = np.empty_like(table)
  deriv[..., 1:] = table[..., :-1] - (n[1:] + 1) / x * table[..., 1:]
  deriv[..., 0] = -table[..., 1]
  return deriv


def sph_bessel_j(n, x, derivative: bool = False):
  """Spherical Bessel function of the first kind ``j_n(x)`` (or ``j_n'``)."""
  n = int(n)
  table = spherical_jn_table(n + 1, x)
  if derivative:
    return derivative_table(table, x)[..., n]
  return table[..., n]


def sph_bessel_y(n, x, derivative: bool = False):
  """Spherical Bessel function of the second kind ``y_n(x)`` (or ``y_n'``)."""
  n = int(n)
  table = spherical_yn_table(n + 1, x)
  if derivative:
    return derivative_table(table, x)[..., n]
  return table[..., n]


def hankel1_table(order: int, x):
  """``h_n^(1)`` and its derivative for ``n = 0..order``.

  Returns:
    A pair ``(h, h_prime)`` of complex arrays of shape
    ``x.shape + (order + 1,)``.
  """
  j = spherical_jn_table(order + 1, x)
  y = spherical_yn_table(order + 1, x)
  h = j + 1j * y
  h_prime = derivative_table(h, x)
  return h[..., :order + 1], h_prime[..., :order + 1]


def sph_hankel1(n, x, derivative: bool = False):
  """Spherical Hankel function of the first kind, ``j_n + i y_n``."""
  h, h_prime = hankel1_table(int(n), x)
  return (h_prime if derivative else h)[..., int(n)]
