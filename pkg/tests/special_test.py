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

"""Tests for sphmimo.special."""

from fractions import Fraction

from absl.testing import absltest
from absl.testing import parameterized

from sphmimo import errors
from sphmimo import special

import jax
import numpy as np
from scipy import special as sp_special

# Parse absl flags test_srcdir and test_tmpdir.
jax.config.parse_flags_with_absl()


def _exact_jn(n, x, terms=200):
  """Power series of j_n at a rational ``x``, summed in exact arithmetic."""
  lead = Fraction(1)
  for k in range(1, n + 1):
    lead *= x / (2 * k + 1)
  term = lead
  total = Fraction(0)
  for k in range(terms):
    total += term
    term *= -x * x / 2 / ((k + 1) * (2 * n + 2 * k + 3))
  return float(total)


class BesselTest(parameterized.TestCase):

  @parameterized.parameters(0.01, 0.5, 3.0, 12.7, 36.6, 150.0)
  def test_j_matches_scipy(self, x):
    order = 45
    table = special.spherical_jn_table(order, np.array([x]))[0]
    expected = sp_special.spherical_jn(np.arange(order + 1), x)
    np.testing.assert_allclose(table, expected, rtol=1e-9, atol=1e-14)

  @parameterized.parameters(0.5, 3.0, 36.6)
  def test_y_matches_scipy(self, x):
    order = 20
    table = special.spherical_yn_table(order, np.array([x]))[0]
    expected = sp_special.spherical_yn(np.arange(order + 1), x)
    np.testing.assert_allclose(table, expected, rtol=1e-9)

  def test_high_order_j_against_exact_series(self):
    x = Fraction(183, 5)
    exact = _exact_jn(39, x)
    value = special.sph_bessel_j(39, float(x))
    self.assertAlmostEqual(value / exact, 1.0, delta=1e-9)

  def test_wronskian(self):
    x = np.linspace(0.3, 60.0, 50)
    j = special.spherical_jn_table(15, x)
    y = special.spherical_yn_table(15, x)
    jp = special.derivative_table(j, x)
    yp = special.derivative_table(y, x)
    wronskian = j * yp - jp * y
    np.testing.assert_allclose(
        wronskian * x[:, None] ** 2, np.ones_like(wronskian), rtol=1e-7)

  def test_derivatives_match_scipy(self):
    x = np.array([0.7, 4.0, 25.0])
    for n in (0, 1, 5):
      np.testing.assert_allclose(
          special.sph_bessel_j(n, x, derivative=True),
          sp_special.spherical_jn(n, x, derivative=True), rtol=1e-9,
          atol=1e-14)
      np.testing.assert_allclose(
          special.sph_bessel_y(n, x, derivative=True),
          sp_special.spherical_yn(n, x, derivative=True), rtol=1e-9)

  def test_hankel(self):
    x = np.array([0.2, 1.0, 9.0])
    h0 = special.sph_hankel1(0, x)
    np.testing.assert_allclose(h0, np.exp(1j * x) / (1j * x), rtol=1e-12)
    h1 = special.sph_hankel1(1, x)
    np.testing.assert_allclose(h1, -np.exp(1j * x) * (x + 1j) / x ** 2,
                               rtol=1e-12)
    h, h_prime = special.hankel1_table(3, x)
    self.assertEqual(h.shape, (3, 4))
    np.testing.assert_allclose(h_prime[:, 0], -h[:, 1], rtol=1e-12)

  def test_shapes(self):
    x = np.full((2, 3), 1.5)
    self.assertEqual(special.spherical_jn_table(4, x).shape, (2, 3, 5))
    self.assertEqual(special.spherical_jn_table(4, np.zeros((0,))).shape,
                     (0, 5))

  @parameterized.parameters(0.0, -1.0)
  def test_non_positive_argument(self, x):
    with self.assertRaises(errors.BesselDomainError):
      special.spherical_jn_table(3, np.array([1.0, x]))
    with self.assertRaises(errors.BesselDomainError):
      special.sph_hankel1(2, x)

  def test_derivative_table_needs_two_orders(self):
    with self.assertRaises(ValueError):
      special.derivative_table(np.ones((3, 1)), np.ones(3))


if __name__ == '__main__':
  absltest.main()
