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

"""Tests for sphmimo.sh."""

from absl.testing import absltest
from absl.testing import parameterized

from sphmimo import errors
from sphmimo import geometry
from sphmimo import sh

import jax
import numpy as np
from scipy import special as sp_special

# Parse absl flags test_srcdir and test_tmpdir.
jax.config.parse_flags_with_absl()


def _random_directions(rng, count):
  theta = np.arccos(rng.uniform(-1.0, 1.0, count))
  phi = rng.uniform(0.0, 2 * np.pi, count)
  return sh.Direction.create(theta, phi)


class IndexTest(parameterized.TestCase):

  @parameterized.parameters((0, 0, 0), (1, -1, 1), (1, 1, 3), (2, -1, 5),
                            (4, 4, 24))
  def test_flat_index(self, n, m, flat):
    self.assertEqual(sh.flat_index(n, m), flat)
    index = sh.SHIndex.from_flat(flat)
    self.assertEqual((index.n, index.m), (n, m))
    self.assertEqual(index.flat, flat)

  def test_invalid_index(self):
    with self.assertRaises(ValueError):
      sh.SHIndex(n=2, m=-3)

  def test_degree_and_mode_tables(self):
    np.testing.assert_array_equal(sh.degree_of_flat(2),
                                  [0, 1, 1, 1, 2, 2, 2, 2, 2])
    np.testing.assert_array_equal(sh.mode_of_flat(2),
                                  [0, -1, 0, 1, -2, -1, 0, 1, 2])


class DirectionTest(absltest.TestCase):

  def test_azimuth_wraps(self):
    d = sh.Direction.create(1.0, -0.5)
    self.assertAlmostEqual(float(d.phi), 2 * np.pi - 0.5)
    d = sh.Direction.from_degrees(90.0, 450.0)
    self.assertAlmostEqual(float(d.phi), np.pi / 2)

  def test_invalid_elevation(self):
    with self.assertRaises(errors.InvalidDirectionError):
      sh.Direction.create(np.array([0.5, 3.5]), np.zeros(2))
    with self.assertRaises(errors.InvalidDirectionError):
      sh.Direction.create(-0.1, 0.0)

  def test_perturbed_folds_over_pole(self):
    d = sh.Direction.create(0.1, 0.3).perturbed(-0.3, 0.0)
    self.assertAlmostEqual(float(d.theta), 0.2)
    self.assertAlmostEqual(float(d.phi), 0.3 + np.pi)
    d = sh.Direction.create(np.pi - 0.1, 0.0).perturbed(0.2, 0.0)
    self.assertAlmostEqual(float(d.theta), np.pi - 0.1)
    self.assertAlmostEqual(float(d.phi), np.pi)

  def test_cartesian(self):
    rng = np.random.RandomState(0)
    d = _random_directions(rng, 20)
    back = sh.Direction.from_cartesian(3.0 * d.to_cartesian())
    np.testing.assert_allclose(back.theta, d.theta, atol=1e-12)
    np.testing.assert_allclose(
        np.exp(1j * back.phi), np.exp(1j * d.phi), atol=1e-12)
    self.assertLen(d, 20)
    self.assertLen(d[2:5], 3)


class HarmonicsTest(parameterized.TestCase):

  def test_low_order_values(self):
    theta = np.array([0.0, np.pi / 2, np.pi / 3])
    phi = np.array([0.0, 0.0, 0.7])
    y = sh.sh_matrix(sh.Direction.create(theta, phi), 1)
    np.testing.assert_allclose(y[:, 0], 1 / np.sqrt(4 * np.pi))
    np.testing.assert_allclose(y[:, 2],
                               np.sqrt(3 / (4 * np.pi)) * np.cos(theta),
                               atol=1e-15)
    # Condon-Shortley phase.
    expected = (-np.sqrt(3 / (8 * np.pi)) * np.sin(theta)
                * np.exp(1j * phi))
    np.testing.assert_allclose(y[:, 3], expected, atol=1e-15)
    np.testing.assert_allclose(y[:, 1], -np.conj(expected), atol=1e-15)

  @parameterized.parameters(3, 10, 25)
  def test_addition_theorem(self, order):
    rng = np.random.RandomState(order)
    a = _random_directions(rng, 7)
    b = _random_directions(rng, 7)
    ya = sh.sh_matrix(a, order)
    yb = sh.sh_matrix(b, order)
    cos_gamma = np.sum(a.to_cartesian() * b.to_cartesian(), axis=-1)
    degree = sh.degree_of_flat(order)
    for n in range(order + 1):
      cols = degree == n
      total = np.sum(ya[:, cols] * np.conj(yb[:, cols]), axis=-1)
      expected = (2 * n + 1) / (4 * np.pi) * sp_special.eval_legendre(
          n, cos_gamma)
      np.testing.assert_allclose(total, expected, atol=1e-11)

  def test_negative_modes_are_conjugates(self):
    rng = np.random.RandomState(1)
    y = sh.sh_matrix(_random_directions(rng, 5), 6)
    for n in range(7):
      for m in range(1, n + 1):
        np.testing.assert_allclose(
            y[:, sh.flat_index(n, -m)],
            (-1) ** m * np.conj(y[:, sh.flat_index(n, m)]), atol=1e-13)

  def test_orthonormal_on_gaussian_grid(self):
    grid = geometry.make_gaussian_grid(6)
    y = sh.sh_matrix(grid.directions, 6)
    gram = np.conj(y).T @ (grid.weights[:, None] * y)
    np.testing.assert_allclose(gram, np.eye(49), atol=1e-12)

  def test_high_order_is_finite_at_poles(self):
    d = sh.Direction.create(np.array([0.0, np.pi]), np.zeros(2))
    y = sh.sh_matrix(d, 40)
    self.assertTrue(np.all(np.isfinite(y)))
    # Only m = 0 survives at the poles.
    zonal = sh.mode_of_flat(40) == 0
    np.testing.assert_allclose(y[:, ~zonal], 0.0, atol=1e-12)
    n = np.arange(41)
    np.testing.assert_allclose(y[0, zonal], np.sqrt((2 * n + 1) / (4 * np.pi)))

  def test_sh_vector(self):
    d = sh.Direction.create(0.4, 1.2)
    vec = sh.sh_eval(d, 3)
    self.assertEqual(vec.coeffs.shape, (16,))
    self.assertEqual(vec[sh.SHIndex(n=2, m=1)], vec.coeffs[7])
    self.assertEqual(vec.truncate(1).coeffs.shape, (4,))
    with self.assertRaises(ValueError):
      sh.SHVector.create(np.zeros(5))
    with self.assertRaises(ValueError):
      sh.sh_eval(d, -1)


if __name__ == '__main__':
  absltest.main()
