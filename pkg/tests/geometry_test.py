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

"""Tests for sphmimo.geometry."""

import os

from absl.testing import absltest
from absl.testing import parameterized

from sphmimo import errors
from sphmimo import geometry
from sphmimo import sh

import jax
import numpy as np

# Parse absl flags test_srcdir and test_tmpdir.
jax.config.parse_flags_with_absl()


class GridTest(parameterized.TestCase):

  @parameterized.parameters(0, 4, 8)
  def test_gaussian_grid(self, order):
    grid = geometry.make_gaussian_grid(order)
    self.assertEqual(grid.count, 2 * (order + 1) ** 2)
    self.assertAlmostEqual(float(np.sum(grid.weights)), 4 * np.pi, places=12)
    self.assertTrue(np.all(grid.weights > 0))
    self.assertEqual(grid.kind, geometry.GAUSSIAN)

  def test_uniform_grid(self):
    grid = geometry.make_uniform_grid(144)
    self.assertEqual(grid.count, 144)
    self.assertIsNone(grid.weights)
    # Nearly uniform: the mean of the unit vectors is close to the origin.
    points = grid.directions.to_cartesian()
    self.assertLess(np.linalg.norm(np.mean(points, axis=0)), 0.05)
    # Nearest-neighbour spacing stays within a small factor everywhere.
    cosines = points @ points.T - 2.0 * np.eye(144)
    nearest = np.arccos(np.clip(np.max(cosines, axis=1), -1.0, 1.0))
    self.assertLess(np.max(nearest) / np.min(nearest), 2.5)

  def test_uniform_grid_is_not_symmetric_about_the_poles(self):
    points = geometry.make_uniform_grid(144).directions.to_cartesian()
    # No element on the poles.
    self.assertLess(np.max(np.abs(points[:, 2])), 1.0 - 1e-6)
    # Heights are not the evenly spaced levels of an upright spiral.
    heights = np.sort(points[:, 2])
    self.assertGreater(np.std(np.diff(heights)), 1e-3)
    # Zonal harmonics above the array order alias into the low orders.
    mats = geometry.compute_sampling_matrices(
        geometry.make_uniform_grid(144), 8, 20)
    zonal = sh.mode_of_flat(20)[81:] == 0
    self.assertGreater(np.max(np.abs(mats.epsilon[:, zonal])), 1e-3)

  def test_single_element_grid(self):
    grid = geometry.make_uniform_grid(1)
    self.assertEqual(grid.count, 1)
    self.assertEqual(float(grid.directions.theta[0]), 0.0)
    mats = geometry.compute_sampling_matrices(grid, 0, 2)
    self.assertLess(mats.identity_residual, 1e-12)

  def test_custom_grid(self):
    path = os.path.join(self.create_tempdir().full_path, 'elements.csv')
    with open(path, 'w') as f:
      f.write('theta_deg, phi_deg\n0,0\n90,0\n90,120\n90,240\n180,0\n')
    grid = geometry.load_custom_grid(path)
    self.assertEqual(grid.count, 5)
    self.assertEqual(grid.kind, geometry.CUSTOM)
    np.testing.assert_allclose(grid.directions.phi[2], 2 * np.pi / 3)

  def test_custom_grid_bad_header(self):
    path = os.path.join(self.create_tempdir().full_path, 'elements.csv')
    with open(path, 'w') as f:
      f.write('elevation,azimuth\n0,0\n')
    with self.assertRaisesRegex(ValueError, 'theta_deg,phi_deg'):
      geometry.load_custom_grid(path)

  def test_invalid_counts(self):
    with self.assertRaises(ValueError):
      geometry.make_uniform_grid(0)
    with self.assertRaises(ValueError):
      geometry.make_gaussian_grid(-1)


class SamplingMatricesTest(parameterized.TestCase):

  @parameterized.parameters(False, True)
  def test_gaussian_identity(self, conjugate):
    grid = geometry.make_gaussian_grid(8)
    mats = geometry.compute_sampling_matrices(grid, 8, 12, conjugate)
    self.assertLess(mats.identity_residual, 1e-10)
    self.assertEqual(mats.alpha.shape, (81, 162))
    self.assertEqual(mats.basis.shape, (162, 169))
    self.assertEqual(mats.epsilon.shape, (81, 169 - 81))
    np.testing.assert_allclose(mats.alpha @ mats.basis, mats.expanded,
                               atol=1e-10)

  def test_microphone_basis_is_conjugated(self):
    grid = geometry.make_gaussian_grid(2)
    lsp = geometry.compute_sampling_matrices(grid, 2, 4)
    mic = geometry.compute_sampling_matrices(grid, 2, 4, conjugate=True)
    np.testing.assert_allclose(mic.basis, np.conj(lsp.basis))
    np.testing.assert_allclose(mic.basis,
                               np.conj(sh.sh_matrix(grid.directions, 4)))

  def test_gaussian_aliasing_starts_above_grid_order(self):
    grid = geometry.make_gaussian_grid(4)
    mats = geometry.compute_sampling_matrices(grid, 4, 8)
    degree = sh.degree_of_flat(8)[sh.num_coeffs(4):]
    np.testing.assert_allclose(mats.epsilon[:, degree == 5], 0.0, atol=1e-10)
    self.assertGreater(np.max(np.abs(mats.epsilon[:, degree == 6])), 1e-3)

  def test_uniform_pseudoinverse(self):
    grid = geometry.make_uniform_grid(144)
    mats = geometry.compute_sampling_matrices(grid, 8, 20)
    self.assertLess(mats.identity_residual, 1e-10)
    self.assertEqual(mats.alpha.shape, (81, 144))

  def test_truncate_alpha(self):
    grid = geometry.make_gaussian_grid(8)
    mats = geometry.compute_sampling_matrices(grid, 8, 10)
    low = geometry.truncate_alpha(mats, 2)
    self.assertEqual(low.alpha.shape, (9, 162))
    self.assertEqual(low.order, 2)
    self.assertEqual(low.epsilon.shape, (9, 121 - 9))
    self.assertLess(low.identity_residual, 1e-10)
    # The resolved orders 3..8 move into the high-order block as zeros.
    np.testing.assert_allclose(low.epsilon[:, :81 - 9], 0.0, atol=1e-10)
    self.assertIs(geometry.truncate_alpha(mats, 8), mats)
    with self.assertRaises(ValueError):
      geometry.truncate_alpha(low, 3)

  def test_rank_deficient_layout(self):
    grid = geometry.make_uniform_grid(4)
    directions = sh.Direction.create(np.repeat(grid.directions.theta, 4),
                                     np.repeat(grid.directions.phi, 4))
    scheme = geometry.SamplingScheme(directions=directions, weights=None,
                                     kind=geometry.CUSTOM)
    with self.assertRaises(errors.SamplingRankError):
      geometry.compute_sampling_matrices(scheme, 2, 4)

  def test_inconsistent_orders(self):
    grid = geometry.make_uniform_grid(16)
    with self.assertRaises(errors.InvalidArraySpecError):
      geometry.compute_sampling_matrices(grid, 4, 8)
    with self.assertRaises(errors.InvalidArraySpecError):
      geometry.compute_sampling_matrices(grid, 3, 2)


if __name__ == '__main__':
  absltest.main()
