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

"""Tests for sphmimo.analysis."""

from absl.testing import absltest
from absl.testing import parameterized

from sphmimo import analysis
from sphmimo import errors
from sphmimo import geometry
from sphmimo import mimo
from sphmimo import radial
from sphmimo import sh

import jax
import numpy as np

# Parse absl flags test_srcdir and test_tmpdir.
jax.config.parse_flags_with_absl()

INCH = 0.0254


def make_system(sla_radius=0.2, sma_radius=0.2, sla_order=8, sma_order=8,
                sla_count=144, order_tilde=39, cap_in=2.0):
  sla = mimo.ArraySpec(scheme=geometry.make_uniform_grid(sla_count),
                       radial=radial.RadialSpec.sla(sla_radius,
                                                    cap_in * INCH),
                       order=sla_order, order_tilde=order_tilde)
  sma = mimo.ArraySpec(scheme=geometry.make_gaussian_grid(sma_order),
                       radial=radial.RadialSpec.sma(sma_radius),
                       order=sma_order, order_tilde=order_tilde)
  return mimo.SystemSpec(sla=sla, sma=sma,
                         dor=sh.Direction.create(0.0, 0.0),
                         doa=sh.Direction.create(0.0, 0.0), r0=1.0)


def small_system(order_tilde=10):
  return make_system(sla_order=4, sma_order=4, sla_count=36,
                     order_tilde=order_tilde, cap_in=3.0)


class FrequencyGridTest(absltest.TestCase):

  def test_log_grid(self):
    grid = analysis.FrequencyGrid(f_min=30.0, f_max=10000.0, bins=200)
    freqs = grid.frequencies()
    self.assertLen(freqs, 200)
    self.assertAlmostEqual(freqs[0], 30.0)
    self.assertAlmostEqual(freqs[-1], 10000.0)
    self.assertAlmostEqual(grid.half_bin_log(),
                           0.5 * np.log(10000.0 / 30.0) / 199)

  def test_linear_grid(self):
    grid = analysis.FrequencyGrid(f_min=100.0, f_max=300.0, bins=3,
                                  spacing=analysis.LINEAR)
    np.testing.assert_allclose(grid.frequencies(), [100.0, 200.0, 300.0])
    np.testing.assert_allclose(grid.wavenumbers(343.0),
                               2 * np.pi * np.array([100, 200, 300]) / 343.0)

  def test_invalid(self):
    with self.assertRaises(ValueError):
      analysis.FrequencyGrid(f_min=100.0, f_max=50.0)
    with self.assertRaises(ValueError):
      analysis.FrequencyGrid(f_min=100.0, f_max=500.0, bins=1)
    with self.assertRaises(ValueError):
      analysis.FrequencyGrid(f_min=100.0, f_max=500.0, spacing='mel')


class OrderSelectionTest(parameterized.TestCase):

  def test_order_tilde(self):
    spec = make_system()
    self.assertEqual(analysis.select_N_tilde(spec, 10000.0), 39)
    self.assertEqual(analysis.select_N_tilde(spec, 1e-9), 3)
    with self.assertRaises(ValueError):
      analysis.select_N_tilde(spec, 0.0)
    # The larger radius decides.
    self.assertEqual(
        analysis.select_N_tilde(make_system(sma_radius=0.04), 10000.0), 39)

  def test_matching_criterion(self):
    self.assertAlmostEqual(analysis.matching_criterion(make_system()), 0.0)
    self.assertAlmostEqual(
        analysis.matching_criterion(make_system(sma_radius=0.04)), 1.28)

  @parameterized.parameters(
      (0.2, 0.04, radial.SMA, 2),
      (0.2, 0.1, radial.SMA, 4),
      (0.1, 0.2, radial.SLA, 4),
  )
  def test_reduce_order(self, sla_radius, sma_radius, side, order):
    spec = make_system(sla_radius=sla_radius, sma_radius=sma_radius)
    self.assertEqual(analysis.reduce_order(spec), (side, order))

  def test_reduce_order_not_needed(self):
    with self.assertRaises(errors.OrderReductionNotNeededError):
      analysis.reduce_order(make_system())

  def test_reduced_system(self):
    spec = make_system(sma_radius=0.04, order_tilde=12)
    reduced = analysis.reduced_system(spec, radial.SMA, 2)
    self.assertEqual(reduced.sma.order, 2)
    self.assertEqual(reduced.sma.weights_order, 8)
    self.assertEqual(reduced.sla.order, 8)
    mats = reduced.sma.sampling_matrices()
    self.assertEqual(mats.alpha.shape, (9, 162))
    self.assertLess(mats.identity_residual, 1e-10)
    self.assertAlmostEqual(analysis.matching_criterion(reduced), 0.08)


class OFRTest(parameterized.TestCase):

  def test_interpolated_edges(self):
    freqs = np.geomspace(100.0, 10000.0, 3)
    ofr = analysis.compute_ofr(freqs, [10.0, -10.0, 10.0], 0.0)
    self.assertLen(ofr.intervals, 1)
    lo, hi = ofr.intervals[0]
    self.assertAlmostEqual(lo, np.sqrt(10.0) * 100.0, places=6)
    self.assertAlmostEqual(hi, np.sqrt(10.0) * 1000.0, places=5)
    self.assertEqual(ofr.to_json(), [{'lo': lo, 'hi': hi}])

  def test_runs_touching_the_ends(self):
    freqs = np.geomspace(100.0, 10000.0, 5)
    ofr = analysis.compute_ofr(freqs, [-1.0, -1.0, 5.0, -1.0, -1.0], 0.0)
    self.assertLen(ofr.intervals, 2)
    self.assertEqual(ofr.intervals[0][0], 100.0)
    self.assertAlmostEqual(ofr.intervals[1][1], 10000.0)
    everywhere = analysis.compute_ofr(freqs, np.full(5, -20.0), 0.0)
    self.assertAlmostEqual(everywhere.intervals[0][0], 100.0)
    self.assertAlmostEqual(everywhere.intervals[0][1], 10000.0)

  def test_empty(self):
    ofr = analysis.compute_ofr([1.0, 2.0], [3.0, 4.0], 0.0)
    self.assertFalse(ofr)
    self.assertEqual(ofr.to_json(), [])

  def test_non_finite_curve(self):
    with self.assertRaises(ValueError):
      analysis.compute_ofr([1.0, 2.0], [np.nan, 4.0], 0.0)

  def test_monotone_in_threshold(self):
    rng = np.random.RandomState(0)
    freqs = np.geomspace(30.0, 10000.0, 60)
    curve = np.cumsum(rng.normal(size=60)) * 3.0
    previous = None
    for sigma in np.linspace(-20.0, 20.0, 9):
      ofr = analysis.compute_ofr(freqs, curve, sigma)
      if previous is not None:
        for lo, hi in previous.intervals:
          self.assertTrue(any(o_lo <= lo * (1 + 1e-12)
                              and hi <= o_hi * (1 + 1e-12)
                              for o_lo, o_hi in ofr.intervals))
        covered = sum(np.log(hi / lo) for lo, hi in ofr.intervals)
        before = sum(np.log(hi / lo) for lo, hi in previous.intervals)
        self.assertGreaterEqual(covered, before - 1e-12)
      previous = ofr

  def test_intersect(self):
    a = analysis.OFRInterval(intervals=((100.0, 1000.0), (2000.0, 5000.0)))
    b = analysis.OFRInterval(intervals=((500.0, 3000.0),))
    both = analysis.intersect_ofr(a, b)
    self.assertEqual(both.intervals, ((500.0, 1000.0), (2000.0, 3000.0)))
    disjoint = analysis.OFRInterval(intervals=((6000.0, 7000.0),))
    self.assertFalse(analysis.intersect_ofr(a, disjoint))
    with self.assertRaises(ValueError):
      analysis.intersect_ofr(a, analysis.OFRInterval(sigma_db=-3.0))

  def test_is_matched(self):
    outer = analysis.OFRInterval(intervals=((900.0, 5000.0),))
    inner = analysis.OFRInterval(intervals=((1200.0, 3000.0),))
    overlapping = analysis.OFRInterval(intervals=((500.0, 3000.0),))
    empty = analysis.OFRInterval()
    self.assertTrue(analysis.is_matched(outer, inner))
    self.assertTrue(analysis.is_matched(inner, outer))
    self.assertFalse(analysis.is_matched(outer, overlapping))
    self.assertFalse(analysis.is_matched(empty, inner))
    self.assertFalse(analysis.is_matched(empty, empty))
    shifted = analysis.OFRInterval(intervals=((890.0, 4950.0),))
    self.assertFalse(analysis.is_matched(outer, shifted))
    self.assertTrue(analysis.is_matched(outer, shifted, tolerance=0.02))


class ErrorCurvesTest(parameterized.TestCase):

  def test_to_db(self):
    np.testing.assert_allclose(analysis.to_db([10.0, 1.0, 0.1]),
                               [20.0, 0.0, -20.0])
    self.assertEqual(analysis.to_db(0.0), analysis.DB_FLOOR)

  def test_error_free_system(self):
    spec = small_system(order_tilde=4)
    grid = analysis.FrequencyGrid(f_min=300.0, f_max=3000.0, bins=4)
    curves = analysis.error_curves(spec, grid, mimo.ErrorModel.disabled())
    self.assertEqual(curves.realizations, 1)
    for name in analysis.CURVE_NAMES:
      np.testing.assert_allclose(getattr(curves, name), 0.0, atol=1e-10)
    np.testing.assert_allclose(curves.frequencies, grid.frequencies())

  def test_spectral_norm(self):
    spec = small_system()
    k = spec.wavenumber(np.array([200.0, 1000.0, 4000.0]))
    bundle = mimo.sh_transfer_vectors(spec, k, mimo.ErrorModel(snr_db=20.0))
    psi_hat, psi = mimo.normalized_system_matrix(bundle)
    expected = (np.linalg.norm(psi_hat - psi, 2, axis=(1, 2))
                / np.linalg.norm(psi, 2, axis=(1, 2)))
    ratios = analysis.bundle_ratios(bundle)
    np.testing.assert_allclose(ratios[:, 0], expected, rtol=1e-9)
    np.testing.assert_allclose(
        ratios[:, 1],
        np.linalg.norm(bundle.psi_L_hat.coeffs - bundle.psi_L.coeffs, axis=-1)
        / np.linalg.norm(bundle.psi_L.coeffs, axis=-1), rtol=1e-9)

  def test_bounds(self):
    spec = small_system()
    grid = analysis.FrequencyGrid(f_min=100.0, f_max=8000.0, bins=12)
    error = mimo.ErrorModel(snr_db=25.0, realizations=3, positioning_deg=1.0)
    ratios = analysis.realization_errors(spec, grid, error)
    self.assertEqual(ratios.shape, (3, 12, 7))
    delta, delta_l, delta_m, a_l, m_l, a_m, m_m = np.moveaxis(ratios, -1, 0)
    slack = 1 + 1e-9
    self.assertTrue(np.all(delta <= (delta_l + delta_m + delta_l * delta_m)
                           * slack))
    self.assertTrue(np.all(delta_l <= (a_l + m_l) * slack))
    self.assertTrue(np.all(delta_m <= (a_m + m_m) * slack))

  def test_noise_bound_follows_snr(self):
    spec = small_system(order_tilde=4)
    grid = analysis.FrequencyGrid(f_min=200.0, f_max=5000.0, bins=5)
    quiet = analysis.realization_errors(
        spec, grid, mimo.ErrorModel(snr_db=30.0, realizations=2))
    loud = analysis.realization_errors(
        spec, grid, mimo.ErrorModel(snr_db=30.0 - 10 * np.log10(2.0),
                                    realizations=2))
    for i in (4, 6):
      np.testing.assert_allclose(
          analysis.to_db(loud[..., i]) - analysis.to_db(quiet[..., i]),
          10 * np.log10(2.0), atol=1e-9)

  def test_thread_count_does_not_change_curves(self):
    spec = small_system()
    grid = analysis.FrequencyGrid(f_min=100.0, f_max=8000.0, bins=40)
    error = mimo.ErrorModel(snr_db=30.0, realizations=2)
    one = analysis.error_curves(spec, grid, error, threads=1)
    many = analysis.error_curves(spec, grid, error, threads=4)
    for name in analysis.CURVE_NAMES:
      np.testing.assert_array_equal(getattr(one, name), getattr(many, name))
    self.assertEqual(one.realizations, 2)

  def test_microphone_error_at_band_edges(self):
    spec = make_system()
    grid = analysis.FrequencyGrid(f_min=30.0, f_max=10000.0, bins=2)
    curves = analysis.error_curves(spec, grid, mimo.ErrorModel())
    self.assertGreater(curves.in_db('delta_M')[0], 0.0)
    self.assertGreater(curves.in_db('a_M')[-1], 0.0)
    self.assertGreater(curves.in_db('m_M')[0], curves.in_db('a_M')[0])


if __name__ == '__main__':
  absltest.main()
