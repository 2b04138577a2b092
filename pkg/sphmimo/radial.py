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

"""Modal (radial) coefficients of rigid-sphere arrays.

Microphones on a rigid sphere observe order ``n`` of an incident plane wave
scaled by

  b_n(kr) = 4 pi i^n [j_n(kr) - j_n'(kr) / h_n'(kr) h_n(kr)]
          = 4 pi i^(n+1) / ((kr)^2 h_n'(kr)),

(the second form follows from the Wronskian and avoids the cancellation of
the first). A spherical cap of half-angle ``alpha`` vibrating on a rigid
sphere radiates order ``n`` with

  g_n(kr) = C_n(alpha) / ((kr)^2 h_n'(kr)),
  C_n = [P_{n-1}(cos alpha) - P_{n+1}(cos alpha)] / (2n + 1),  C_0 = 1 - cos alpha.

Global constants cancel after normalization and are set to one. ``h`` is the
spherical Hankel function of the first kind, matching the ``e^{ikr}``
propagation factor.
"""

from typing import Optional

import numpy as np
from scipy import special as sp_special

from . import config
from . import errors
from . import sh
from . import special
from . import struct


SLA = 'SLA'
SMA = 'SMA'
RIGID = 'rigid'

_I_POWERS = np.array([1.0, 1j, -1.0, -1j])


def cap_half_angle(diameter: float, radius: float) -> float:
  """Half-angle of a cap of chord ``diameter`` on a sphere of ``radius``."""
  return float(np.arcsin(0.5 * diameter / radius))


@struct.dataclass
class RadialSpec:
  radius: float = struct.field(pytree_node=False)
  array_role: str = struct.field(pytree_node=False, default=SMA)
  sphere: str = struct.field(pytree_node=False, default=RIGID)
  cap_half_angle: Optional[float] = struct.field(pytree_node=False,
                                                 default=None)

  def __post_init__(self):
    if not self.radius > 0:
      raise errors.InvalidArraySpecError(
          f'Radius must be positive, got {self.radius}.')
    if self.array_role not in (SLA, SMA):
      raise errors.InvalidArraySpecError(
          f'Unknown array role {self.array_role!r}.')
    if self.sphere != RIGID:
      raise errors.InvalidArraySpecError(
          f'Unsupported sphere type {self.sphere!r}.')
    if self.array_role == SLA and not (
        self.cap_half_angle is not None
        and 0 < self.cap_half_angle < np.pi / 2):
      raise errors.InvalidArraySpecError(
          'Loudspeaker arrays need a cap half-angle in (0, pi/2), got '
          f'{self.cap_half_angle}.')

  @classmethod
  def sla(cls, radius: float, cap_diameter: float) -> 'RadialSpec':
    return cls(radius=radius, array_role=SLA,
               cap_half_angle=cap_half_angle(cap_diameter, radius))

  @classmethod
  def sma(cls, radius: float) -> 'RadialSpec':
    return cls(radius=radius, array_role=SMA)


@struct.dataclass
class ModalDiagonal:
  """Per-order diagonal of ``G`` or ``B``, ``values[..., n]`` for ``n <= order``."""
  values: np.ndarray
  order: int = struct.field(pytree_node=False)

  def expand(self) -> np.ndarray:
    """The full diagonal in flat ``(n, m)`` order."""
    return self.values[..., sh.degree_of_flat(self.order)]

  def truncate(self, order: int) -> 'ModalDiagonal':
    return ModalDiagonal(values=self.values[..., :order + 1], order=order)


def cap_coefficients(alpha: float, order: int) -> np.ndarray:
  """``C_n(alpha) = int_{cos alpha}^1 P_n(t) dt`` for ``n = 0..order``."""
  c = np.cos(alpha)
  n = np.arange(order + 2)
  legendre = sp_special.eval_legendre(n, c)
  coeffs = np.empty(order + 1)
  coeffs[0] = 1.0 - c
  m = np.arange(1, order + 1)
  coeffs[1:] = (legendre[m - 1] - legendre[m + 1]) / (2 * m + 1)
  return coeffs


def _hankel_kernel(order: int, kr) -> np.ndarray:
  # 1 / ((kr)^2 h_n'(kr)), shape kr.shape + (order + 1,)
  kr = np.asarray(kr, dtype=np.float64)
  _, h_prime = special.hankel1_table(order, kr)
  return 1.0 / (kr[..., None] ** 2 * h_prime)


def modal_coefficients(spec: RadialSpec, k, order: int) -> np.ndarray:
  """``b_n(k r)`` or ``g_n(k r)`` for ``n = 0..order`` along the last axis."""
  kernel = _hankel_kernel(order, np.asarray(k, dtype=np.float64) * spec.radius)
  if spec.array_role == SMA:
    n = np.arange(order + 1)
    return 4.0 * np.pi * _I_POWERS[(n + 1) % 4] * kernel
  return cap_coefficients(spec.cap_half_angle, order) * kernel


def b_n(k, spec: RadialSpec, n: int):
  """Rigid-sphere microphone coefficient of order ``n``."""
  if spec.array_role != SMA:
    raise ValueError('b_n is defined for microphone arrays.')
  return modal_coefficients(spec, k, n)[..., n]


def g_n(k, spec: RadialSpec, n: int):
  """Cap-radiator loudspeaker coefficient of order ``n``."""
  if spec.array_role != SLA:
    raise ValueError('g_n is defined for loudspeaker arrays.')
  return modal_coefficients(spec, k, n)[..., n]


def modal_matrix(spec: RadialSpec, k, order: int) -> ModalDiagonal:
  return ModalDiagonal(values=modal_coefficients(spec, k, order), order=order)


def modal_inverse(diagonal: ModalDiagonal,
                  floor: Optional[float] = None) -> ModalDiagonal:
  """Elementwise reciprocal of a modal diagonal.

  Raises:
    ModalConditioningError: some coefficient is smaller than ``floor``
      (default ``config.sphmimo_modal_floor``).
  """
  floor = config.sphmimo_modal_floor if floor is None else floor
  magnitude = np.abs(diagonal.values)
  if np.any(magnitude < floor):
    bad = np.argwhere(magnitude < floor)[0]
    raise errors.ModalConditioningError(int(bad[-1]),
                                        float(magnitude[tuple(bad)]), floor)
  return ModalDiagonal(values=1.0 / diagonal.values, order=diagonal.order)
