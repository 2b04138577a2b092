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

"""sphmimo error classes.

=== When to create an sphmimo error class?

If an error message requires more explanation than a one-liner, it is useful to
add it as a separate error class. The docstring of the class says what went
wrong and how to fix it.

=== How to name the error class?

* If the error occurs when doing something, name the error
  <Verb><Object><TypeOfError>Error, e.g. ``LoadGridFormatError``.

* If there is no concrete action involved only a description of the error is
  sufficient. For instance: InvalidDirectionError, SamplingRankError, etc.

Numerical failures derive from ``NumericalError`` so that the command line
front end can map them to a dedicated exit code.
"""


class SphMimoError(Exception):

  def __init__(self, message):
    module_name = self.__class__.__module__
    class_name = self.__class__.__name__
    error_msg = f'{message} ({module_name}.{class_name})'
    super().__init__(error_msg)


class NumericalError(SphMimoError):
  """Base class of errors raised by the numerical layer."""


#################################################
# sh.py / special.py errors                     #
#################################################


class InvalidDirectionError(SphMimoError):
  """Elevation angles must lie in ``[0, pi]``.

  Azimuths are wrapped into ``[0, 2 pi)`` silently, elevations are not,
  because an elevation outside the range usually means that degrees were
  passed where radians were expected. Use ``Direction.from_degrees`` for
  angles in degrees.
  """

  def __init__(self, theta):
    super().__init__(f'Elevation {theta!r} is outside [0, pi] radians.')


class BesselDomainError(NumericalError):
  """Spherical Bessel functions are evaluated for positive arguments only.

  The radial functions are evaluated at ``k * r``. A non-positive argument
  means a zero frequency bin or a zero radius slipped through.
  """

  def __init__(self, x):
    super().__init__(f'Spherical Bessel argument must be > 0, got min {x!r}.')


#################################################
# geometry.py errors                            #
#################################################


class SamplingRankError(NumericalError):
  """The element layout cannot resolve the requested SH order.

  The matrix of spherical harmonics of order ``N`` evaluated at the element
  directions must have full column rank ``(N + 1)**2``. Either lower the
  order or use more (or better spread) elements.
  """

  def __init__(self, order, rank, count):
    super().__init__(
        f'{count} elements give rank {rank} < {(order + 1) ** 2} '
        f'required for order {order}.')


class InvalidArraySpecError(SphMimoError):
  """An array description violates ``(N + 1)**2 <= elements <= ...``.

  The controlled order ``N`` must not exceed what the element count supports
  and the representation order ``N_tilde`` must be at least ``N``.
  """

  def __init__(self, message):
    super().__init__(message)


#################################################
# radial.py errors                              #
#################################################


class ModalConditioningError(NumericalError):
  """A modal coefficient is too small to be inverted.

  The floor is set by ``SPHMIMO_MODAL_FLOOR`` (default ``1e-300``). Hitting
  it means the analysis band reaches frequencies where the normalization is
  no longer representable in floating point; raise ``f_min`` or lower the
  controlled order.
  """

  def __init__(self, order, magnitude, floor):
    super().__init__(
        f'Modal coefficient of order {order} has magnitude {magnitude:.3e} '
        f'below the conditioning floor {floor:.1e}.')


#################################################
# mimo.py / analysis.py errors                  #
#################################################


class InvalidSystemSpecError(SphMimoError):
  """The two arrays overlap or their orders are inconsistent.

  The distance ``r0`` between the array centers must exceed the sum of the
  two radii.
  """

  def __init__(self, message):
    super().__init__(message)


class OrderReductionNotNeededError(SphMimoError):
  """The system already satisfies ``r_M N_L = r_L N_M``.

  ``analysis.reduce_order`` only applies to unmatched systems. Check
  ``analysis.matching_criterion`` first.
  """

  def __init__(self, residual):
    super().__init__(
        f'Matching criterion residual is {residual:.3g}; no order reduction '
        'is needed.')


#################################################
# beamforming.py errors                         #
#################################################


class DimensionMismatchError(SphMimoError):
  """Beamforming weights and transfer matrix have incompatible shapes."""

  def __init__(self, expected, got):
    super().__init__(f'Expected a matrix of shape {expected}, got {got}.')


class DegenerateBeamResponseError(NumericalError):
  """The error-free beamformer output vanishes at every evaluated bin.

  The beamforming error is a ratio to the error-free output. Bins where the
  output is below ``1e-30`` are masked; if all of them are, the look
  directions are orthogonal to the propagation path.
  """

  def __init__(self):
    super().__init__('Error-free beamformer output is zero at every bin.')


#################################################
# room.py errors                                #
#################################################


class InvalidRoomSpecError(SphMimoError):
  """The room description is not physically valid.

  Array positions must lie strictly inside the room, and the reverberation
  time and the sampling frequency must be positive.
  """

  def __init__(self, message):
    super().__init__(message)


class InfeasibleReverberationError(SphMimoError):
  """The requested reverberation time needs more than total absorption.

  Sabine's formula gives an absorption coefficient above one, or even
  near-total absorption leaves the image-source decay too slow. Increase the
  reverberation time or pick another absorption formula.
  """

  def __init__(self, t60, absorption):
    super().__init__(
        f'T60 of {t60} s is out of reach (absorption {absorption:.3f}).')


class BandOutsideNyquistError(SphMimoError):
  """The band-pass edges (including transitions) must lie in ``(0, fs/2)``."""

  def __init__(self, band, fs):
    super().__init__(f'Band {band} Hz is outside (0, {fs / 2}) Hz.')


class ReflectionIndexError(SphMimoError):
  """The look reflection index does not name an enumerated path.

  Index 0 is the direct path; paths are sorted by time delay.
  """

  def __init__(self, index, count):
    super().__init__(
        f'Reflection index {index} out of range for {count} paths.')


#################################################
# run_config.py / commands.py errors            #
#################################################


class MissingRoomError(SphMimoError):
  """Room commands need a ``room`` section in the run configuration."""

  def __init__(self, command):
    super().__init__(f'Command {command!r} requires a "room" section.')


class ConfigError(SphMimoError):
  """A run configuration could not be parsed or validated.

  The message points at the offending key and, when it can be found, the line
  of the configuration file that holds it.
  """

  def __init__(self, message, path=None, key=None, line=None):
    self.path = path
    self.key = key
    self.line = line
    where = path or '<config>'
    if line is not None:
      where = f'{where}:{line}'
    if key:
      message = f'{key}: {message}'
    super().__init__(f'{where}: {message}')
