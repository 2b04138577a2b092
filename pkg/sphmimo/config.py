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

"""Global configuration options for sphmimo.

.. data:: sphmimo_enable_x64

    Whether to switch JAX to 64-bit arrays when sphmimo is imported. Set by the
    SPHMIMO_ENABLE_X64 environment variable.  Defaults to True.

.. data:: sphmimo_bin_chunk

    Number of frequency bins handled by one parallel work item. Set by the
    SPHMIMO_BIN_CHUNK environment variable.  Defaults to 16.

.. data:: sphmimo_modal_floor

    Smallest modal coefficient magnitude accepted by ``radial.modal_inverse``.
    Set by the SPHMIMO_MODAL_FLOOR environment variable.  Defaults to 1e-300.
"""

import os

# Config parsing utils

def bool_env(varname: str, default: bool) -> bool:
  """Read an environment variable and interpret it as a boolean.
  True values are (case insensitive): 'y', 'yes', 't', 'true', 'on', and '1';
  false values are 'n', 'no', 'f', 'false', 'off', and '0'.
  Args:
    varname: the name of the variable
    default: the default boolean value
  Raises: ValueError if the environment variable is anything else.
  """
  val = os.getenv(varname, str(default))
  val = val.lower()
  if val in ('y', 'yes', 't', 'true', 'on', '1'):
    return True
  elif val in ('n', 'no', 'f', 'false', 'off', '0'):
    return False
  else:
    raise ValueError(
        "invalid truth value %r for environment %r" % (val, varname))


def int_env(varname: str, default: int) -> int:
  """Read an environment variable holding a positive integer."""
  val = os.getenv(varname, str(default))
  try:
    parsed = int(val)
  except ValueError:
    raise ValueError(
        "invalid integer %r for environment %r" % (val, varname)) from None
  if parsed < 1:
    raise ValueError(
        "expected a positive integer for environment %r, got %d"
        % (varname, parsed))
  return parsed


def float_env(varname: str, default: float) -> float:
  """Read an environment variable holding a float."""
  val = os.getenv(varname, repr(default))
  try:
    return float(val)
  except ValueError:
    raise ValueError(
        "invalid float %r for environment %r" % (val, varname)) from None


# sphmimo Global Configuration Variables:

# Whether to enable 64-bit arrays in JAX on import.
sphmimo_enable_x64 = bool_env('SPHMIMO_ENABLE_X64', True)

# Bins per parallel work item. Never derived from the thread count.
sphmimo_bin_chunk = int_env('SPHMIMO_BIN_CHUNK', 16)

# Conditioning floor for modal inversion.
sphmimo_modal_floor = float_env('SPHMIMO_MODAL_FLOOR', 1e-300)
