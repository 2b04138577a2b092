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

"""SphMIMO API."""

import jax as _jax

from . import config
from .version import __version__

if config.sphmimo_enable_x64:
  _jax.config.update('jax_enable_x64', True)

# Allow `import sphmimo`; `sphmimo.analysis.[...]`, etc
from . import analysis
from . import beamforming
from . import geometry
from . import mimo
from . import radial
from . import room
from . import sh
from . import special
