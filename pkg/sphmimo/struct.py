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

"""Immutable record types that JAX can map over.

Every domain record of sphmimo (directions, SH vectors, array and system
descriptions, error curves) is a frozen dataclass registered as a JAX pytree
and with the serialization registry. Array-valued fields are pytree leaves;
descriptive fields (orders, enum-like strings, nested specs that should not be
traced) are declared with ``field(pytree_node=False)``.
"""

import dataclasses
import typing
from typing import Any, TypeVar

import jax

from . import serialization


_T = TypeVar('_T')


def dataclass(clz: _T) -> _T:
  """Turns ``clz`` into a frozen dataclass usable under JAX transformations.

  Example::

    from sphmimo import struct

    @struct.dataclass
    class Weights:
      values: jnp.ndarray
      order: int = struct.field(pytree_node=False)

    w = Weights(values=jnp.ones(9), order=2)
    w2 = w.replace(values=2 * w.values)  # instances are immutable
    jax.tree_util.tree_leaves(w2)        # [values]; order is metadata

  Args:
    clz: the class that will be transformed by the decorator.
  Returns:
    The new class.
  """
  data_clz: Any = dataclasses.dataclass(frozen=True)(clz)
  meta_fields = []
  data_fields = []
  for name, field_info in data_clz.__dataclass_fields__.items():
    if field_info.metadata.get('pytree_node', True):
      data_fields.append(name)
    else:
      meta_fields.append(name)

  def replace(self, **updates):
    """Returns a new object replacing the specified fields with new values."""
    return dataclasses.replace(self, **updates)

  data_clz.replace = replace

  def flatten(x):
    data = tuple(getattr(x, name) for name in data_fields)
    meta = tuple(getattr(x, name) for name in meta_fields)
    return data, meta

  def unflatten(meta, data):
    kwargs = dict(zip(meta_fields, meta))
    kwargs.update(zip(data_fields, data))
    # Bypass __post_init__ checks: leaves may be tracers or placeholders.
    obj = object.__new__(data_clz)
    for name, value in kwargs.items():
      object.__setattr__(obj, name, value)
    return obj

  jax.tree_util.register_pytree_node(data_clz, flatten, unflatten)

  def to_state_dict(x):
    return {name: serialization.to_state_dict(getattr(x, name))
            for name in data_fields}

  def from_state_dict(x, state):
    state = dict(state)
    updates = {}
    for name in data_fields:
      if name not in state:
        raise ValueError(f'Missing field {name} in state dict while restoring'
                         f' an instance of {clz.__name__}')
      updates[name] = serialization.from_state_dict(getattr(x, name),
                                                    state.pop(name))
    if state:
      names = ','.join(state.keys())
      raise ValueError(f'Unknown field(s) "{names}" in state dict while'
                       f' restoring an instance of {clz.__name__}')
    return x.replace(**updates)

  serialization.register_serialization_state(
      data_clz, to_state_dict, from_state_dict)

  return data_clz


def field(pytree_node=True, **kwargs):
  """A dataclass field; ``pytree_node=False`` marks static metadata."""
  return dataclasses.field(metadata={'pytree_node': pytree_node}, **kwargs)


TNode = TypeVar('TNode', bound='PyTreeNode')


class PyTreeNode:
  """Base class alternative to the ``dataclass`` decorator.

  Subclasses are turned into frozen pytree dataclasses on definition::

    class ErrorCurves(struct.PyTreeNode):
      frequencies: np.ndarray
      delta: np.ndarray
      realizations: int = struct.field(pytree_node=False)
  """

  def __init_subclass__(cls, **kwargs):
    super().__init_subclass__(**kwargs)
    dataclass(cls)

  if typing.TYPE_CHECKING:
    def __init__(self, *args, **kwargs):
      pass

    def replace(self: TNode, **overrides) -> TNode:
      pass
