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

"""Helpers for deterministic parallel evaluation over frequency bins."""

from concurrent import futures
import os
from typing import Callable, Optional, Sequence

import jax
import numpy as np

from . import config


# Role counters of the random streams.
SLA_NOISE = 0
SMA_NOISE = 1
SLA_POSITION = 2
SMA_POSITION = 3


def stream_key(seed: int, *counters: int):
  """Returns a PRNG key for ``seed`` with integer counters folded in.

  The key depends only on its arguments, so a draw for (seed, role,
  realization, bin) is the same whatever order bins are processed in.
  """
  key = jax.random.PRNGKey(seed)
  for counter in counters:
    key = jax.random.fold_in(key, counter)
  return key


def complex_normal_batch(keys, count: int) -> np.ndarray:
  """Unit-variance circular complex Gaussians, ``count`` per key."""
  parts = jax.vmap(
      lambda k: jax.random.normal(k, (count, 2), dtype=jax.numpy.float64))(keys)
  parts = np.asarray(parts, dtype=np.float64)
  return (parts[..., 0] + 1j * parts[..., 1]) / np.sqrt(2.0)


def bin_noise(seed: int, role: int, realization: int,
              bins: Sequence[int], count: int) -> np.ndarray:
  """Unit-variance complex noise, one row of ``count`` draws per bin index."""
  bins = np.asarray(bins, dtype=np.int64)
  if bins.size == 0:
    return np.zeros((0, count), dtype=np.complex128)
  base = stream_key(seed, role, realization)
  keys = jax.vmap(lambda b: jax.random.fold_in(base, b))(bins.astype(np.uint32))
  return complex_normal_batch(keys, count)


def angle_offsets(seed: int, role: int, realization: int, count: int,
                  max_offset: float) -> np.ndarray:
  """Uniform offsets in ``[-max_offset, max_offset]``, shape ``(count, 2)``."""
  key = stream_key(seed, role, realization)
  draws = jax.random.uniform(key, (count, 2), dtype=jax.numpy.float64,
                             minval=-max_offset, maxval=max_offset)
  return np.asarray(draws, dtype=np.float64)


def default_threads() -> int:
  return os.cpu_count() or 1


def chunked_map(fn: Callable[[np.ndarray], np.ndarray], count: int,
                chunk_size: Optional[int] = None,
                threads: Optional[int] = None) -> np.ndarray:
  """Applies ``fn`` to fixed-size chunks of ``range(count)``.

  ``fn`` takes an index array and returns an array whose leading axis matches
  it. Chunks have the same boundaries for any ``threads``, and results are
  concatenated in chunk order, so the output does not depend on scheduling.

  Args:
    fn: per-chunk function.
    count: number of items.
    chunk_size: items per chunk, defaults to ``config.sphmimo_bin_chunk``.
    threads: worker threads, defaults to the number of cores.
  Returns:
    The concatenation of ``fn`` over all chunks (a tree of arrays is
    concatenated leaf by leaf).
  """
  chunk_size = chunk_size or config.sphmimo_bin_chunk
  threads = threads or default_threads()
  chunks = [np.arange(start, min(start + chunk_size, count))
            for start in range(0, count, chunk_size)]
  if threads == 1 or len(chunks) <= 1:
    results = [fn(chunk) for chunk in chunks]
  else:
    with futures.ThreadPoolExecutor(max_workers=threads) as pool:
      results = list(pool.map(fn, chunks))
  return jax.tree_util.tree_map(lambda *xs: np.concatenate(xs, axis=0),
                                *results)
