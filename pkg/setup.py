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

"""setup.py for SphMIMO."""

import os
from setuptools import find_packages
from setuptools import setup

here = os.path.abspath(os.path.dirname(__file__))
try:
  README = open(os.path.join(here, "README.md"), encoding='utf-8').read()
except IOError:
  README = ""

install_requires = [
    "numpy>=1.20",
    "jax>=0.4.1",
    "jaxlib>=0.4.1",
    "scipy>=1.7",
    "msgpack",
    "absl-py",
    "ml-collections",
    "soundfile",
]

tests_require = [
    "jsonschema",
    "pytest",
    "pytest-cov",
    "pytest-xdist",
]

__version__ = None

with open('sphmimo/version.py') as f:
  exec(f.read(), globals())

setup(
    name="sphmimo",
    version=__version__,
    description="SphMIMO: design and analysis of spherical loudspeaker-array / microphone-array systems",
    long_description="\n\n".join([README]),
    long_description_content_type='text/markdown',
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python :: 3.9",
        "Topic :: Multimedia :: Sound/Audio :: Analysis",
        "Topic :: Scientific/Engineering :: Physics",
        ],
    keywords="spherical harmonics, microphone array, loudspeaker array, beamforming, room acoustics",
    author="SphMIMO team",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"sphmimo": ["py.typed", "configs/*.json",
                              "schemas/*.json"]},
    zip_safe=False,
    python_requires=">=3.9",
    install_requires=install_requires,
    extras_require={
        "testing": tests_require,
        },
    entry_points={
        "console_scripts": ["sphmimo=sphmimo.main:console_main"],
        },
    )
