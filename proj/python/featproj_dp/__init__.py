# Copyright 2026 The featproj-dp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Feature-projective differentially private SGD (C++ core)."""

import json

from featproj_dp._core import (
    ContractViolation,
    FeatprojError,
    accounted_epsilon,
    blur_psi,
    calibrate_sigma,
    clip_gradient,
    decode_axis,
    default_config,
    default_orders,
    encode_axis,
    generate,
    gram_topk,
    noisy_aggregate,
    pck,
    project,
    rdp_subsampled_gaussian,
    run_sweep,
    variants,
)

__all__ = [
    "ContractViolation",
    "FeatprojError",
    "accounted_epsilon",
    "blur_psi",
    "calibrate_sigma",
    "clip_gradient",
    "decode_axis",
    "default_config",
    "default_config_dict",
    "default_orders",
    "encode_axis",
    "generate",
    "gram_topk",
    "noisy_aggregate",
    "pck",
    "project",
    "rdp_subsampled_gaussian",
    "run_sweep",
    "variants",
]


def default_config_dict():
    """Default sweep configuration as a nested dict."""
    return json.loads(default_config())
