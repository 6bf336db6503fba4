#
# Copyright 2026 The dpmq Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

"""Differentially private joint estimation of several quantiles."""

from dpmq._dpmq import (
    composed_single_quantiles,
    empirical_quantiles,
    epsilon_eff,
    exponential_quantile,
    hamming_distance,
    hs_joint_exp,
    inverse_sensitivity,
    inverse_sensitivity_utility,
    joint_exp,
    joint_exp_utility,
    recommended_sigma,
    sweep,
)

__all__ = [
    "composed_single_quantiles",
    "empirical_quantiles",
    "epsilon_eff",
    "exponential_quantile",
    "hamming_distance",
    "hs_joint_exp",
    "inverse_sensitivity",
    "inverse_sensitivity_utility",
    "joint_exp",
    "joint_exp_utility",
    "recommended_sigma",
    "sweep",
]
