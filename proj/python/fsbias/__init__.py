# Copyright 2026 The fsbias Authors.
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
"""Few-shot social bias classification: selection, metrics and sweeps."""

from ._fsbias import (
    BackendError,
    DataError,
    Error,
    TfidfModel,
    TransportError,
    UsageError,
    builtin_task_names,
    dedup_ratio,
    edit_distance,
    f1_scores,
    histogram_bin_edges,
    load_config,
    roc_auc,
    run_experiment,
    select_similarity_balanced,
    select_stratified_balanced,
    task,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "DataError",
    "Error",
    "TfidfModel",
    "TransportError",
    "UsageError",
    "builtin_task_names",
    "dedup_ratio",
    "edit_distance",
    "f1_scores",
    "histogram_bin_edges",
    "load_config",
    "roc_auc",
    "run_experiment",
    "select_similarity_balanced",
    "select_stratified_balanced",
    "task",
    "tokenize",
]
