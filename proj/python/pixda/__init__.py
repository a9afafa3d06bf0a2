# Copyright 2026 The pixda Authors. All Rights Reserved.
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
# ==============================================================================
"""Python bindings for the pixda segmentation core."""

from pixda._pixda import (
    ConfigError,
    DataError,
    InvalidArgument,
    TrainingError,
    cmd_eval,
    cmd_generate,
    cmd_train,
    confusion_matrix,
    fda_translate,
    focal_loss,
    generate_toy,
    kd_loss,
    metrics,
    select_epoch,
    threshold_at,
    version,
)

__version__ = version().split()[-1]

__all__ = [
    "ConfigError",
    "DataError",
    "InvalidArgument",
    "TrainingError",
    "cmd_eval",
    "cmd_generate",
    "cmd_train",
    "confusion_matrix",
    "fda_translate",
    "focal_loss",
    "generate_toy",
    "kd_loss",
    "metrics",
    "select_epoch",
    "threshold_at",
    "version",
]
