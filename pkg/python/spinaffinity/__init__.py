# @license
# Copyright 2024 The spinaffinity Authors.
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

from .complex_model import Complex, LigandAtom, ProteinAtom, load_complex, parse_complex
from .graph import ComplexGraph, EdgeKind, build_graph, build_knn_graph
from .transformer import ModelConfig
from .physics import PhysicsConfig
from .training import TrainConfig, train
from .config import RunConfig
from .model import SpinModel
from .checkpoint import ModelCheckpoint, load_checkpoint, save_checkpoint
from .synthetic import Dataset, gen_synthetic, gen_synthetic_clusters, load_dataset
from . import metrics
