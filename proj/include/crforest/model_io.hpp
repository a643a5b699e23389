/*
 * Copyright 2026 The crforest Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef CRFOREST_MODEL_IO_H_
#define CRFOREST_MODEL_IO_H_

#include <string>

#include "crforest/forest.hpp"

namespace crforest {

// JSON model file: format version, config, schema, per-layer trees, final
// tree, provenance, fit seed and a content fingerprint. Doubles round-trip
// exactly, so load(save(m)) reproduces predictions bit-for-bit; the dump is
// canonical (sorted keys), so equal models produce equal bytes.
std::string model_to_string(const CRFModel& model);
CRFModel model_from_string(const std::string& text);

void save_model(const CRFModel& model, const std::string& path);
CRFModel load_model(const std::string& path);

}  // namespace crforest

#endif  // CRFOREST_MODEL_IO_H_
