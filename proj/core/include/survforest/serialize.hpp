/*
 * Copyright 2026 The survforest authors.
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
#ifndef SURVFOREST_SERIALIZE_HPP_
#define SURVFOREST_SERIALIZE_HPP_

#include <string>

#include "survforest/forest.hpp"

namespace survforest {

/// Version of the forest interchange document. Readers reject any other
/// value with a version error.
inline constexpr int kForestSchemaVersion = 1;

/// Serializes a forest to the versioned JSON interchange form. Numbers are
/// written with round-trip precision, so deserialize(serialize(f)) predicts
/// bit-identically; re-serializing the same forest is byte-stable.
std::string serialize_forest(const Forest& forest);
Forest deserialize_forest(const std::string& bytes);

/// File I/O. Paths ending in ".gz" (or gzip=true) use a gzip container with
/// a zeroed timestamp so output bytes stay run-independent.
void save_forest(const Forest& forest, const std::string& path,
                 bool gzip = false);
Forest load_forest(const std::string& path);

}  // namespace survforest

#endif  // SURVFOREST_SERIALIZE_HPP_
