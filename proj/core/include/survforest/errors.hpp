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
#ifndef SURVFOREST_ERRORS_HPP_
#define SURVFOREST_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace survforest {

/// Bad user input: unknown flags, malformed option values, impossible
/// configuration. Maps to CLI exit code 2.
class usage_error : public std::runtime_error {
 public:
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally invalid data: malformed files, schema mismatches, shape
/// mismatches between a forest and a frame. Maps to CLI exit code 2.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input parse failure with position information (line numbers are 1-based
/// and count the header).
class parse_error : public validation_error {
 public:
  parse_error(const std::string& msg, std::size_t line)
      : validation_error(msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Mathematically invalid request for otherwise well-formed data, e.g. too
/// few distinct values for the requested number of quantile groups.
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace survforest

#endif  // SURVFOREST_ERRORS_HPP_
