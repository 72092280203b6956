// Copyright 2026 The disfl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DISFL_JSON_UTIL_HPP
#define DISFL_JSON_UTIL_HPP

#include <initializer_list>
#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace disfl {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Rejects keys outside `allowed` so misspelled options do not pass silently.
inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  std::set<std::string, std::less<>> names(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!names.contains(key)) throw ConfigError(std::string("unknown key '") + key + "' in " + what);
}

template <class T>
void read_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

}  // namespace disfl

#endif  // DISFL_JSON_UTIL_HPP
