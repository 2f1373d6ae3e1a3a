// Copyright 2026 The uqkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UQKIT_STATUS_H_
#define UQKIT_STATUS_H_

#include <optional>
#include <string>
#include <string_view>
#include <type_traits>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/string_view.h"

namespace uqkit {

// The packaged Abseil ships its own string_view type. These bridge it to the
// standard one.
inline std::string_view StdView(absl::string_view s) {
  return {s.data(), s.size()};
}
inline absl::string_view AbslView(std::string_view s) {
  return {s.data(), s.size()};
}

// The status message as a std::string_view.
inline std::string_view Message(const absl::Status& status) {
  return StdView(status.message());
}

namespace internal {
template <typename T>
decltype(auto) ForStrCat(const T& value) {
  if constexpr (std::is_same_v<T, std::string_view>) {
    return AbslView(value);
  } else {
    return (value);
  }
}
}  // namespace internal

// absl::StrCat that also accepts std::string_view.
template <typename... Args>
std::string StrCat(const Args&... args) {
  return absl::StrCat(internal::ForStrCat(args)...);
}

// InvalidArgument status tagged with the name of the offending field.
absl::Status FieldError(std::string_view field, std::string_view message);

// The field attached by FieldError, if any.
std::optional<std::string> ErrorField(const absl::Status& status);

// Prefixes the status message, keeping code and payloads.
absl::Status Annotate(const absl::Status& status, std::string_view prefix);

}  // namespace uqkit

// Evaluates `expr` (an absl::Status) and returns it from the enclosing
// function when not ok.
#define UQKIT_RETURN_IF_ERROR(expr)                \
  do {                                             \
    if (absl::Status _uq_st = (expr); !_uq_st.ok()) \
      return _uq_st;                               \
  } while (0)

#define UQKIT_CONCAT_INNER_(a, b) a##b
#define UQKIT_CONCAT_(a, b) UQKIT_CONCAT_INNER_(a, b)

// Assigns the value of a StatusOr expression or propagates its error.
#define UQKIT_ASSIGN_OR_RETURN(lhs, expr) \
  UQKIT_ASSIGN_OR_RETURN_IMPL_(UQKIT_CONCAT_(_uq_statusor_, __LINE__), lhs, expr)

#define UQKIT_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, expr) \
  auto tmp = (expr);                                 \
  if (!tmp.ok()) return tmp.status();                \
  lhs = std::move(tmp).value()

#endif  // UQKIT_STATUS_H_
