// Copyright 2026 The FedSeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FEDSEQ_STATUS_MACROS_H_
#define FEDSEQ_STATUS_MACROS_H_

#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define FEDSEQ_STATUS_CONCAT_INNER_(x, y) x##y
#define FEDSEQ_STATUS_CONCAT_(x, y) FEDSEQ_STATUS_CONCAT_INNER_(x, y)

#define FEDSEQ_RETURN_IF_ERROR(expr)             \
  do {                                           \
    const absl::Status _fedseq_status = (expr);  \
    if (!_fedseq_status.ok()) return _fedseq_status; \
  } while (0)

#define FEDSEQ_ASSIGN_OR_RETURN_IMPL_(tmp, lhs, rexpr) \
  auto tmp = (rexpr);                                  \
  if (!tmp.ok()) return std::move(tmp).status();       \
  lhs = std::move(tmp).value()

// Evaluates `rexpr` (an absl::StatusOr<T>), returning its status on error and
// otherwise assigning the value to `lhs`.
#define FEDSEQ_ASSIGN_OR_RETURN(lhs, rexpr) \
  FEDSEQ_ASSIGN_OR_RETURN_IMPL_(            \
      FEDSEQ_STATUS_CONCAT_(_fedseq_statusor_, __LINE__), lhs, rexpr)

#endif  // FEDSEQ_STATUS_MACROS_H_
