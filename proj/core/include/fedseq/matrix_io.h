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

#ifndef FEDSEQ_MATRIX_IO_H_
#define FEDSEQ_MATRIX_IO_H_

#include <string>
#include "absl/strings/string_view.h"

#include "Eigen/Dense"
#include "absl/status/statusor.h"

namespace fedseq {

// Text checkpoint: a header line "rows cols" followed by one comma-separated
// row per line. Values use 17 significant digits so a round trip is exact.
std::string SerializeMatrix(const Eigen::MatrixXd& m);
absl::StatusOr<Eigen::MatrixXd> ParseMatrix(absl::string_view text);

absl::Status WriteMatrixFile(const Eigen::MatrixXd& m, const std::string& path);
absl::StatusOr<Eigen::MatrixXd> ReadMatrixFile(const std::string& path);

}  // namespace fedseq

#endif  // FEDSEQ_MATRIX_IO_H_
