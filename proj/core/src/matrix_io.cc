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

#include "fedseq/matrix_io.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"

namespace fedseq {

std::string SerializeMatrix(const Eigen::MatrixXd& m) {
  std::string out = absl::StrCat(m.rows(), " ", m.cols(), "\n");
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j > 0) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

absl::StatusOr<Eigen::MatrixXd> ParseMatrix(absl::string_view text) {
  std::vector<absl::string_view> lines =
      absl::StrSplit(text, '\n', absl::SkipWhitespace());
  if (lines.empty()) return absl::InvalidArgumentError("matrix: empty input");
  std::vector<absl::string_view> header =
      absl::StrSplit(absl::StripAsciiWhitespace(lines[0]), ' ',
                     absl::SkipEmpty());
  int64_t rows = 0, cols = 0;
  if (header.size() != 2 || !absl::SimpleAtoi(header[0], &rows) ||
      !absl::SimpleAtoi(header[1], &cols) || rows < 0 || cols < 0) {
    return absl::InvalidArgumentError("matrix: header must be 'rows cols'");
  }
  if (static_cast<int64_t>(lines.size()) - 1 != rows) {
    return absl::InvalidArgumentError(absl::StrCat(
        "matrix: expected ", rows, " rows, found ", lines.size() - 1));
  }
  Eigen::MatrixXd m(rows, cols);
  for (int64_t i = 0; i < rows; ++i) {
    std::vector<absl::string_view> fields =
        absl::StrSplit(absl::StripAsciiWhitespace(lines[i + 1]), ',');
    if (static_cast<int64_t>(fields.size()) != cols) {
      return absl::InvalidArgumentError(absl::StrCat(
          "matrix: row ", i, " has ", fields.size(), " values, expected ",
          cols));
    }
    for (int64_t j = 0; j < cols; ++j) {
      double v = 0.0;
      if (!absl::SimpleAtod(absl::StripAsciiWhitespace(fields[j]), &v)) {
        return absl::InvalidArgumentError(
            absl::StrCat("matrix: bad value at row ", i, " column ", j));
      }
      m(i, j) = v;
    }
  }
  return m;
}

absl::Status WriteMatrixFile(const Eigen::MatrixXd& m,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << SerializeMatrix(m);
  return out ? absl::OkStatus()
             : absl::DataLossError(absl::StrCat("short write to ", path));
}

absl::StatusOr<Eigen::MatrixXd> ReadMatrixFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseMatrix(buffer.str());
}

}  // namespace fedseq
