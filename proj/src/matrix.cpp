// Copyright 2026 The tagcl Authors.
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

#include "tagcl/matrix.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace tagcl {
namespace {

static_assert(std::endian::native == std::endian::little,
              "matrix files are little-endian; big-endian hosts need byteswaps");

constexpr char kMatrixMagic[4] = {'L', 'G', 'X', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ConfigError("matrix file truncated");
  return v;
}

}  // namespace

bool is_valid_csr(const SparseMatrix& s) {
  if (!s.isCompressed()) return false;
  const auto* offsets = s.outerIndexPtr();
  const auto* cols = s.innerIndexPtr();
  if (offsets[0] != 0 || offsets[s.rows()] != s.nonZeros()) return false;
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    if (offsets[r + 1] < offsets[r]) return false;
    for (auto k = offsets[r]; k < offsets[r + 1]; ++k) {
      if (cols[k] < 0 || cols[k] >= s.cols()) return false;
      if (k > offsets[r] && cols[k] <= cols[k - 1]) return false;
    }
  }
  return true;
}

void write_matrix_record(std::ostream& out, const DenseMatrix& m) {
  out.write(kMatrixMagic, 4);
  write_u64(out, static_cast<std::uint64_t>(m.rows()));
  write_u64(out, static_cast<std::uint64_t>(m.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      row_major = m;
  out.write(reinterpret_cast<const char*>(row_major.data()),
            static_cast<std::streamsize>(sizeof(double) * row_major.size()));
}

DenseMatrix read_matrix_record(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMatrixMagic, 4) != 0) {
    throw ConfigError("not an LGX1 matrix record");
  }
  const auto rows = read_u64(in);
  const auto cols = read_u64(in);
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) {
    throw ConfigError("matrix file: implausible shape");
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      row_major(rows, cols);
  in.read(reinterpret_cast<char*>(row_major.data()),
          static_cast<std::streamsize>(sizeof(double) * row_major.size()));
  if (!in) throw ConfigError("matrix file truncated");
  return row_major;
}

void write_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_matrix_record(out, m);
  if (!out) throw ConfigError("write failed: " + path.string());
}

DenseMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_matrix_record(in);
}

}  // namespace tagcl
