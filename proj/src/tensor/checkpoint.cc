// Copyright 2026 The strudec Authors.
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

#include "strudec/checkpoint.h"

#include <bit>
#include <fstream>
#include <sstream>

#include "strudec/errors.h"

namespace strudec {
namespace {

constexpr const char* kMagic = "strudec-params";

static_assert(std::endian::native == std::endian::little,
              "parameter files are written in little-endian order");

}  // namespace

void save_parameters(const ParameterSet& params,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << kMagic << " 1 " << params.size() << "\n";
  for (const auto& e : params.entries()) {
    const Matrix& m = e.tensor->data();
    out << e.name << " " << m.rows() << " " << m.cols() << "\n";
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    out << "\n";
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::map<std::string, Matrix> read_parameters(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  header >> magic >> version >> count;
  if (magic != kMagic || version != 1) {
    throw DataError(path.string() + " is not a parameter file");
  }
  std::map<std::string, Matrix> out;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw DataError("truncated parameter file");
    std::istringstream rec(line);
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(rec >> name >> rows >> cols) || rows <= 0 || cols <= 0) {
      throw DataError("bad parameter header: " + line);
    }
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (in.get() != '\n' || !in) {
      throw DataError("truncated data for parameter " + name);
    }
    out.emplace(std::move(name), std::move(m));
  }
  return out;
}

void load_parameters(ParameterSet& params, const std::filesystem::path& path) {
  auto stored = read_parameters(path);
  for (const auto& e : params.entries()) {
    auto it = stored.find(e.name);
    if (it == stored.end()) {
      throw RefusalError("checkpoint lacks parameter " + e.name);
    }
    Matrix& dst = e.tensor->data();
    if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols()) {
      throw RefusalError("shape mismatch for parameter " + e.name);
    }
    dst = it->second;
  }
}

}  // namespace strudec
