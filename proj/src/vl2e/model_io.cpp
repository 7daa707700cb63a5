// Copyright 2026 The Affectlink Authors.
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

#include "affectlink/vl2e/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "affectlink/error.hpp"

namespace affectlink::vl2e {
namespace {

static_assert(std::endian::native == std::endian::little,
              "model files store raw little-endian values");

template <typename Scalar>
constexpr std::uint8_t DtypeCode() {
  return sizeof(Scalar) == 4 ? 1 : 2;
}

void PutLe(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Cursor {
 public:
  explicit Cursor(const std::vector<std::uint8_t>& b) : b_(b) {}

  std::uint64_t Le(int width, const char* what) {
    Need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{b_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  const std::uint8_t* Take(std::size_t n, const char* what) {
    Need(n, what);
    const std::uint8_t* p = b_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool AtEnd() const { return pos_ == b_.size(); }

 private:
  void Need(std::size_t n, const char* what) const {
    if (b_.size() - pos_ < n) {
      throw Error(ErrorCode::kModelFormatError, std::string("file truncated while reading ") + what);
    }
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename Scalar>
std::vector<std::uint8_t> SerializeParams(const ModelParams<Scalar>& params) {
  std::vector<std::uint8_t> out = {'V', 'L', '2', 'E'};
  PutLe(out, kModelFormatVersion, 2);
  PutLe(out, params.size(), 4);
  for (const auto& [name, t] : params) {
    PutLe(out, name.size(), 2);
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(DtypeCode<Scalar>());
    out.push_back(static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) PutLe(out, static_cast<std::uint32_t>(d), 4);
    const auto* raw = reinterpret_cast<const std::uint8_t*>(t.data.data());
    out.insert(out.end(), raw, raw + t.data.size() * sizeof(Scalar));
  }
  return out;
}

template <typename Scalar>
ModelParams<Scalar> DeserializeParams(const std::vector<std::uint8_t>& bytes) {
  Cursor c(bytes);
  const std::uint8_t* magic = c.Take(4, "magic");
  if (std::memcmp(magic, "VL2E", 4) != 0) {
    throw Error(ErrorCode::kModelFormatError, "bad magic, expected VL2E");
  }
  const auto version = c.Le(2, "version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::kModelFormatError, "unsupported version " + std::to_string(version));
  }
  const auto count = c.Le(4, "tensor count");
  ModelParams<Scalar> params;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = c.Le(2, "tensor name length");
    const std::uint8_t* name_bytes = c.Take(name_len, "tensor name");
    std::string name(name_bytes, name_bytes + name_len);
    const auto dtype = c.Le(1, "dtype");
    if (dtype != DtypeCode<Scalar>()) {
      throw Error(ErrorCode::kModelFormatError,
                  "tensor " + name + " has dtype " + std::to_string(dtype) + ", expected " +
                      std::to_string(DtypeCode<Scalar>()));
    }
    const auto rank = c.Le(1, "rank");
    Tensor<Scalar> t;
    for (std::uint64_t r = 0; r < rank; ++r) t.shape.push_back(static_cast<int>(c.Le(4, "dims")));
    t.data.resize(Tensor<Scalar>::NumElements(t.shape));
    const std::size_t nbytes = t.data.size() * sizeof(Scalar);
    std::memcpy(t.data.data(), c.Take(nbytes, "tensor values"), nbytes);
    if (!params.emplace(name, std::move(t)).second) {
      throw Error(ErrorCode::kModelFormatError, "duplicate tensor " + name);
    }
  }
  if (!c.AtEnd()) throw Error(ErrorCode::kModelFormatError, "trailing bytes after last tensor");
  return params;
}

template <typename Scalar>
void SaveParams(const ModelParams<Scalar>& params, const std::string& path) {
  const auto bytes = SerializeParams(params);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kModelFormatError, "cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::kModelFormatError, "failed writing " + path);
}

template <typename Scalar>
ModelParams<Scalar> LoadParams(const std::string& path, const std::optional<ModelConfig>& cfg) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kModelFormatError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  auto params = DeserializeParams<Scalar>(bytes);
  if (cfg) CheckParamsMatch(params, *cfg);
  return params;
}

template std::vector<std::uint8_t> SerializeParams<float>(const ModelParams<float>&);
template std::vector<std::uint8_t> SerializeParams<double>(const ModelParams<double>&);
template ModelParams<float> DeserializeParams<float>(const std::vector<std::uint8_t>&);
template ModelParams<double> DeserializeParams<double>(const std::vector<std::uint8_t>&);
template void SaveParams<float>(const ModelParams<float>&, const std::string&);
template void SaveParams<double>(const ModelParams<double>&, const std::string&);
template ModelParams<float> LoadParams<float>(const std::string&, const std::optional<ModelConfig>&);
template ModelParams<double> LoadParams<double>(const std::string&, const std::optional<ModelConfig>&);

}  // namespace affectlink::vl2e
