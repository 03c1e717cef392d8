#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "l2t/tensor.hpp"

namespace l2t {

template <class T>
struct NamedArray {
  std::string name;
  Tensor<T>* tensor;
};

template <class T>
struct ConstNamedArray {
  std::string name;
  const Tensor<T>* tensor;
};

// Parameter structs expose `value_type` and a `visit(f)` member calling
// f(name, tensor) for every array in a fixed order.

template <class P>
std::vector<NamedArray<typename P::value_type>> named_arrays(P& params, const std::string& prefix = {}) {
  std::vector<NamedArray<typename P::value_type>> out;
  params.visit([&](const std::string& name, Tensor<typename P::value_type>& t) {
    out.push_back({prefix + name, &t});
  });
  return out;
}

template <class P>
std::vector<ConstNamedArray<typename P::value_type>> named_arrays(const P& params,
                                                                  const std::string& prefix = {}) {
  std::vector<ConstNamedArray<typename P::value_type>> out;
  params.visit([&](const std::string& name, const Tensor<typename P::value_type>& t) {
    out.push_back({prefix + name, &t});
  });
  return out;
}

template <class P>
P zeros_like(const P& params) {
  P out = params;
  out.visit([](const std::string&, auto& t) { t.fill(0); });
  return out;
}

template <class P>
std::size_t parameter_count(const P& params) {
  std::size_t n = 0;
  params.visit([&](const std::string&, const auto& t) { n += t.size(); });
  return n;
}

/// FNV-1a over the raw bytes of every array; used to assert that a component
/// was or was not touched.
template <class P>
std::uint64_t checksum(const P& params) {
  std::uint64_t h = 1469598103934665603ull;
  params.visit([&](const std::string&, const auto& t) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    for (std::size_t i = 0; i < t.size() * sizeof(t[0]); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  });
  return h;
}

template <class P>
bool all_finite(const P& params) {
  bool ok = true;
  params.visit([&](const std::string&, const auto& t) {
    for (auto v : t.values()) ok = ok && std::isfinite(static_cast<double>(v));
  });
  return ok;
}

}  // namespace l2t
