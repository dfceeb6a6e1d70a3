// Copyright 2026 The sweetfloq Authors
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

#pragma once

// Bounded worker pool over independent indices. Results are stored by
// index, so the output never depends on the number of threads or on
// completion order.

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sweetfloq/common.hpp"

namespace sweetfloq {

// Calls body(i) for i in [0, n) on up to `threads` workers.
template <typename Body>
void parallel_for(size_t n, int threads, Body&& body) {
  const size_t workers = std::min<size_t>(std::max(threads, 1), std::max<size_t>(n, 1));
  std::atomic<size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto run = [&]() {
    for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  // Rethrow the failure with the lowest index.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <typename T, typename Fn>
std::vector<T> parallel_map(size_t n, int threads, Fn&& fn) {
  std::vector<std::optional<T>> tmp(n);
  parallel_for(n, threads, [&](size_t i) { tmp[i].emplace(fn(i)); });
  std::vector<T> out;
  out.reserve(n);
  for (auto& v : tmp) out.push_back(std::move(*v));
  return out;
}

enum class ErrorKind { none, validity, numerical, other };

template <typename T>
struct PointOutcome {
  std::optional<T> value;
  ErrorKind kind = ErrorKind::none;
  std::string error;

  bool ok() const { return value.has_value(); }
};

// Like parallel_map, but a failing point is recorded instead of aborting
// the sweep.
template <typename T, typename Fn>
std::vector<PointOutcome<T>> sweep_execute(size_t n, int threads, Fn&& fn) {
  std::vector<PointOutcome<T>> out(n);
  parallel_for(n, threads, [&](size_t i) {
    try {
      out[i].value.emplace(fn(i));
    } catch (const ValidityError& e) {
      out[i].kind = ErrorKind::validity;
      out[i].error = e.what();
    } catch (const NumericalError& e) {
      out[i].kind = ErrorKind::numerical;
      out[i].error = e.what();
    } catch (const std::exception& e) {
      out[i].kind = ErrorKind::other;
      out[i].error = e.what();
    }
  });
  return out;
}

}  // namespace sweetfloq
