// Copyright 2026 The splatprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "splatprune/parallel.hpp"

#include <atomic>

namespace splatprune {

namespace {
std::atomic<unsigned> g_threads{0};
}

void set_thread_count(unsigned count) { g_threads.store(count); }

unsigned thread_count() {
  const unsigned requested = g_threads.load();
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace splatprune
