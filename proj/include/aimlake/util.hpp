#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace aimlake {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

/// Appends the raw bytes of a trivially copyable value (used to build hash inputs).
template <typename T>
void append_bytes(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}
void append_doubles(std::string& out, const double* data, std::size_t count);

/// Worker count used by parallel_for; 0 means "hardware concurrency".
void set_worker_count(int workers);
int worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads.
/// Each index is processed exactly once; results must go to per-index slots.
/// The first exception thrown is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace aimlake
