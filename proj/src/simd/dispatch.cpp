#include "pods/simd/kernels.hpp"

#include <array>
#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace pods::simd {
namespace {

bool cpu_supports(Level level) noexcept {
  switch (level) {
    case Level::scalar:
      return true;
    case Level::avx2:
#if defined(PODS_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Level::neon:
#if defined(PODS_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Level> probe_levels() {
  std::vector<Level> levels{Level::scalar};
  for (Level l : {Level::avx2, Level::neon})
    if (cpu_supports(l)) levels.push_back(l);
  return levels;
}

Level level_from_env() noexcept {
  const auto& levels = available_levels();
  Level best = levels.back();
  const char* env = std::getenv("POD_SIMD");
  if (env == nullptr) return best;
  const std::string want(env);
  for (Level l : levels)
    if (to_string(l) == want) return l;
  return best;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels_for(detected_level())};
  return table;
}

std::atomic<Level>& active_level_ref() {
  static std::atomic<Level> level{detected_level()};
  return level;
}

}  // namespace

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::scalar:
      return "scalar";
    case Level::avx2:
      return "avx2";
    case Level::neon:
      return "neon";
  }
  return "unknown";
}

std::span<const Level> available_levels() noexcept {
  static const std::vector<Level> levels = probe_levels();
  return levels;
}

Level detected_level() noexcept {
  static const Level level = level_from_env();
  return level;
}

const KernelTable& kernels_for(Level level) {
  if (!cpu_supports(level))
    throw std::invalid_argument("SIMD level not available: " + std::string(to_string(level)));
  switch (level) {
#if defined(PODS_HAVE_AVX2)
    case Level::avx2:
      return avx2_kernels();
#endif
#if defined(PODS_HAVE_NEON)
    case Level::neon:
      return neon_kernels();
#endif
    default:
      return scalar_kernels();
  }
}

const KernelTable& active() noexcept { return *active_table().load(std::memory_order_acquire); }

Level active_level() noexcept { return active_level_ref().load(std::memory_order_acquire); }

void set_active_level(Level level) {
  const KernelTable& table = kernels_for(level);
  active_table().store(&table, std::memory_order_release);
  active_level_ref().store(level, std::memory_order_release);
}

}  // namespace pods::simd
