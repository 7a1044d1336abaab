#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "liftpose/dataset.hpp"
#include "liftpose/pose.hpp"
#include "liftpose/rng.hpp"
#include "liftpose/schema.hpp"
#include "liftpose/synth.hpp"
#include "liftpose/training.hpp"

namespace liftpose::testing {

inline const Schema& schema16() {
  static const Schema s = Schema::default_schema();
  return s;
}

/// Random 16 x cols pose in [-500, 500].
inline Matrix random_raw_pose(Rng& rng, int cols = 2) {
  Matrix m(kNumJoints, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-500.0, 500.0);
  return m;
}

inline std::vector<PoseRecord> synthetic_records(std::size_t count, std::uint64_t seed) {
  SynthConfig c = SynthConfig::defaults();
  c.count = count;
  c.seed = seed;
  return synthesize(c, schema16());
}

inline PoseSet synthetic_set(std::size_t count, std::uint64_t seed) {
  return prepare(synthetic_records(count, seed), schema16());
}

/// Fresh, empty scratch directory for one test.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const char* root = std::getenv("LIFTPOSE_TEST_TMP");
  const std::filesystem::path base =
      root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "liftpose_tests";
  const auto dir = base / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline ArchitectureConfig small_arch() {
  ArchitectureConfig a;
  a.base_width = 24;
  a.full_blocks = 2;
  a.local_blocks = 1;
  a.combiner_blocks = 1;
  a.feature_width = 8;
  a.disc_width = 16;
  a.disc_blocks = 1;
  return a;
}

/// A config small enough to train for a few epochs inside a unit test.
inline TrainConfig small_config(Representation rep = Representation::Full, std::uint64_t seed = 0) {
  TrainConfig c = TrainConfig::desk();
  c.architecture = small_arch();
  c.batch_size = 16;
  c.epochs = 2;
  c.representation = rep;
  c.seed = seed;
  return c;
}

}  // namespace liftpose::testing
