#pragma once

#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "gkmnc/dataset.hpp"

namespace test {

inline std::filesystem::path data_dir() { return GKMNC_DATA_DIR; }

inline gkmnc::DataTable german() {
  const auto schema = gkmnc::Schema::load(data_dir() / "german_credit.schema");
  return gkmnc::load_table(data_dir() / "german_credit.csv", schema);
}

inline gkmnc::DataTable from_csv(const std::string& schema_text, const std::string& csv) {
  std::istringstream in(csv);
  return gkmnc::read_table(in, gkmnc::Schema::parse(schema_text));
}

// Two separated Gaussian blobs in 2-D, labelled by blob, with a nominal
// column splitting each blob in half.
inline gkmnc::DataTable blobs(std::size_t per_blob, std::uint64_t seed, double gap = 6.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::ostringstream csv;
  csv << "kind,x,y,label\n";
  for (int b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < per_blob; ++i)
      csv << (i % 2 ? "p" : "q") << ',' << b * gap + noise(rng) << ',' << noise(rng) << ','
          << (b ? "yes" : "no") << '\n';
  return from_csv("kind = nominal\nx = numeric\ny = numeric\nlabel = target\npositive_label = yes\n", csv.str());
}

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("gkmnc-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace test
