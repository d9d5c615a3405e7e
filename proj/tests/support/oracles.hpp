#pragma once

// Reference computations used only by tests. Written independently of the
// library so a shared bug cannot hide.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace oracles {

// Exact central interval [lo, hi] (as counts) of Binomial(n, p): lo is the
// smallest k with P(X <= k) > alpha/2, hi the smallest k with P(X <= k) >= 1 - alpha/2.
inline std::pair<long, long> binomial_interval(long n, double p, double confidence = 0.99) {
  const double tail = (1.0 - confidence) / 2.0;
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    pmf[static_cast<std::size_t>(k)] = std::exp(log_choose + k * std::log(p) + (n - k) * std::log1p(-p));
  }
  long lo = -1;
  long hi = n;
  double cdf = 0.0;
  for (long k = 0; k <= n; ++k) {
    cdf += pmf[static_cast<std::size_t>(k)];
    if (lo < 0 && cdf > tail) lo = k;
    if (cdf >= 1.0 - tail) {
      hi = k;
      break;
    }
  }
  return {lo, hi};
}

// Accuracy of classifying each test row by its nearest training class mean.
inline double nearest_centroid_accuracy(const Eigen::MatrixXd& Xtr, const std::vector<std::uint32_t>& ytr,
                                        const Eigen::MatrixXd& Xte, const std::vector<std::uint32_t>& yte,
                                        std::size_t classes) {
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(classes), Xtr.cols());
  std::vector<double> counts(classes, 0.0);
  for (Eigen::Index i = 0; i < Xtr.rows(); ++i) {
    centroids.row(ytr[static_cast<std::size_t>(i)]) += Xtr.row(i);
    counts[ytr[static_cast<std::size_t>(i)]] += 1.0;
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] > 0) centroids.row(static_cast<Eigen::Index>(c)) /= counts[c];
  }
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < Xte.rows(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes; ++c) {
      if (counts[c] == 0) continue;
      const double d = (Xte.row(i) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == yte[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(Xte.rows());
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    for (;;) {
      path_ = base / ("probelens-test-" + std::to_string(rd()) + std::to_string(rd()));
      if (std::filesystem::create_directory(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracles
