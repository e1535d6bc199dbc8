#ifndef ZIVOS_TESTS_SUPPORT_HPP
#define ZIVOS_TESTS_SUPPORT_HPP

// Random input generators and brute-force oracles shared by the unit tests
// and the acceptance binary. The oracles restate each definition in the
// most literal form available and share no code with the library.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "zivos/zivos.hpp"

namespace zivos::testing {

namespace fs = std::filesystem;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }

  BinaryMask mask(int h, int w, double density) {
    BinaryMask m(h, w);
    for (auto& v : m.values()) v = coin(density) ? 1 : 0;
    return m;
  }

  /// A few filled rectangles, so components and interiors exist.
  BinaryMask blobs(int h, int w, int n) {
    BinaryMask m(h, w);
    for (int k = 0; k < n; ++k) {
      const int r0 = integer(0, h - 1);
      const int c0 = integer(0, w - 1);
      const int r1 = std::min(h - 1, r0 + integer(0, h / 2));
      const int c1 = std::min(w - 1, c0 + integer(0, w / 2));
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) m(r, c) = 1;
      }
    }
    return m;
  }

  /// Random point on the probability simplex, stored as floats that still
  /// sum to 1 within the library tolerance.
  std::vector<float> simplex(int classes) {
    std::vector<double> raw(static_cast<std::size_t>(classes));
    double sum = 0.0;
    for (auto& v : raw) {
      v = -std::log(real(1e-12, 1.0));
      if (coin(0.1)) v = 0.0;
      sum += v;
    }
    if (sum == 0.0) {
      raw[0] = 1.0;
      sum = 1.0;
    }
    std::vector<float> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<float>(raw[i] / sum);
    return out;
  }

  ProbabilityMap probability(int h, int w, int classes) {
    std::vector<float> v;
    v.reserve(static_cast<std::size_t>(h * w * classes));
    for (int i = 0; i < h * w; ++i) {
      const auto p = simplex(classes);
      v.insert(v.end(), p.begin(), p.end());
    }
    return ProbabilityMap(h, w, classes, std::move(v));
  }

  EntropyMap entropy(int h, int w) {
    EntropyMap e(h, w);
    for (auto& v : e.values()) v = real(0.0, 1.0);
    return e;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// --- oracles ---------------------------------------------------------------

inline double oracle_entropy(const std::vector<double>& p) {
  if (p.size() <= 1) return 0.0;
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h += v * std::log(v);
  }
  return -h / std::log(static_cast<double>(p.size()));
}

inline bool oracle_is_boundary(const BinaryMask& m, int r, int c) {
  if (!m(r, c)) return false;
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const int rr = r + dr[k];
    const int cc = c + dc[k];
    if (rr < 0 || cc < 0 || rr >= m.height() || cc >= m.width() || !m(rr, cc)) return true;
  }
  return false;
}

/// O(N * |boundary|) distance to the nearest boundary pixel.
inline std::vector<double> oracle_distance_field(const BinaryMask& m) {
  std::vector<std::pair<int, int>> omega;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (oracle_is_boundary(m, r, c)) omega.emplace_back(r, c);
    }
  }
  std::vector<double> out;
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [br, bc] : omega) {
        best = std::min(best, std::sqrt(static_cast<double>((r - br) * (r - br) + (c - bc) * (c - bc))));
      }
      out.push_back(best);
    }
  }
  return out;
}

/// Stamps the disk {i^2 + j^2 <= radius^2} at every mask pixel.
inline BinaryMask oracle_dilate(const BinaryMask& m, int radius) {
  BinaryMask out(m.height(), m.width());
  for (int r = 0; r < m.height(); ++r) {
    for (int c = 0; c < m.width(); ++c) {
      if (!m(r, c)) continue;
      for (int i = -radius; i <= radius; ++i) {
        for (int j = -radius; j <= radius; ++j) {
          if (i * i + j * j > radius * radius) continue;
          if (out.contains(r + i, c + j)) out(r + i, c + j) = 1;
        }
      }
    }
  }
  return out;
}

inline double oracle_region_entropy(const EntropyMap& e, const BinaryMask& region) {
  double sum = 0.0;
  int n = 0;
  for (int r = 0; r < e.height(); ++r) {
    for (int c = 0; c < e.width(); ++c) {
      if (region(r, c)) {
        sum += e(r, c);
        ++n;
      }
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

/// Literal double sum: (1/F) sum_{i=1..F} sum_{j=1..i} n_j.
inline double oracle_aci(std::vector<long long> prompts, long long F) {
  std::sort(prompts.begin(), prompts.end());
  prompts.erase(std::unique(prompts.begin(), prompts.end()), prompts.end());
  std::vector<long long> n(static_cast<std::size_t>(F + 1), 0);
  for (std::size_t p = 1; p < prompts.size(); ++p) {
    const long long g = prompts[p] - prompts[p - 1];
    if (g >= 1 && g <= F) ++n[static_cast<std::size_t>(g)];
  }
  double total = 0.0;
  for (long long i = 1; i <= F; ++i) {
    for (long long j = 1; j <= i; ++j) total += static_cast<double>(n[static_cast<std::size_t>(j)]);
  }
  return total / static_cast<double>(F);
}

/// Average rank by counting: #smaller + (#equal + 1) / 2.
inline std::vector<double> oracle_ranks(const std::vector<double>& xs) {
  std::vector<double> out;
  for (double x : xs) {
    double less = 0.0;
    double equal = 0.0;
    for (double y : xs) {
      if (y < x) less += 1.0;
      if (y == x) equal += 1.0;
    }
    out.push_back(less + (equal + 1.0) / 2.0);
  }
  return out;
}

inline double oracle_spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto rx = oracle_ranks(xs);
  const auto ry = oracle_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double num = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    num += (rx[i] - mx) * (ry[i] - my);
    dx += (rx[i] - mx) * (rx[i] - mx);
    dy += (ry[i] - my) * (ry[i] - my);
  }
  return num / std::sqrt(dx * dy);
}

// --- fixtures --------------------------------------------------------------

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = fs::temp_directory_path() /
            ("zivos_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

/// Two-class map whose object probability is `inside` on the mask and
/// `outside` elsewhere.
inline ProbabilityMap two_class_map(const BinaryMask& mask, float inside, float outside) {
  std::vector<float> v;
  for (const auto m : mask.values()) {
    const float p = m ? inside : outside;
    v.push_back(1.0f - p);
    v.push_back(p);
  }
  return ProbabilityMap(mask.height(), mask.width(), 2, std::move(v));
}

inline BinaryMask block(int h, int w, int r0, int c0, int r1, int c1) {
  BinaryMask m(h, w);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) m(r, c) = 1;
  }
  return m;
}

/// Writes a replay sequence (object id 1) and returns its manifest path.
inline fs::path write_replay(const fs::path& dir, const std::string& name,
                             const std::vector<ProbabilityMap>& maps, const std::vector<BinaryMask>& gts,
                             std::optional<double> fps = 10.0) {
  fs::create_directories(dir);
  SequenceManifest m;
  m.name = name;
  m.fps = fps;
  m.objects = {1};
  m.base_dir = dir;
  for (std::size_t f = 0; f < maps.size(); ++f) {
    const fs::path prob = "prob_" + std::to_string(f) + ".zivp";
    const fs::path gt = "gt_" + std::to_string(f) + ".pgm";
    save_probability_map(maps[f], dir / prob);
    save_mask_pgm(to_label_mask(gts[f], 1), dir / gt);
    m.frames.push_back({prob, gt, std::nullopt});
  }
  const fs::path path = dir / "manifest.json";
  save_manifest(m, path);
  return path;
}

}  // namespace zivos::testing

#endif  // ZIVOS_TESTS_SUPPORT_HPP
