#include "resmatch/featio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace resmatch {

void SynthConfig::validate() const {
  if (n_points < 1) throw ConfigError("synth: n_points must be >= 1");
  if (channels < 4) throw ConfigError("synth: channels must be >= 4");
  if (width < 2 || height < 2) throw ConfigError("synth: image must be at least 2x2");
  if (descriptor_noise_sigma < 0) throw ConfigError("synth: descriptor_noise_sigma must be >= 0");
  if (outlier_fraction < 0 || outlier_fraction > 1) throw ConfigError("synth: outlier_fraction must lie in [0, 1]");
  if (max_rotation < 0 || max_scale < 0 || max_translation < 0 || max_perspective < 0 || position_jitter < 0)
    throw ConfigError("synth: ranges must be >= 0");
}

void validate(const FeatureSet& fs) {
  if (fs.count < 1) throw ConfigError("feature set: must hold at least one point");
  if (fs.channels < 1) throw ConfigError("feature set: descriptor channels must be >= 1");
  if (fs.width < 1 || fs.height < 1) throw ConfigError("feature set: empty image size");
  if (fs.positions.size() != fs.count * 2 || fs.descriptors.size() != fs.count * fs.channels)
    throw ConfigError("feature set: buffer sizes do not match header");
  for (std::size_t i = 0; i < fs.count; ++i) {
    const float x = fs.positions[2 * i], y = fs.positions[2 * i + 1];
    if (!(x >= 0.0f && x < static_cast<float>(fs.width) && y >= 0.0f && y < static_cast<float>(fs.height)))
      throw ConfigError("feature set: position " + std::to_string(i) + " outside the image");
    double norm2 = 0.0;
    for (std::size_t ch = 0; ch < fs.channels; ++ch) {
      const double d = fs.descriptors[i * fs.channels + ch];
      norm2 += d * d;
    }
    if (std::fabs(std::sqrt(norm2) - 1.0) > 1e-6)
      throw ConfigError("feature set: descriptor " + std::to_string(i) + " is not unit-norm");
  }
}

Tensor2 normalize_positions(const FeatureSet& fs) {
  validate(fs);
  const double cx = fs.width / 2.0, cy = fs.height / 2.0;
  const double half = std::max(fs.width, fs.height) / 2.0;
  Tensor2 out(fs.count, 2);
  for (std::size_t i = 0; i < fs.count; ++i) {
    out(i, 0) = (fs.positions[2 * i] - cx) / half;
    out(i, 1) = (fs.positions[2 * i + 1] - cy) / half;
  }
  return out;
}

Tensor2 descriptor_matrix(const FeatureSet& fs) {
  Tensor2 out(fs.count, fs.channels);
  for (std::size_t i = 0; i < fs.count * fs.channels; ++i) out.data[i] = fs.descriptors[i];
  return out;
}

std::array<double, 2> apply_homography(const std::array<double, 9>& h, double x, double y) {
  const double w = h[6] * x + h[7] * y + h[8];
  return {(h[0] * x + h[1] * y + h[2]) / w, (h[3] * x + h[4] * y + h[5]) / w};
}

namespace {

std::array<double, 9> compose_about_center(double s, double th, double tx, double ty, double px, double py,
                                           double cx, double cy) {
  // H = T(c) · [sR | t; p 1] · T(-c)
  const std::array<double, 9> m = {s * std::cos(th), -s * std::sin(th), tx,
                                   s * std::sin(th), s * std::cos(th),  ty,
                                   px,               py,                1.0};
  std::array<double, 9> h{};
  // T(c)·M
  std::array<double, 9> tm = m;
  tm[0] += cx * m[6];
  tm[1] += cx * m[7];
  tm[2] += cx * m[8];
  tm[3] += cy * m[6];
  tm[4] += cy * m[7];
  tm[5] += cy * m[8];
  // (T(c)·M)·T(-c)
  h = tm;
  h[2] += -cx * tm[0] - cy * tm[1];
  h[5] += -cx * tm[3] - cy * tm[4];
  h[8] += -cx * tm[6] - cy * tm[7];
  return h;
}

double det3(const std::array<double, 9>& h) {
  return h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
         h[2] * (h[3] * h[7] - h[4] * h[6]);
}

std::vector<double> random_unit_descriptor(Rng& rng, std::size_t c) {
  std::vector<double> d(c);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& v : d) {
      v = rng.gaussian();
      norm2 += v * v;
    }
  } while (norm2 < 1e-12);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& v : d) v *= inv;
  return d;
}

std::vector<double> perturbed_descriptor(Rng& rng, const std::vector<double>& base, double sigma) {
  std::vector<double> d(base.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = base[i] + sigma * rng.gaussian();
    norm2 += d[i] * d[i];
  }
  if (norm2 < 1e-12) return random_unit_descriptor(rng, base.size());
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& v : d) v *= inv;
  return d;
}

void store_descriptor(FeatureSet& fs, std::size_t i, const std::vector<double>& d) {
  for (std::size_t ch = 0; ch < d.size(); ++ch) fs.descriptors[i * fs.channels + ch] = static_cast<float>(d[ch]);
}

}  // namespace

SynthPair generate_pair(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  const std::size_t n = cfg.n_points;
  const std::size_t c = cfg.channels;
  const double w = cfg.width, h = cfg.height;

  std::array<double, 9> hom{};
  do {
    const double th = rng.uniform(-cfg.max_rotation, cfg.max_rotation);
    const double ls = std::log1p(cfg.max_scale);
    const double s = std::exp(rng.uniform(-ls, ls));
    const double tx = rng.uniform(-cfg.max_translation, cfg.max_translation);
    const double ty = rng.uniform(-cfg.max_translation, cfg.max_translation);
    const double px = rng.uniform(-cfg.max_perspective, cfg.max_perspective);
    const double py = rng.uniform(-cfg.max_perspective, cfg.max_perspective);
    hom = compose_about_center(s, th, tx, ty, px, py, w / 2.0, h / 2.0);
  } while (std::fabs(det3(hom)) < 1e-9);

  // base points in A and their shared descriptors
  std::vector<std::array<double, 2>> pos_a(n);
  std::vector<std::vector<double>> base_desc(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos_a[i] = {rng.uniform(0.0, w), rng.uniform(0.0, h)};
    base_desc[i] = random_unit_descriptor(rng, c);
  }

  // warp into B, keep the in-bounds subset
  std::vector<std::size_t> in_bounds;
  std::vector<std::array<double, 2>> warped(n);
  for (std::size_t i = 0; i < n; ++i) {
    warped[i] = apply_homography(hom, pos_a[i][0], pos_a[i][1]);
    if (warped[i][0] >= 0 && warped[i][0] < w && warped[i][1] >= 0 && warped[i][1] < h) in_bounds.push_back(i);
  }

  const std::size_t n_out = static_cast<std::size_t>(std::lround(cfg.outlier_fraction * static_cast<double>(n)));

  // independent outlier picks per image
  auto pick = [&rng](std::vector<std::size_t> pool, std::size_t want) {
    std::vector<std::size_t> chosen;
    for (std::size_t t = 0; t < want && !pool.empty(); ++t) {
      const std::size_t at = static_cast<std::size_t>(rng.below(pool.size()));
      chosen.push_back(pool[at]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
    }
    return chosen;
  };
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const std::vector<std::size_t> out_a_list = pick(all, n_out);
  const std::vector<std::size_t> out_b_list = pick(in_bounds, std::min(n_out, in_bounds.size()));
  std::vector<bool> out_a(n, false), out_b(n, false);
  for (std::size_t i : out_a_list) out_a[i] = true;
  for (std::size_t i : out_b_list) out_b[i] = true;

  SynthPair pair;
  pair.a.width = pair.b.width = cfg.width;
  pair.a.height = pair.b.height = cfg.height;
  pair.a.channels = pair.b.channels = c;
  pair.gt.homography = hom;

  // image A keeps all n points
  pair.a.count = n;
  pair.a.positions.resize(n * 2);
  pair.a.descriptors.resize(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 2> p = pos_a[i];
    std::vector<double> d;
    if (out_a[i]) {
      p = {rng.uniform(0.0, w), rng.uniform(0.0, h)};
      d = random_unit_descriptor(rng, c);
    } else {
      d = perturbed_descriptor(rng, base_desc[i], cfg.descriptor_noise_sigma);
    }
    pair.a.positions[2 * i] = static_cast<float>(p[0]);
    pair.a.positions[2 * i + 1] = static_cast<float>(p[1]);
    store_descriptor(pair.a, i, d);
  }

  // image B holds the in-bounds warps in shuffled order; guard the degenerate
  // case of everything warping out of frame
  std::vector<std::size_t> order = in_bounds;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);
  bool b_is_synthetic = false;
  if (order.empty()) {
    order.push_back(n);  // sentinel: a single fresh point
    b_is_synthetic = true;
  }
  const std::size_t nb = order.size();
  pair.b.count = nb;
  pair.b.positions.resize(nb * 2);
  pair.b.descriptors.resize(nb * c);
  std::vector<std::uint32_t> b_index_of(n, 0xffffffffu);
  for (std::size_t j = 0; j < nb; ++j) {
    std::array<double, 2> p;
    std::vector<double> d;
    bool is_outlier;
    if (b_is_synthetic) {
      is_outlier = true;
    } else {
      const std::size_t src = order[j];
      b_index_of[src] = static_cast<std::uint32_t>(j);
      is_outlier = out_b[src];
      if (!is_outlier) {
        p = warped[src];
        if (cfg.position_jitter > 0) {
          p[0] += cfg.position_jitter * rng.gaussian();
          p[1] += cfg.position_jitter * rng.gaussian();
          p[0] = std::clamp(p[0], 0.0, w - 1e-3);
          p[1] = std::clamp(p[1], 0.0, h - 1e-3);
        }
        d = perturbed_descriptor(rng, base_desc[src], cfg.descriptor_noise_sigma);
      }
    }
    if (is_outlier) {
      p = {rng.uniform(0.0, w), rng.uniform(0.0, h)};
      d = random_unit_descriptor(rng, c);
    }
    pair.b.positions[2 * j] = static_cast<float>(p[0]);
    pair.b.positions[2 * j + 1] = static_cast<float>(p[1]);
    store_descriptor(pair.b, j, d);
  }

  // ground-truth partition; jittered points that drifted past the labeling
  // threshold are demoted to unmatched
  std::vector<bool> matched_a(n, false), matched_b(nb, false);
  if (!b_is_synthetic) {
    for (std::size_t src : in_bounds) {
      if (out_a[src] || out_b[src]) continue;
      const std::uint32_t j = b_index_of[src];
      const auto proj = apply_homography(hom, pair.a.positions[2 * src], pair.a.positions[2 * src + 1]);
      const double dx = proj[0] - pair.b.positions[2 * j];
      const double dy = proj[1] - pair.b.positions[2 * j + 1];
      if (std::sqrt(dx * dx + dy * dy) >= kGtLabelEps && cfg.position_jitter > 0) continue;
      pair.gt.inlier_pairs.emplace_back(static_cast<std::uint32_t>(src), j);
      matched_a[src] = true;
      matched_b[j] = true;
    }
  }
  std::sort(pair.gt.inlier_pairs.begin(), pair.gt.inlier_pairs.end());
  for (std::size_t i = 0; i < n; ++i)
    if (!matched_a[i]) pair.gt.unmatched_a.push_back(static_cast<std::uint32_t>(i));
  for (std::size_t j = 0; j < nb; ++j)
    if (!matched_b[j]) pair.gt.unmatched_b.push_back(static_cast<std::uint32_t>(j));

  validate(pair.a);
  validate(pair.b);
  return pair;
}

// ---------------------------------------------------------------------------
// binary io

namespace {

constexpr char kFeatureMagic[4] = {'R', 'M', 'F', '1'};
constexpr char kGtMagic[4] = {'R', 'M', 'G', '1'};

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  void expect_magic(const char (&magic)[4]) {
    if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0)
      throw IoError(path_ + ": bad magic", 0);
    off_ = 4;
  }
  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + off_, 4);
    off_ += 4;
    return v;
  }
  float f32() {
    need(4, "f32");
    float v;
    std::memcpy(&v, bytes_.data() + off_, 4);
    off_ += 4;
    return v;
  }
  double f64() {
    need(8, "f64");
    double v;
    std::memcpy(&v, bytes_.data() + off_, 8);
    off_ += 8;
    return v;
  }
  void done() {
    if (off_ != bytes_.size()) throw IoError(path_ + ": trailing bytes after payload", static_cast<long long>(off_));
  }
  long long offset() const { return static_cast<long long>(off_); }

 private:
  void need(std::size_t n, const char* what) {
    if (off_ + n > bytes_.size())
      throw IoError(path_ + ": truncated while reading " + what, static_cast<long long>(off_));
  }
  std::string bytes_;
  std::string path_;
  std::size_t off_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(path + ": cannot open for reading");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return bytes;
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path + ": cannot open for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(path + ": short write");
}

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }
void put_f32(std::string& out, float v) { out.append(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::string& out, double v) { out.append(reinterpret_cast<const char*>(&v), 8); }

}  // namespace

void write_features(const FeatureSet& fs, const std::string& path) {
  validate(fs);
  std::string out;
  out.reserve(16 + fs.positions.size() * 4 + fs.descriptors.size() * 4);
  out.append(kFeatureMagic, 4);
  put_u32(out, fs.width);
  put_u32(out, fs.height);
  put_u32(out, static_cast<std::uint32_t>(fs.count));
  put_u32(out, static_cast<std::uint32_t>(fs.channels));
  for (float v : fs.positions) put_f32(out, v);
  for (float v : fs.descriptors) put_f32(out, v);
  spit(path, out);
}

FeatureSet read_features(const std::string& path) {
  Reader r(slurp(path), path);
  r.expect_magic(kFeatureMagic);
  FeatureSet fs;
  fs.width = r.u32();
  fs.height = r.u32();
  fs.count = r.u32();
  fs.channels = r.u32();
  if (fs.count < 1) throw IoError(path + ": feature count must be >= 1", 8);
  if (fs.channels < 1) throw IoError(path + ": channel count must be >= 1", 12);
  fs.positions.resize(fs.count * 2);
  for (float& v : fs.positions) v = r.f32();
  fs.descriptors.resize(fs.count * fs.channels);
  for (float& v : fs.descriptors) v = r.f32();
  r.done();
  try {
    validate(fs);
  } catch (const ConfigError& e) {
    throw IoError(path + ": " + e.what(), r.offset());
  }
  return fs;
}

void write_ground_truth(const GroundTruth& gt, const std::string& path) {
  std::string out;
  out.append(kGtMagic, 4);
  for (double v : gt.homography) put_f64(out, v);
  put_u32(out, static_cast<std::uint32_t>(gt.inlier_pairs.size()));
  for (auto [i, j] : gt.inlier_pairs) {
    put_u32(out, i);
    put_u32(out, j);
  }
  spit(path, out);
}

GroundTruth read_ground_truth(const std::string& path, std::size_t n_a, std::size_t n_b) {
  Reader r(slurp(path), path);
  r.expect_magic(kGtMagic);
  GroundTruth gt;
  for (double& v : gt.homography) v = r.f64();
  const std::uint32_t n = r.u32();
  gt.inlier_pairs.reserve(n);
  std::vector<bool> matched_a(n_a, false), matched_b(n_b, false);
  for (std::uint32_t t = 0; t < n; ++t) {
    const std::uint32_t i = r.u32();
    const std::uint32_t j = r.u32();
    if (i >= n_a || j >= n_b)
      throw IoError(path + ": inlier pair index out of range", r.offset() - 8);
    gt.inlier_pairs.emplace_back(i, j);
    matched_a[i] = true;
    matched_b[j] = true;
  }
  r.done();
  for (std::size_t i = 0; i < n_a; ++i)
    if (!matched_a[i]) gt.unmatched_a.push_back(static_cast<std::uint32_t>(i));
  for (std::size_t j = 0; j < n_b; ++j)
    if (!matched_b[j]) gt.unmatched_b.push_back(static_cast<std::uint32_t>(j));
  return gt;
}

}  // namespace resmatch
