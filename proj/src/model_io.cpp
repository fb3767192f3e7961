#include "themedet/model_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace themedet {

using nlohmann::json;

int ClusterModel::noise_count() const {
  int n = 0;
  for (int a : assignments)
    if (a < 0) ++n;
  return n;
}

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_string(std::ostream& out, const std::string& s) {
  write_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const auto len = read_le<std::uint16_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  return s;
}

}  // namespace

void save_cluster_model(const ClusterModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open model file for writing: " + path);
  out.write("TDM1", 4);
  write_string(out, model.algorithm);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.centroids.size()));
  const std::uint32_t dim =
      model.centroids.empty() ? 0 : static_cast<std::uint32_t>(model.centroids.front().size());
  write_le<std::uint32_t>(out, dim);
  write_le<std::uint64_t>(out, model.seed);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.iterations));
  std::uint64_t dist_bits;
  std::memcpy(&dist_bits, &model.distortion, 8);
  write_le<std::uint64_t>(out, dist_bits);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.min_cluster_size));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.min_samples));

  for (const auto& c : model.centroids)
    for (double v : c) {
      const float f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      write_le<std::uint32_t>(out, bits);
    }

  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.ids.size()));
  for (std::size_t i = 0; i < model.ids.size(); ++i) {
    write_string(out, model.ids[i]);
    write_le<std::int32_t>(out, model.assignments[i]);
  }
  if (!out) throw DataError("write failed: " + path);
}

ClusterModel load_cluster_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TDM1", 4) != 0)
    throw DataError("unknown magic bytes in model file: " + path);

  ClusterModel model;
  model.algorithm = read_string(in);
  const auto k = read_le<std::uint32_t>(in);
  const auto dim = read_le<std::uint32_t>(in);
  model.seed = read_le<std::uint64_t>(in);
  model.iterations = static_cast<int>(read_le<std::uint32_t>(in));
  const auto dist_bits = read_le<std::uint64_t>(in);
  std::memcpy(&model.distortion, &dist_bits, 8);
  model.min_cluster_size = static_cast<int>(read_le<std::uint32_t>(in));
  model.min_samples = static_cast<int>(read_le<std::uint32_t>(in));

  model.centroids.assign(k, std::vector<double>(dim, 0.0));
  for (auto& c : model.centroids)
    for (auto& v : c) {
      const auto bits = read_le<std::uint32_t>(in);
      float f;
      std::memcpy(&f, &bits, 4);
      v = static_cast<double>(f);
    }

  const auto n = read_le<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    model.ids.push_back(read_string(in));
    model.assignments.push_back(static_cast<int>(read_le<std::int32_t>(in)));
  }
  if (!in) throw DataError("truncated model file: " + path);
  return model;
}

std::string cluster_model_summary_json(const ClusterModel& model) {
  json j;
  j["algorithm"] = model.algorithm;
  j["clusters"] = model.centroids.size();
  j["dim"] = model.centroids.empty() ? 0 : model.centroids.front().size();
  j["seed"] = model.seed;
  j["iterations"] = model.iterations;
  j["distortion"] = model.distortion;
  j["noise_count"] = model.noise_count();
  if (model.algorithm == "hdbscan") {
    j["min_cluster_size"] = model.min_cluster_size;
    j["min_samples"] = model.min_samples;
  }
  return j.dump(2);
}

}  // namespace themedet
