#include "adjseg/io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "adjseg/errors.hpp"

namespace adjseg {

static_assert(std::endian::native == std::endian::little, "FTF1 I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic = {'F', 'T', 'F', '1'};

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  return in;
}

std::pair<std::size_t, std::size_t> read_lbl_header(std::istream& in, const std::filesystem::path& path) {
  std::string magic;
  long long h = -1, w = -1;
  if (!(in >> magic >> h >> w) || magic != "LBL1" || h < 0 || w < 0) {
    throw ConfigError("'" + path.string() + "' is not an LBL1 file");
  }
  return {static_cast<std::size_t>(h), static_cast<std::size_t>(w)};
}

}  // namespace

void write_ftf(const std::filesystem::path& path, const FeatureField& field) {
  auto out = open_out(path, std::ios::binary);
  out.write(kMagic.data(), kMagic.size());
  for (std::uint64_t d : {std::uint64_t{field.channels()}, std::uint64_t{field.height()}, std::uint64_t{field.width()}}) {
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
  }
  out.write(reinterpret_cast<const char*>(field.values().data()),
            static_cast<std::streamsize>(field.size() * sizeof(double)));
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

FeatureField read_ftf(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ConfigError("'" + path.string() + "' is not an FTF1 file");
  std::array<std::uint64_t, 3> dims{};
  in.read(reinterpret_cast<char*>(dims.data()), sizeof dims);
  if (!in) throw ConfigError("'" + path.string() + "': truncated header");
  std::vector<double> values(dims[0] * dims[1] * dims[2]);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw ConfigError("'" + path.string() + "': truncated payload");
  return FeatureField(dims[0], dims[1], dims[2], std::move(values));
}

void write_kernel(const std::filesystem::path& path, const ConvKernelStack& k) {
  std::vector<double> w(k.weights().begin(), k.weights().end());
  write_ftf(path, FeatureField(k.out_channels() * k.in_channels(), k.kernel_height(), k.kernel_width(), std::move(w)));
}

ConvKernelStack read_kernel(const std::filesystem::path& path, std::size_t out_channels) {
  FeatureField f = read_ftf(path);
  if (out_channels == 0 || f.channels() % out_channels != 0) {
    throw ConfigError("'" + path.string() + "': kernel leading dimension not divisible by out_channels");
  }
  std::vector<double> w(f.values().begin(), f.values().end());
  return ConvKernelStack(out_channels, f.channels() / out_channels, f.height(), f.width(), std::move(w));
}

void write_selection(const std::filesystem::path& path, const SelectionSet& q, std::size_t height,
                     std::size_t width) {
  auto out = open_out(path);
  out << "LBL1 " << height << ' ' << width << '\n';
  for (const auto& e : q.entries()) out << e.row << ' ' << e.col << ' ' << e.class_id << '\n';
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

SelectionSet read_selection(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto [h, w] = read_lbl_header(in, path);
  std::vector<LabeledPixel> entries;
  long long r, c;
  int k;
  while (in >> r >> c >> k) {
    if (r < 0 || c < 0) throw ConfigError("'" + path.string() + "': negative coordinate");
    entries.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), k});
  }
  if (!in.eof()) throw ConfigError("'" + path.string() + "': malformed entry");
  SelectionSet q(std::move(entries));
  for (const auto& e : q.entries()) {
    if (e.row >= h || e.col >= w) throw IndexError("'" + path.string() + "': entry outside declared size");
  }
  return q;
}

void write_class_map(const std::filesystem::path& path, const ClassMap& map) {
  auto out = open_out(path);
  out << "LBL1 " << map.height() << ' ' << map.width() << '\n';
  for (std::size_t i = 0; i < map.height(); ++i) {
    for (std::size_t j = 0; j < map.width(); ++j) out << (j ? " " : "") << map.at(i, j);
    out << '\n';
  }
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

ClassMap read_class_map(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto [h, w] = read_lbl_header(in, path);
  std::vector<int> ids(h * w);
  for (int& v : ids) {
    if (!(in >> v)) throw ConfigError("'" + path.string() + "': expected " + std::to_string(h * w) + " ids");
  }
  return ClassMap(h, w, std::move(ids));
}

}  // namespace adjseg
