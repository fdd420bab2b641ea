#include "caer/model/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <fmt/format.h>

#include "caer/error.hpp"

namespace caer::model {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'E', 'R', 'A', 'R', 'C', 'H'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

const Mat& Archive::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(ErrorCode::not_found, fmt::format("archive has no tensor '{}'", name));
  return it->second;
}

void save_archive(const std::filesystem::path& path, const Archive& archive, StorageType dtype) {
  const std::size_t elem = dtype == StorageType::f32 ? 4 : 8;
  nlohmann::json header;
  header["meta"] = archive.meta;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : archive.tensors) {
    header["tensors"].push_back({{"name", name},
                                 {"shape", {m.rows(), m.cols()}},
                                 {"dtype", dtype == StorageType::f32 ? "f32" : "f64"},
                                 {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * elem;
  }
  const std::string text = header.dump();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", tmp.string()));
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, m] : archive.tensors) {
      if (dtype == StorageType::f64) {
        out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * 8));
      } else {
        std::vector<float> buf(m.data(), m.data() + m.size());
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
      }
    }
    if (!out) throw Error(ErrorCode::io, fmt::format("short write to {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot open archive {}", path.string()));
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::io, fmt::format("{} is not a tensor archive", path.string()));
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) throw Error(ErrorCode::io, fmt::format("{}: unsupported archive version {}", path.string(), version));
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw Error(ErrorCode::io, fmt::format("{}: truncated header", path.string()));
  const std::streamoff data_start = in.tellg();

  Archive a;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    a.meta = header.value("meta", nlohmann::json::object());
    for (const auto& t : header.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const long rows = t.at("shape").at(0).get<long>();
      const long cols = t.at("shape").at(1).get<long>();
      const bool f32 = t.value("dtype", "f64") == "f32";
      Mat m(rows, cols);
      in.seekg(data_start + static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
      if (f32) {
        std::vector<float> buf(static_cast<std::size_t>(m.size()));
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
        for (long i = 0; i < m.size(); ++i) m.data()[i] = buf[static_cast<std::size_t>(i)];
      } else {
        in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * 8));
      }
      if (!in) throw Error(ErrorCode::io, fmt::format("{}: truncated tensor '{}'", path.string(), name));
      a.tensors.emplace(name, std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::io, fmt::format("{}: bad archive header: {}", path.string(), e.what()));
  }
  return a;
}

}  // namespace caer::model
