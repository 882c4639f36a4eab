#include "rigidlab/field_io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>

namespace rigidlab {

namespace {

using nlohmann::json;

std::vector<std::uint64_t> mask_rle(const std::vector<std::uint8_t>& mask) {
  std::vector<std::uint64_t> runs;
  std::uint8_t cur = 0;  // runs start with the outside state
  std::uint64_t len = 0;
  for (auto m : mask) {
    std::uint8_t b = m ? 1 : 0;
    if (b == cur) {
      ++len;
    } else {
      runs.push_back(len);
      cur = b;
      len = 1;
    }
  }
  runs.push_back(len);
  return runs;
}

std::vector<std::uint8_t> mask_from_rle(const std::vector<std::uint64_t>& runs, std::size_t n) {
  std::vector<std::uint8_t> mask;
  mask.reserve(n);
  std::uint8_t cur = 0;
  for (auto r : runs) {
    mask.insert(mask.end(), r, cur);
    cur = 1 - cur;
  }
  if (mask.size() != n) fail_input("gfld: mask run lengths do not match shape");
  return mask;
}

void write_le(std::ofstream& out, const double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &data[i], 8);
      char b[8];
      for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
      out.write(b, 8);
    }
  }
}

void read_le(std::ifstream& in, double* data, std::size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 8));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      char b[8];
      in.read(b, 8);
      std::uint64_t bits = 0;
      for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[k])) << (8 * k);
      std::memcpy(&data[i], &bits, 8);
    }
  }
  if (!in) fail_input("gfld: truncated payload");
}

void write_impl(const std::string& path, const GridDomain& dom, int rank,
                const std::vector<double>& values, int comps) {
  json header;
  header["version"] = 1;
  header["dim"] = dom.dim;
  header["shape"] = std::vector<int>(dom.shape.begin(), dom.shape.begin() + dom.dim);
  header["spacing"] = dom.spacing;
  header["origin"] = std::vector<double>(dom.origin.begin(), dom.origin.begin() + dom.dim);
  header["rank"] = rank;
  header["mask_rle"] = mask_rle(dom.mask);

  std::ofstream out(path, std::ios::binary);
  if (!out) fail_input("gfld: cannot open '" + path + "' for writing");
  out << header.dump() << '\n';
  std::vector<double> buf;
  buf.reserve(dom.inside_count() * comps);
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    const double* p = values.data() + static_cast<std::size_t>(c) * comps;
    buf.insert(buf.end(), p, p + comps);
  }
  write_le(out, buf.data(), buf.size());
  if (!out) fail_input("gfld: write failed for '" + path + "'");
}

}  // namespace

void write_gfld(const std::string& path, const ScalarField& f) {
  write_impl(path, f.domain(), 0, f.raw(), 1);
}
void write_gfld(const std::string& path, const VectorField& f) {
  write_impl(path, f.domain(), 1, f.raw(), f.domain().dim);
}
void write_gfld(const std::string& path, const MatrixField& f) {
  write_impl(path, f.domain(), 2, f.raw(), f.domain().dim * f.domain().dim);
}

AnyField read_gfld(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_input("gfld: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail_input("gfld: missing header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    fail_input(std::string("gfld: bad header: ") + e.what());
  }

  auto dom = std::make_shared<GridDomain>();
  int version = header.at("version").get<int>();
  if (version != 1) fail_input("gfld: unsupported version");
  dom->dim = header.at("dim").get<int>();
  if (dom->dim != 2 && dom->dim != 3) fail_input("gfld: dim must be 2 or 3");
  auto shape = header.at("shape").get<std::vector<int>>();
  if (static_cast<int>(shape.size()) != dom->dim) fail_input("gfld: shape size mismatch");
  dom->shape = {shape[0], shape[1], dom->dim == 3 ? shape[2] : 1};
  dom->spacing = header.at("spacing").get<double>();
  auto origin = header.at("origin").get<std::vector<double>>();
  for (int a = 0; a < dom->dim; ++a) dom->origin[a] = origin.at(a);
  int rank = header.at("rank").get<int>();
  if (rank < 0 || rank > 2) fail_input("gfld: rank must be 0, 1 or 2");
  dom->mask = mask_from_rle(header.at("mask_rle").get<std::vector<std::uint64_t>>(), dom->ncells());
  dom->kind = "custom";
  dom->validate();

  int comps = 1;
  for (int r = 0; r < rank; ++r) comps *= dom->dim;
  std::vector<double> payload(dom->inside_count() * comps);
  read_le(in, payload.data(), payload.size());

  std::shared_ptr<const GridDomain> cdom = dom;
  std::size_t pos = 0;
  auto scatter = [&](std::vector<double>& raw) {
    for (std::uint32_t c = 0; c < cdom->ncells(); ++c) {
      if (!cdom->inside(c)) continue;
      for (int e = 0; e < comps; ++e) raw[static_cast<std::size_t>(c) * comps + e] = payload[pos++];
    }
  };
  if (rank == 0) {
    ScalarField f(cdom);
    scatter(f.raw());
    return f;
  }
  if (rank == 1) {
    VectorField f(cdom);
    scatter(f.raw());
    return f;
  }
  MatrixField f(cdom);
  scatter(f.raw());
  return f;
}

int gfld_rank(const AnyField& f) { return static_cast<int>(f.index()); }

}  // namespace rigidlab
