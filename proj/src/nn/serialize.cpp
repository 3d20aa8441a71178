#include "repute/nn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace repute::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "model blobs are written in native little-endian order");

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  if (!in.read(buf, 8)) throw Error("model file truncated");
  std::uint64_t v = 0;
  std::memcpy(&v, buf, 8);
  return v;
}

}  // namespace

void save_network(std::ostream& out, const Network& net, const nlohmann::ordered_json& meta) {
  nlohmann::ordered_json header;
  header["input_shape"] = net.input_shape();
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < net.size(); ++i) layers.push_back(net.layer(i).spec());
  header["layers"] = std::move(layers);
  header["meta"] = meta.is_null() ? nlohmann::ordered_json::object() : meta;
  const std::string text = header.dump();

  out << kModelMagic << '\n';
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_u64(out, net.parameter_count());
  for (const Param* p : net.params()) {
    out.write(reinterpret_cast<const char*>(p->value.data().data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing model");
}

void save_network(const std::filesystem::path& path, const Network& net, const nlohmann::ordered_json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_network(out, net, meta);
}

LoadedNetwork load_network(std::istream& in) {
  std::string magic;
  std::getline(in, magic);
  if (magic != kModelMagic) throw Error("not a model file (bad magic '" + magic + "')");
  const auto header_len = read_u64(in);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) throw Error("model header truncated");
  const auto header = nlohmann::json::parse(text);

  LoadedNetwork loaded{Network(header.at("input_shape").get<Shape>()), header.value("meta", nlohmann::json::object())};
  for (const auto& spec : header.at("layers")) loaded.network.add(layer_from_spec(spec));
  const auto count = read_u64(in);
  if (count != loaded.network.parameter_count()) throw Error("model parameter count does not match layer specs");
  for (Param* p : loaded.network.params()) {
    if (!in.read(reinterpret_cast<char*>(p->value.data().data()),
                 static_cast<std::streamsize>(p->value.size() * sizeof(double)))) {
      throw Error("model parameter blob truncated");
    }
  }
  loaded.network.zero_grad();
  return loaded;
}

LoadedNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError(path.string());
  return load_network(in);
}

}  // namespace repute::nn
