#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include <nlohmann/json.hpp>

#include "repute/nn/network.hpp"

namespace repute::nn {

inline constexpr std::string_view kModelMagic = "REPUTE-NN/1";

/// Magic line, u64 LE header length, JSON header {layers, input_shape, meta},
/// u64 LE parameter count, then that many little-endian f64 parameter values.
void save_network(std::ostream& out, const Network& net, const nlohmann::ordered_json& meta = {});
void save_network(const std::filesystem::path& path, const Network& net, const nlohmann::ordered_json& meta = {});

struct LoadedNetwork {
  Network network;
  nlohmann::json meta;
};

LoadedNetwork load_network(std::istream& in);
LoadedNetwork load_network(const std::filesystem::path& path);

}  // namespace repute::nn
