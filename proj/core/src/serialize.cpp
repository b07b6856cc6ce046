#include "repu/serialize.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "repu/errors.hpp"

namespace repu {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what, int layer = -1) {
  if (layer >= 0) throw FormatError("network file, layer " + std::to_string(layer) + ": " + what);
  throw FormatError("network file: " + what);
}

double finite_number(const json& v, const char* field, int layer) {
  if (!v.is_number()) fail(std::string(field) + " entry is not a finite number", layer);
  double x = v.get<double>();
  if (!std::isfinite(x)) fail(std::string(field) + " entry is not finite", layer);
  return x;
}

}  // namespace

std::string serialize(const MixedRepuNetwork& net) {
  json j;
  j["format_version"] = network_format_version;
  j["input_dim"] = net.input_dim();
  if (const auto& b = net.declared_bounds())
    j["declared_bounds"] = {{"value", b->value}, {"partial", b->partial}};
  else
    j["declared_bounds"] = nullptr;
  json layers = json::array();
  for (const auto& l : net.layers()) {
    json jl;
    jl["rows"] = l.out_dim();
    jl["cols"] = l.in_dim();
    std::vector<double> w;
    w.reserve(static_cast<size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    jl["weights"] = w;
    jl["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
    std::vector<int> pw;
    for (auto t : l.powers) pw.push_back(t.value());
    jl["powers"] = pw;
    layers.push_back(std::move(jl));
  }
  j["layers"] = std::move(layers);
  return j.dump(1) + "\n";
}

MixedRepuNetwork deserialize(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");
  if (!j.contains("format_version") || j["format_version"] != network_format_version)
    fail("missing or unsupported format_version");
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty()) fail("no layers");
  std::optional<DeclaredBounds> bounds;
  if (j.contains("declared_bounds") && !j["declared_bounds"].is_null()) {
    const auto& b = j["declared_bounds"];
    if (!b.is_object() || !b.contains("value") || !b.contains("partial")) fail("malformed declared_bounds");
    bounds = DeclaredBounds{finite_number(b["value"], "declared_bounds", -1),
                            finite_number(b["partial"], "declared_bounds", -1)};
  }
  std::vector<Layer> layers;
  int k = 0;
  for (const auto& jl : j["layers"]) {
    if (!jl.is_object()) fail("layer is not an object", k);
    for (const char* f : {"rows", "cols", "weights", "bias", "powers"})
      if (!jl.contains(f)) fail(std::string("missing field '") + f + "'", k);
    if (!jl["rows"].is_number_integer() || !jl["cols"].is_number_integer()) fail("rows/cols must be integers", k);
    long rows = jl["rows"].get<long>(), cols = jl["cols"].get<long>();
    if (rows <= 0 || cols <= 0) fail("empty layer", k);
    const auto& w = jl["weights"];
    const auto& b = jl["bias"];
    const auto& p = jl["powers"];
    if (!w.is_array() || static_cast<long>(w.size()) != rows * cols) fail("weights length != rows*cols", k);
    if (!b.is_array() || static_cast<long>(b.size()) != rows) fail("bias length != rows", k);
    if (!p.is_array() || static_cast<long>(p.size()) != rows) fail("powers length != rows", k);
    Layer l;
    l.weights.resize(rows, cols);
    l.bias.resize(rows);
    size_t i = 0;
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) l.weights(r, c) = finite_number(w[i++], "weights", k);
    for (long r = 0; r < rows; ++r) l.bias(r) = finite_number(b[static_cast<size_t>(r)], "bias", k);
    for (long r = 0; r < rows; ++r) {
      const auto& t = p[static_cast<size_t>(r)];
      if (!t.is_number_integer() || t.get<int>() < 0) fail("power must be a non-negative integer", k);
      l.powers.emplace_back(t.get<int>());
    }
    layers.push_back(std::move(l));
    ++k;
  }
  if (j.contains("input_dim") && j["input_dim"] != layers.front().in_dim()) fail("input_dim disagrees with layer 0");
  try {
    return MixedRepuNetwork(std::move(layers), bounds);
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

MixedRepuNetwork load_network(const std::filesystem::path& path) { return deserialize(read_file(path)); }

void save_network(const MixedRepuNetwork& net, const std::filesystem::path& path) {
  write_file_atomic(path, serialize(net));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::random_device rd;
  auto tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw InvalidArgument("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InvalidArgument("cannot rename into " + path.string() + ": " + ec.message());
  }
}

}  // namespace repu
