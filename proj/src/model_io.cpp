#include "xbsim/model_io.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "xbsim/error.hpp"

namespace xbsim::io {

using nlohmann::json;

namespace {

std::vector<std::int8_t> read_blob(const std::filesystem::path& path, std::size_t expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight blob '" + path.string() + "'");
  std::vector<std::int8_t> data(expected);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected || in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("weight blob '" + path.string() + "' does not hold exactly " +
                     std::to_string(expected) + " bytes");
  }
  return data;
}

void write_blob(const std::filesystem::path& path, std::span<const std::int8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write weight blob '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field \"" + key + "\": " + e.what());
  }
}

template <typename T>
T optional(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return required<T>(j, key, where);
}

pipeline::LayerKind parse_kind(const std::string& kind, const std::string& where) {
  if (kind == "dense") return pipeline::LayerKind::dense;
  if (kind == "conv") return pipeline::LayerKind::conv;
  if (kind == "sign") return pipeline::LayerKind::sign;
  if (kind == "threshold") return pipeline::LayerKind::threshold;
  throw ParseError(where + ": unknown layer kind '" + kind + "'");
}

pipeline::LayerSpec parse_layer(const json& j, const std::filesystem::path& base, std::size_t index) {
  const std::string where = "layer " + std::to_string(index);
  pipeline::LayerSpec layer;
  layer.name = optional<std::string>(j, "name", "layer" + std::to_string(index), where);
  layer.kind = parse_kind(required<std::string>(j, "kind", where), where);
  const std::string at = "layer '" + layer.name + "'";

  if (layer.kind == pipeline::LayerKind::dense || layer.kind == pipeline::LayerKind::conv) {
    const auto shape = required<std::vector<std::size_t>>(j, "shape", at);
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (layer.kind == pipeline::LayerKind::dense) {
      if (shape.size() != 2) throw ParseError(at + ": dense shape must be [inputs, outputs]");
      rows = shape[0];
      cols = shape[1];
    } else {
      if (shape.size() != 4) throw ParseError(at + ": conv shape must be [kh, kw, in_c, out_c]");
      const auto input = required<std::vector<std::size_t>>(j, "input", at);
      if (input.size() != 3) throw ParseError(at + ": conv input must be [h, w, c]");
      auto& g = layer.conv;
      g.kernel_h = shape[0];
      g.kernel_w = shape[1];
      g.in_c = shape[2];
      g.out_c = shape[3];
      g.in_h = input[0];
      g.in_w = input[1];
      if (input[2] != g.in_c) throw ParseError(at + ": conv input channels disagree with shape");
      g.stride = optional<std::size_t>(j, "stride", 1, at);
      g.pad = optional<std::size_t>(j, "pad", 0, at);
      rows = g.patch_size();
      cols = g.out_c;
    }
    layer.full_precision = optional<bool>(j, "full_precision", false, at);
    layer.weight_bits = optional<int>(j, "weight_bits", 1, at);
    layer.activation_bits = optional<int>(j, "activation_bits", 1, at);
    layer.requant_shift = optional<int>(j, "requant_shift", 0, at);
    const auto blob = read_blob(base / required<std::string>(j, "weights", at), rows * cols);
    if (layer.weight_bits > 1) {
      if (layer.kind != pipeline::LayerKind::dense) throw ParseError(at + ": multi-bit layers must be dense");
      layer.multibit_weights.rows = rows;
      layer.multibit_weights.cols = cols;
      layer.multibit_weights.values.assign(blob.begin(), blob.end());
    } else {
      try {
        layer.weights = bnn::BinaryTensor({rows, cols}, blob);
      } catch (const DomainError& e) {
        throw ParseError(at + ": " + e.what());
      }
    }
  } else if (layer.kind == pipeline::LayerKind::threshold) {
    if (j.contains("batchnorm")) {
      const auto& bn = j.at("batchnorm");
      const auto gamma = required<std::vector<double>>(bn, "gamma", at);
      const auto beta = required<std::vector<double>>(bn, "beta", at);
      const auto mean = required<std::vector<double>>(bn, "mean", at);
      const auto var = required<std::vector<double>>(bn, "var", at);
      const double eps = optional<double>(bn, "eps", 1e-5, at);
      layer.thresholds = pipeline::fold_batchnorm(gamma, beta, mean, var, eps);
    } else {
      const auto values = required<std::vector<std::int64_t>>(j, "thresholds", at);
      const auto negate = optional<std::vector<bool>>(j, "negate", std::vector<bool>(values.size(), false), at);
      if (negate.size() != values.size()) throw ParseError(at + ": negate and thresholds differ in length");
      for (std::size_t i = 0; i < values.size(); ++i) layer.thresholds.push_back({values[i], negate[i]});
    }
  }
  return layer;
}

}  // namespace

pipeline::Model load_model(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open model manifest '" + manifest.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(manifest.string() + ": " + e.what());
  }
  const std::string where = manifest.string();
  const auto format = optional<std::string>(j, "format", "xbsim-model", where);
  if (format != "xbsim-model") throw ParseError(where + ": unsupported format '" + format + "'");
  const int version = optional<int>(j, "version", 1, where);
  if (version != 1) throw ParseError(where + ": unsupported version " + std::to_string(version));

  pipeline::Model model;
  model.input_size = required<std::size_t>(j, "input_size", where);
  if (!j.contains("layers") || !j.at("layers").is_array()) throw ParseError(where + ": \"layers\" must be an array");
  const auto base = manifest.parent_path();
  std::size_t index = 0;
  for (const auto& layer : j.at("layers")) model.layers.push_back(parse_layer(layer, base, index++));
  try {
    model.validate();
  } catch (const ShapeError& e) {
    throw ParseError(where + ": " + e.what());
  }
  return model;
}

std::filesystem::path save_model(const pipeline::Model& model, const std::filesystem::path& dir,
                                 const std::string& stem) {
  std::filesystem::create_directories(dir);
  json j;
  j["format"] = "xbsim-model";
  j["version"] = 1;
  j["input_size"] = model.input_size;
  j["layers"] = json::array();
  for (const auto& layer : model.layers) {
    json l;
    l["name"] = layer.name;
    l["kind"] = std::string(pipeline::to_string(layer.kind));
    if (layer.kind == pipeline::LayerKind::dense || layer.kind == pipeline::LayerKind::conv) {
      const std::string blob = stem + "." + layer.name + ".bin";
      if (layer.kind == pipeline::LayerKind::dense) {
        l["shape"] = {layer.input_size(), layer.output_size()};
      } else {
        const auto& g = layer.conv;
        l["shape"] = {g.kernel_h, g.kernel_w, g.in_c, g.out_c};
        l["input"] = {g.in_h, g.in_w, g.in_c};
        l["stride"] = g.stride;
        l["pad"] = g.pad;
      }
      l["weights"] = blob;
      if (layer.full_precision) l["full_precision"] = true;
      if (layer.weight_bits > 1) {
        l["weight_bits"] = layer.weight_bits;
        l["activation_bits"] = layer.activation_bits;
        l["requant_shift"] = layer.requant_shift;
        std::vector<std::int8_t> bytes(layer.multibit_weights.values.begin(), layer.multibit_weights.values.end());
        write_blob(dir / blob, bytes);
      } else {
        write_blob(dir / blob, layer.weights.values());
      }
    } else if (layer.kind == pipeline::LayerKind::threshold) {
      std::vector<std::int64_t> values;
      std::vector<bool> negate;
      for (const auto& t : layer.thresholds) {
        values.push_back(t.value);
        negate.push_back(t.negate);
      }
      l["thresholds"] = values;
      l["negate"] = negate;
    }
    j["layers"].push_back(std::move(l));
  }
  const auto path = dir / (stem + ".json");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write model manifest '" + path.string() + "'");
  out << j.dump(2) << '\n';
  return path;
}

pipeline::Dataset load_csv_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  pipeline::Dataset data;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      while (used < cell.size() && (cell[used] == ' ' || cell[used] == '\t')) ++used;
      if (used == 0 || used != cell.size()) {
        throw ParseError(path.string() + ": row " + std::to_string(row) + ", column " +
                         std::to_string(col) + ": '" + cell + "' is not a number");
      }
      values.push_back(v);
    }
    if (values.size() < 2) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + ": need a label and features");
    }
    const double label = values.front();
    if (label != std::floor(label) || label < 0) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + ": label must be a non-negative integer");
    }
    if (data.feature_size == 0) data.feature_size = values.size() - 1;
    if (values.size() - 1 != data.feature_size) {
      throw ParseError(path.string() + ": row " + std::to_string(row) + ": expected " +
                       std::to_string(data.feature_size) + " features");
    }
    data.labels.push_back(static_cast<int>(label));
    data.features.emplace_back(values.begin() + 1, values.end());
  }
  return data;
}

void save_csv_dataset(const pipeline::Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write dataset '" + path.string() + "'");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double v : data.features[i]) out << ',' << v;
    out << '\n';
  }
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (in.gcount() != 4) throw ParseError(path.string() + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

IdxArray read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open IDX file '" + path.string() + "'");
  const std::uint32_t magic = read_be32(in, path);
  if ((magic >> 16) != 0 || ((magic >> 8) & 0xFF) != 0x08) {
    throw ParseError(path.string() + ": only unsigned-byte IDX files are supported");
  }
  IdxArray a;
  const std::uint32_t rank = magic & 0xFF;
  if (rank == 0) throw ParseError(path.string() + ": IDX rank 0");
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    a.dims.push_back(read_be32(in, path));
    count *= a.dims.back();
  }
  a.data.resize(count);
  in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) throw ParseError(path.string() + ": truncated IDX payload");
  return a;
}

}  // namespace

pipeline::Dataset load_idx_dataset(const std::filesystem::path& images,
                                   const std::filesystem::path& labels) {
  const auto img = read_idx(images);
  const auto lab = read_idx(labels);
  if (lab.dims.size() != 1) throw ParseError(labels.string() + ": label file must be rank 1");
  if (img.dims.size() < 2) throw ParseError(images.string() + ": image file must be rank >= 2");
  if (img.dims[0] != lab.dims[0]) throw ParseError("IDX image and label counts differ");
  pipeline::Dataset data;
  const std::size_t count = img.dims[0];
  data.feature_size = count == 0 ? 0 : img.data.size() / count;
  for (std::size_t i = 0; i < count; ++i) {
    const auto* p = img.data.data() + i * data.feature_size;
    data.features.emplace_back(p, p + data.feature_size);
    data.labels.push_back(lab.data[i]);
  }
  return data;
}

pipeline::Dataset load_dataset(const std::filesystem::path& path, const std::filesystem::path& labels) {
  return labels.empty() ? load_csv_dataset(path) : load_idx_dataset(path, labels);
}

}  // namespace xbsim::io
