#include "biascorr/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include "biascorr/errors.hpp"
#include "json.hpp"

namespace biascorr::io {

using nlohmann::json;

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string location(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

std::optional<double> parse_real(std::string_view cell) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
    return std::nullopt;
  }
  return v;
}

// Column layout recovered from a header row.
struct Layout {
  std::size_t columns = 0;
  std::size_t label = 0;
  std::vector<std::size_t> features;  // features[f] = column of "f<f>"
  std::optional<std::size_t> s0;
  std::optional<std::size_t> s1;
};

Layout parse_header(std::string_view line, std::string_view source) {
  const auto cells = split_csv(line);
  Layout layout;
  layout.columns = cells.size();
  std::optional<std::size_t> label;
  std::vector<std::optional<std::size_t>> features;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::string_view name = trim(cells[c]);
    auto duplicate = [&] {
      return SchemaError(location(source, 1) + ": duplicate column '" + std::string(name) + "'");
    };
    if (name == "y") {
      if (label) throw duplicate();
      label = c;
    } else if (name == "s0") {
      if (layout.s0) throw duplicate();
      layout.s0 = c;
    } else if (name == "s1") {
      if (layout.s1) throw duplicate();
      layout.s1 = c;
    } else if (name.size() > 1 && name.front() == 'f') {
      std::size_t index = 0;
      const char* first = name.data() + 1;
      const char* last = name.data() + name.size();
      auto [ptr, ec] = std::from_chars(first, last, index);
      if (ec != std::errc() || ptr != last || (name.size() > 2 && name[1] == '0')) {
        throw SchemaError(location(source, 1) + ": unrecognized column '" +
                          std::string(name) + "'");
      }
      if (index >= features.size()) features.resize(index + 1);
      if (features[index]) throw duplicate();
      features[index] = c;
    } else {
      throw SchemaError(location(source, 1) + ": unrecognized column '" +
                        std::string(name) + "'");
    }
  }
  if (!label) throw SchemaError(location(source, 1) + ": missing required column 'y'");
  if (layout.s0.has_value() != layout.s1.has_value()) {
    throw SchemaError(location(source, 1) + ": columns 's0' and 's1' must appear together");
  }
  layout.label = *label;
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (!features[f]) {
      throw SchemaError(location(source, 1) + ": missing feature column 'f" +
                        std::to_string(f) + "'");
    }
    layout.features.push_back(*features[f]);
  }
  return layout;
}

void write_header(const Dataset& data, std::ostream& out) {
  for (std::size_t f = 0; f < data.feature_count(); ++f) out << 'f' << f << ',';
  if (data.has_rates()) out << "s0,s1,";
  out << 'y';
}

void write_row(const Dataset& data, std::size_t n, std::ostream& out) {
  for (double v : data.features(n)) out << format_real(v) << ',';
  for (double v : data.rates(n)) out << format_real(v) << ',';
  out << data.label(n);
}

void check_stream(const std::ostream& out, const std::string& destination) {
  if (!out) throw IoError("failed writing " + destination);
}

template <class T>
T field(const json& doc, const char* name, std::string_view source) {
  if (!doc.contains(name)) {
    throw SchemaError(std::string(source) + ": missing field '" + name + "'");
  }
  try {
    return doc.at(name).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string(source) + ": field '" + name + "' has the wrong type");
  }
}

json parse_json(std::string_view text, std::string_view source) {
  try {
    json doc = json::parse(text.begin(), text.end());
    if (!doc.is_object()) throw SchemaError(std::string(source) + ": expected a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(source) + ": " + e.what(), 0, e.byte);
  }
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Datasets ------------------------------------------------------------------

Dataset read_dataset(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw SchemaError(std::string(source) + ": missing header row");
  }
  const Layout layout = parse_header(line, source);
  const bool has_rates = layout.s0.has_value();
  Dataset data(layout.features.size(), LabelSpace::binary(), has_rates);

  std::vector<double> x(layout.features.size());
  std::vector<double> rates;
  std::size_t line_no = 1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    const std::string where =
        location(source, line_no) + " (data row " + std::to_string(row) + ")";
    if (cells.size() != layout.columns) {
      throw SchemaError(where + ": expected " + std::to_string(layout.columns) +
                        " cells, found " + std::to_string(cells.size()));
    }
    auto real_at = [&](std::size_t column, const std::string& name) {
      auto v = parse_real(trim(cells[column]));
      if (!v) {
        throw ParseError(where + ", column '" + name + "': cannot parse '" +
                             std::string(trim(cells[column])) + "' as a number",
                         line_no, column + 1);
      }
      if (!std::isfinite(*v)) {
        throw SchemaError(where + ", column '" + name + "': value is not finite");
      }
      return *v;
    };
    for (std::size_t f = 0; f < layout.features.size(); ++f) {
      x[f] = real_at(layout.features[f], "f" + std::to_string(f));
    }
    const std::string_view label_cell = trim(cells[layout.label]);
    Label y = 0;
    if (label_cell == "0") {
      y = 0;
    } else if (label_cell == "1") {
      y = 1;
    } else {
      throw SchemaError(where + ", column 'y': label must be 0 or 1, found '" +
                        std::string(label_cell) + "'");
    }
    rates.clear();
    if (has_rates) {
      for (auto [column, name] : {std::pair{*layout.s0, "s0"}, std::pair{*layout.s1, "s1"}}) {
        double r = real_at(column, name);
        if (!(r >= 0.0 && r <= 1.0)) {
          throw SchemaError(where + ", column '" + name + "': rate " + format_real(r) +
                            " is outside [0, 1]");
        }
        rates.push_back(r);
      }
    }
    data.add(x, y, rates);
    ++row;
  }
  if (in.bad()) throw IoError(std::string(source) + ": read failed");
  return data;
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return read_dataset(in, path.string());
}

void write_dataset(const Dataset& data, std::ostream& out) {
  if (!data.label_space().is_binary()) {
    throw DomainError("only binary {0, 1} datasets can be written as CSV");
  }
  write_header(data, out);
  out << '\n';
  for (std::size_t n = 0; n < data.size(); ++n) {
    write_row(data, n, out);
    out << '\n';
  }
}

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_dataset(data, out);
  out.flush();
  check_stream(out, path.string());
}

void write_dataset_with_column(const Dataset& data, std::string_view column,
                               std::span<const double> values, std::ostream& out) {
  if (values.size() != data.size()) throw DomainError("extra column must have one value per row");
  if (!data.label_space().is_binary()) {
    throw DomainError("only binary {0, 1} datasets can be written as CSV");
  }
  write_header(data, out);
  out << ',' << column << '\n';
  for (std::size_t n = 0; n < data.size(); ++n) {
    write_row(data, n, out);
    out << ',' << format_real(values[n]) << '\n';
  }
}

// Models ------------------------------------------------------------------

std::string model_to_json(const ModelFile& model) {
  std::ostringstream out;
  out << "{\n  \"intercept\": " << format_real(model.model.intercept) << ",\n";
  out << "  \"weights\": [";
  for (std::size_t f = 0; f < model.model.weights.size(); ++f) {
    out << (f == 0 ? "" : ", ") << format_real(model.model.weights[f]);
  }
  out << "],\n";
  out << "  \"feature_count\": " << model.model.weights.size() << ",\n";
  out << "  \"lambda\": " << format_real(model.lambda) << ",\n";
  out << "  \"train_s_r_mode\": " << json(model.train_s_r_mode).dump() << "\n}\n";
  return out.str();
}

ModelFile model_from_json(std::string_view text, std::string_view source) {
  const json doc = parse_json(text, source);
  ModelFile model;
  model.model.intercept = field<double>(doc, "intercept", source);
  model.model.weights = field<std::vector<double>>(doc, "weights", source);
  const auto feature_count = field<std::size_t>(doc, "feature_count", source);
  model.lambda = field<double>(doc, "lambda", source);
  model.train_s_r_mode = field<std::string>(doc, "train_s_r_mode", source);
  if (feature_count != model.model.weights.size()) {
    throw SchemaError(std::string(source) + ": feature_count is " +
                      std::to_string(feature_count) + " but " +
                      std::to_string(model.model.weights.size()) + " weights are given");
  }
  return model;
}

void write_model(const ModelFile& model, const std::filesystem::path& path) {
  write_text(path, model_to_json(model));
}

ModelFile read_model(const std::filesystem::path& path) {
  return model_from_json(read_text(path), path.string());
}

// Manifests ---------------------------------------------------------------

std::string sampling_manifest_to_json(const sampling::SamplingManifest& manifest) {
  json spec;
  if (manifest.spec.mode() == SamplingSpec::Mode::constant) {
    const auto rates = manifest.spec.constant_rates();
    spec = {{"mode", "constant"}, {"rates", std::vector<double>(rates.begin(), rates.end())}};
  } else {
    spec = {{"mode", "per-instance"}, {"label_count", manifest.spec.label_count()}};
  }
  json doc = {{"seed", manifest.seed},
              {"spec", spec},
              {"original_count", manifest.original_count},
              {"retained_count", manifest.retained_count},
              {"retained_per_label", manifest.retained_per_label}};
  return doc.dump(2) + "\n";
}

sampling::SamplingManifest sampling_manifest_from_json(std::string_view text,
                                                       std::string_view source) {
  const json doc = parse_json(text, source);
  sampling::SamplingManifest manifest;
  manifest.seed = field<std::uint64_t>(doc, "seed", source);
  const json spec = field<json>(doc, "spec", source);
  const std::string where = std::string(source) + " spec";
  const auto mode = field<std::string>(spec, "mode", where);
  try {
    if (mode == "constant") {
      manifest.spec = SamplingSpec::constant(field<std::vector<double>>(spec, "rates", where));
    } else if (mode == "per-instance") {
      manifest.spec = SamplingSpec::per_instance(field<std::size_t>(spec, "label_count", where));
    } else {
      throw SchemaError(where + ": unknown mode '" + mode + "'");
    }
  } catch (const DomainError& e) {
    throw SchemaError(where + ": " + e.what());
  }
  manifest.original_count = field<std::size_t>(doc, "original_count", source);
  manifest.retained_count = field<std::size_t>(doc, "retained_count", source);
  manifest.retained_per_label =
      field<std::vector<std::size_t>>(doc, "retained_per_label", source);
  std::size_t sum = 0;
  for (std::size_t c : manifest.retained_per_label) sum += c;
  if (sum != manifest.retained_count || manifest.retained_count > manifest.original_count) {
    throw SchemaError(std::string(source) + ": inconsistent retained counts");
  }
  return manifest;
}

std::string truth_manifest_to_json(const datagen::GenSpec& spec) {
  json doc = {{"intercept", spec.true_intercept},
              {"weights", spec.true_weights},
              {"feature_count", spec.feature_count},
              {"seed", spec.seed},
              {"n", spec.n}};
  return doc.dump(2) + "\n";
}

datagen::GenSpec truth_manifest_from_json(std::string_view text, std::string_view source) {
  const json doc = parse_json(text, source);
  datagen::GenSpec spec;
  spec.true_intercept = field<double>(doc, "intercept", source);
  spec.true_weights = field<std::vector<double>>(doc, "weights", source);
  spec.feature_count = field<std::size_t>(doc, "feature_count", source);
  spec.seed = field<std::uint64_t>(doc, "seed", source);
  spec.n = field<std::size_t>(doc, "n", source);
  if (spec.true_weights.size() != spec.feature_count) {
    throw SchemaError(std::string(source) + ": weight count does not match feature_count");
  }
  return spec;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  check_stream(out, path.string());
}

}  // namespace biascorr::io
