#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biascorr/core.hpp"
#include "biascorr/datagen.hpp"
#include "biascorr/logistic.hpp"
#include "biascorr/sampling.hpp"

namespace biascorr::io {

// Datasets ------------------------------------------------------------------
//
// CSV with a header row. Columns: "y" (0 or 1, required), "f0".."f{F-1}"
// (finite reals), and optionally both "s0" and "s1" (per-row sampling rates
// in [0,1]). Columns may appear in any order when reading; writing emits
// f0..f{F-1}, s0, s1, y. Reals are written with 17 significant digits.

Dataset read_dataset(std::istream& in, std::string_view source = "<stream>");
Dataset read_dataset(const std::filesystem::path& path);

void write_dataset(const Dataset& data, std::ostream& out);
void write_dataset(const Dataset& data, const std::filesystem::path& path);

/// Writes `data` with one extra trailing column.
void write_dataset_with_column(const Dataset& data, std::string_view column,
                               std::span<const double> values, std::ostream& out);

// Models ------------------------------------------------------------------

struct ModelFile {
  logistic::LogisticModel model;
  double lambda = 0.0;
  /// "constant" or "per-instance".
  std::string train_s_r_mode = "constant";

  bool operator==(const ModelFile&) const = default;
};

/// {"intercept", "weights", "feature_count", "lambda", "train_s_r_mode"},
/// numbers with 17 significant digits.
std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(std::string_view text, std::string_view source = "<string>");

void write_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile read_model(const std::filesystem::path& path);

// Manifests ---------------------------------------------------------------

std::string sampling_manifest_to_json(const sampling::SamplingManifest& manifest);
sampling::SamplingManifest sampling_manifest_from_json(std::string_view text,
                                                       std::string_view source = "<string>");

std::string truth_manifest_to_json(const datagen::GenSpec& spec);
datagen::GenSpec truth_manifest_from_json(std::string_view text,
                                          std::string_view source = "<string>");

// Small file helpers shared by the CLI.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// %.17g, the format of every real in emitted files.
std::string format_real(double v);

}  // namespace biascorr::io
