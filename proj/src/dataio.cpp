#include "cbml/dataio.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "cbml/errors.hpp"
#include "cbml/rng.hpp"

namespace cbml {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

int parse_int(const std::string& text, std::size_t line_no, const char* what) {
  int value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line_no, std::string(what) + " is not an integer: '" + text + "'");
  }
  return value;
}

double parse_real(const std::string& text, std::size_t line_no, const char* what) {
  // strtod via stringstream would accept locale variants; keep it strict.
  if (text.empty()) {
    throw ParseError(line_no, std::string(what) + " is empty");
  }
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) {
    throw ParseError(line_no, std::string(what) + " is not a real number: '" + text + "'");
  }
  return value;
}

}  // namespace

FeatureDataset make_dataset(Matrix features, std::vector<int> labels) {
  if (labels.size() != features.rows) {
    throw LengthMismatch("label count does not match feature row count");
  }
  FeatureDataset ds;
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    ds.class_index[ds.labels[i]].push_back(static_cast<int>(i));
  }
  return ds;
}

FeatureDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(0, "cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(1, "missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 2 || header[0] != "label") {
    throw ParseError(1, "header must be label,f0,...,f{d-1}");
  }
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j + 1] != "f" + std::to_string(j)) {
      throw ParseError(1, "unexpected header column '" + header[j + 1] + "'");
    }
  }

  std::vector<int> labels;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != d + 1) {
      throw DimMismatch("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(d + 1) + " fields, got " +
                        std::to_string(fields.size()));
    }
    labels.push_back(parse_int(fields[0], line_no, "label"));
    for (std::size_t j = 0; j < d; ++j) {
      values.push_back(parse_real(fields[j + 1], line_no, "feature"));
    }
  }
  if (labels.empty()) {
    throw ParseError(line_no, "file has no data rows");
  }
  Matrix features(labels.size(), d);
  features.data = std::move(values);
  return make_dataset(std::move(features), std::move(labels));
}

void save_csv(const std::string& path, const FeatureDataset& dataset) {
  std::ofstream out(path);
  if (!out) {
    throw ParseError(0, "cannot open " + path + " for writing");
  }
  out << "label";
  for (std::size_t j = 0; j < dataset.dim(); ++j) out << ",f" << j;
  out << "\n";
  char buffer[64];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.labels[i];
    const double* row = dataset.features.row(i);
    for (std::size_t j = 0; j < dataset.dim(); ++j) {
      std::snprintf(buffer, sizeof(buffer), "%.17g", row[j]);
      out << ',' << buffer;
    }
    out << "\n";
  }
}

FeatureDataset synth_blobs(int classes, int per_class, int dim,
                           double center_scale, double noise_sigma,
                           std::uint64_t seed) {
  if (classes < 2) throw ConfigError("synthetic set needs at least 2 classes");
  if (per_class < 2) throw ConfigError("synthetic set needs at least 2 points per class");
  if (dim < 1) throw ConfigError("synthetic set needs at least 1 dimension");
  Rng rng(seed);

  // Centers: isotropic Gaussian directions scaled onto the radius sphere.
  Matrix centers(static_cast<std::size_t>(classes), static_cast<std::size_t>(dim));
  for (int c = 0; c < classes; ++c) {
    double* row = centers.row(static_cast<std::size_t>(c));
    double norm_sq = 0.0;
    do {
      norm_sq = 0.0;
      for (int j = 0; j < dim; ++j) {
        row[j] = rng.normal();
        norm_sq += row[j] * row[j];
      }
    } while (norm_sq < 1e-24);
    const double scale = center_scale / std::sqrt(norm_sq);
    for (int j = 0; j < dim; ++j) row[j] *= scale;
  }

  const std::size_t n = static_cast<std::size_t>(classes) * static_cast<std::size_t>(per_class);
  Matrix features(n, static_cast<std::size_t>(dim));
  std::vector<int> labels(n);
  std::size_t r = 0;
  for (int c = 0; c < classes; ++c) {
    for (int p = 0; p < per_class; ++p, ++r) {
      labels[r] = c;
      const double* center = centers.row(static_cast<std::size_t>(c));
      double* row = features.row(r);
      for (int j = 0; j < dim; ++j) {
        row[j] = center[j] + noise_sigma * rng.normal();
      }
    }
  }
  return make_dataset(std::move(features), std::move(labels));
}

namespace {

FeatureDataset subset_by_classes(const FeatureDataset& dataset,
                                 const std::set<int>& classes) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (classes.count(dataset.labels[i])) rows.push_back(static_cast<int>(i));
  }
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (int i : rows) labels.push_back(dataset.labels[static_cast<std::size_t>(i)]);
  return make_dataset(take_rows(dataset.features, rows), std::move(labels));
}

}  // namespace

std::pair<FeatureDataset, FeatureDataset> split_by_class(
    const FeatureDataset& dataset, double fraction) {
  if (dataset.class_index.size() < 2) {
    throw InvalidSplit("class-disjoint split needs at least 2 classes");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidSplit("split fraction must lie strictly between 0 and 1");
  }
  const std::size_t total = dataset.class_index.size();
  const auto train_count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(total)));
  SplitSpec spec;
  std::size_t rank = 0;
  for (const auto& [cls, rows] : dataset.class_index) {
    (void)rows;
    if (rank < train_count) {
      spec.train_classes.insert(cls);
    } else {
      spec.test_classes.insert(cls);
    }
    ++rank;
  }
  return split_by_class(dataset, spec);
}

std::pair<FeatureDataset, FeatureDataset> split_by_class(
    const FeatureDataset& dataset, const SplitSpec& spec) {
  for (int cls : spec.train_classes) {
    if (spec.test_classes.count(cls)) {
      throw InvalidSplit("class " + std::to_string(cls) + " appears on both sides");
    }
  }
  for (const std::set<int>* side : {&spec.train_classes, &spec.test_classes}) {
    for (int cls : *side) {
      if (!dataset.class_index.count(cls)) {
        throw InvalidSplit("class " + std::to_string(cls) + " is not in the dataset");
      }
    }
  }
  if (spec.train_classes.empty() || spec.test_classes.empty()) {
    throw EmptySide("both split sides need at least one class");
  }
  return {subset_by_classes(dataset, spec.train_classes),
          subset_by_classes(dataset, spec.test_classes)};
}

}  // namespace cbml
