#include "llp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "llp/errors.hpp"

namespace llp {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_feature(const std::string& cell, const std::string& where) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw IoError("non-numeric feature cell at " + where + ": '" + cell + "'");
  if (!std::isfinite(v)) throw IoError("non-finite feature cell at " + where);
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path);
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw IoError(path + ": row " + std::to_string(t.rows.size() + 2) + " has " +
                    std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.rows.empty()) throw IoError("no data rows in " + path);
  return t;
}

BaseDataset dataset_from_table(const CsvTable& t, const std::string& label_column,
                               long bag_col, std::vector<int>* bag_ids) {
  long label_col = -1;
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == label_column) label_col = static_cast<long>(j);
  if (label_col < 0) throw IoError("label column not found: " + label_column);

  BaseDataset ds;
  ds.label_name = label_column;
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (static_cast<long>(j) != label_col && static_cast<long>(j) != bag_col)
      ds.feature_names.push_back(t.header[j]);

  const long n = static_cast<long>(t.rows.size());
  const long d = static_cast<long>(ds.feature_names.size());
  if (d < 1) throw IoError("no feature columns");
  ds.features.resize(n, d);
  ds.labels.reserve(n);
  std::unordered_map<std::string, int> label_codes;
  for (long i = 0; i < n; ++i) {
    long jj = 0;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      if (static_cast<long>(j) == label_col) {
        const std::string& cell = t.rows[i][j];
        auto it = label_codes.emplace(cell, static_cast<int>(label_codes.size())).first;
        ds.labels.push_back(it->second);
      } else if (static_cast<long>(j) == bag_col) {
        if (bag_ids) {
          const std::string& cell = t.rows[i][j];
          int b = 0;
          auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), b);
          if (ec != std::errc()) throw IoError("bad bag id: '" + cell + "'");
          bag_ids->push_back(b);
        }
      } else {
        ds.features(i, jj++) = parse_feature(
            t.rows[i][j], "row " + std::to_string(i + 2) + " column " + t.header[j]);
      }
    }
  }
  ds.n_classes = static_cast<int>(label_codes.size());
  if (ds.n_classes < 2) throw IoError("label column has a single class");
  ds.validate();
  return ds;
}

void write_table(std::ostream& out, const BaseDataset& ds, const std::vector<int>* bags) {
  for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
    if (j) out << ',';
    out << ds.feature_names[j];
  }
  out << ',' << ds.label_name;
  if (bags) out << ",bag";
  out << '\n';
  for (long i = 0; i < ds.n_items(); ++i) {
    for (long j = 0; j < ds.n_features(); ++j) {
      if (j) out << ',';
      out << format_double(ds.features(i, j));
    }
    out << ',' << ds.labels[i];
    if (bags) out << ',' << (*bags)[i];
    out << '\n';
  }
}

}  // namespace

BaseDataset load_base_dataset(const std::string& path, const std::string& label_column) {
  return dataset_from_table(read_csv(path), label_column, -1, nullptr);
}

void save_base_dataset(const BaseDataset& ds, const std::string& path) {
  if (ds.feature_names.empty()) throw Error("save_base_dataset: feature names required");
  std::ostringstream out;
  write_table(out, ds, nullptr);
  write_text_file(path, out.str());
}

std::string sidecar_json(const LLPInstance& inst) {
  const GenSpec& s = inst.spec;
  ordered_json j;
  j["variant"] = to_string(s.variant);
  j["n_bags"] = s.n_bags;
  j["bag_sizes"] = s.bag_sizes;
  {
    ordered_json rows = ordered_json::array();
    for (long l = 0; l < s.proportions.rows(); ++l) {
      ordered_json row = ordered_json::array();
      for (long c = 0; c < s.proportions.cols(); ++c) row.push_back(s.proportions(l, c));
      rows.push_back(std::move(row));
    }
    j["proportions"] = std::move(rows);
  }
  j["seed"] = s.seed;
  j["assignment_mode"] = to_string(s.assignment_mode);
  j["n_clusters"] = s.n_clusters;
  {
    ordered_json rows = ordered_json::array();
    for (long l = 0; l < inst.realized_proportions.rows(); ++l) {
      ordered_json row = ordered_json::array();
      for (long c = 0; c < inst.realized_proportions.cols(); ++c)
        row.push_back(inst.realized_proportions(l, c));
      rows.push_back(std::move(row));
    }
    j["realized_proportions"] = std::move(rows);
  }
  j["label_column"] = inst.base->label_name;
  return j.dump(2) + "\n";
}

void save_instance(const LLPInstance& inst, const std::string& prefix) {
  for (const auto& name : inst.base->feature_names)
    if (name == "bag" || name == inst.base->label_name)
      throw Error("save_instance: feature column name collides with '" + name + "'");
  std::ostringstream out;
  write_table(out, *inst.base, &inst.bag_ids);
  write_text_file(prefix + ".csv", out.str());
  write_text_file(prefix + ".json", sidecar_json(inst));
}

LLPInstance load_instance(const std::string& prefix) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(prefix + ".json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("bad sidecar " + prefix + ".json: " + e.what());
  }
  GenSpec spec;
  spec.variant = variant_from_string(j.at("variant").get<std::string>());
  spec.n_bags = j.at("n_bags").get<int>();
  spec.bag_sizes = j.at("bag_sizes").get<std::vector<long>>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.assignment_mode =
      assignment_mode_from_string(j.at("assignment_mode").get<std::string>());
  spec.n_clusters = j.at("n_clusters").get<int>();
  std::string label_column = j.value("label_column", std::string("label"));

  CsvTable t = read_csv(prefix + ".csv");
  long bag_col = -1;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (t.header[c] == "bag") bag_col = static_cast<long>(c);
  if (bag_col < 0) throw IoError(prefix + ".csv: missing 'bag' column");

  std::vector<int> bag_ids;
  auto base = std::make_shared<BaseDataset>(
      dataset_from_table(t, label_column, bag_col, &bag_ids));

  const auto& pj = j.at("proportions");
  spec.proportions.resize(spec.n_bags, base->n_classes);
  if (static_cast<long>(pj.size()) != spec.n_bags)
    throw IoError("sidecar proportions row count mismatch");
  for (long l = 0; l < spec.n_bags; ++l)
    for (long c = 0; c < base->n_classes; ++c)
      spec.proportions(l, c) = pj.at(l).at(c).get<double>();

  return make_instance(std::move(base), std::move(bag_ids), std::move(spec));
}

}  // namespace llp
