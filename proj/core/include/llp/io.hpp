#pragma once

#include <string>

#include "llp/dataset.hpp"

namespace llp {

// Reads a comma-separated file with a header row. The named label column
// may hold integers or arbitrary categorical strings; labels are densely
// re-encoded to {0..C-1} in first-appearance order. Remaining columns are
// features, in file order, and must parse as finite numbers.
BaseDataset load_base_dataset(const std::string& path, const std::string& label_column);

void save_base_dataset(const BaseDataset& ds, const std::string& path);

// Instance files: <prefix>.csv holds features + label column + a `bag`
// integer column; <prefix>.json is the sidecar with the generation spec
// and realized proportions.
void save_instance(const LLPInstance& inst, const std::string& prefix);
LLPInstance load_instance(const std::string& prefix);

std::string sidecar_json(const LLPInstance& inst);

// Shortest round-trip decimal rendering (used for all numeric file output
// so reruns are byte-identical).
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace llp
