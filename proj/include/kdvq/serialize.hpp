#pragma once

#include <string>

#include "kdvq/field.hpp"

namespace kdvq {

// JSON: {"n_max": N, "is_real": b, "re": [...], "im": [...]}, modes ordered
// n = -N..N. Binary: magic "KDVQFLD1", int64 n_max, int64 is_real, then the
// re column followed by the im column as float64.
std::string field_to_json(const PeriodicField& u);
PeriodicField field_from_json(const std::string& text);
void save_field_json(const std::string& path, const PeriodicField& u);
PeriodicField load_field_json(const std::string& path);
void save_field_binary(const std::string& path, const PeriodicField& u);
PeriodicField load_field_binary(const std::string& path);

// Trajectory: {"T": ..., "M": ..., "snaps": [field, ...]}.
std::string st_field_to_json(const SpaceTimeField& u);
SpaceTimeField st_field_from_json(const std::string& text);
void save_st_field_json(const std::string& path, const SpaceTimeField& u);
SpaceTimeField load_st_field_json(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace kdvq
