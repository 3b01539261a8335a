#pragma once

#include <string>

#include "gcb/engine.hpp"

namespace gcb {

/// CSV export: header "path_id,t,x1,...,xd", one row per path, full
/// double precision.
void write_ensemble_csv(const Ensemble& ens, const std::string& path);
Ensemble read_ensemble_csv(const std::string& path);

/// Compact binary export. Header: magic "GCBE", u32 version (1), u32 dim,
/// u64 n_paths, f64 time, f64 dt, u64 seed; payload: n_paths * dim
/// little-endian 64-bit floats, path-major.
void write_ensemble_binary(const Ensemble& ens, const std::string& path);
Ensemble read_ensemble_binary(const std::string& path);

/// Dispatch on file contents (binary magic) respectively extension
/// (".csv" writes text, anything else binary).
Ensemble read_ensemble(const std::string& path);
void write_ensemble(const Ensemble& ens, const std::string& path);

}  // namespace gcb
