#pragma once

#include <filesystem>
#include <vector>

#include "repute/ingest/records.hpp"

namespace repute::ingest {

/// Loads every *.json in `dir` (except fixture_manifest.json) plus the labels.csv sidecar (address,label).
/// Records are sorted by address; unlisted addresses become Unlabelled with a warning.
/// Throws Error naming the address when two files share one.
std::vector<ContractRecord> load_fixture_dir(const std::filesystem::path& dir);

/// Writes one <address>.json per contract plus labels.csv.
void write_fixture_dir(const std::filesystem::path& dir, const std::vector<ContractRecord>& contracts);

}  // namespace repute::ingest
