#include "repute/ingest/fixture.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "repute/common/error.hpp"
#include "repute/common/format.hpp"
#include "repute/common/log.hpp"

namespace repute::ingest {
namespace fs = std::filesystem;
namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, Label> read_labels(const fs::path& path) {
  std::map<std::string, Label> labels;
  if (!fs::exists(path)) {
    logger()->warn("no labels.csv in {}; every contract is unlabelled", path.parent_path().string());
    return labels;
  }
  std::ifstream in(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != 2) throw ParseError("labels.csv line " + std::to_string(line_no) + ": expected address,label", 0);
    if (line_no == 1 && cols[0] == "address") continue;
    labels[normalize_address(cols[0])] = parse_label(cols[1]);
  }
  return labels;
}

}  // namespace

std::vector<ContractRecord> load_fixture_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("fixture directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().filename() != "fixture_manifest.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  const auto labels = read_labels(dir / "labels.csv");
  std::map<std::string, fs::path> seen;
  std::vector<ContractRecord> records;
  records.reserve(files.size());
  for (const auto& file : files) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(file.string() + ": " + e.what(), e.byte);
    }
    ContractRecord rec = contract_from_json(j);
    if (auto [it, inserted] = seen.emplace(rec.address, file); !inserted) {
      throw Error("duplicate contract address " + rec.address + " in " + it->second.filename().string() + " and " +
                  file.filename().string());
    }
    if (auto it = labels.find(rec.address); it != labels.end()) {
      rec.label = it->second;
    } else {
      logger()->warn("no label for {}; marking unlabelled", rec.address);
      rec.label = Label::Unlabelled;
    }
    records.push_back(std::move(rec));
  }
  std::sort(records.begin(), records.end(),
            [](const ContractRecord& a, const ContractRecord& b) { return a.address < b.address; });
  return records;
}

void write_fixture_dir(const fs::path& dir, const std::vector<ContractRecord>& contracts) {
  fs::create_directories(dir);
  std::vector<const ContractRecord*> sorted;
  for (const auto& c : contracts) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->address < b->address; });

  std::ofstream labels(dir / "labels.csv", std::ios::binary);
  labels << "address,label\n";
  for (const auto* c : sorted) {
    std::ofstream out(dir / (c->address + ".json"), std::ios::binary);
    out << contract_to_json(*c).dump(1) << '\n';
    labels << c->address << ',' << label_name(c->label) << '\n';
  }
}

}  // namespace repute::ingest
