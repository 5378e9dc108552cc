#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clickstorm/grid.hpp"

namespace clickstorm {

struct DatasetEntry {
  std::string id;
  std::filesystem::path image_path;  // resolved against the manifest directory
  std::filesystem::path mask_path;
};

struct Sample {
  std::string id;
  Image image;
  BinaryMask mask;
};

class DatasetError : public Error {
 public:
  DatasetError(std::string entry_id, const std::string& message)
      : Error("entry '" + entry_id + "': " + message), entry_id_(std::move(entry_id)) {}
  const std::string& entry_id() const { return entry_id_; }

 private:
  std::string entry_id_;
};

// Manifest: {"name": str, "entries": [{"image": path, "mask": path, "id": str}]}.
// Entries are decoded on demand; masks are foreground where the gray value is >= 128.
class Dataset {
 public:
  static Dataset load(const std::filesystem::path& manifest_path);

  const std::string& name() const { return name_; }
  const std::vector<DatasetEntry>& entries() const { return entries_; }
  std::optional<std::size_t> find(const std::string& id) const;

  // Throws DatasetError for missing files, undecodable PNGs and dimension mismatches.
  Sample load_entry(std::size_t index) const;

 private:
  std::string name_;
  std::vector<DatasetEntry> entries_;
};

struct LoadedDataset {
  std::vector<Sample> samples;
  std::vector<DatasetError> errors;
};

// Decodes every entry, collecting per-entry failures instead of stopping at the first.
LoadedDataset load_all(const Dataset& dataset);

}  // namespace clickstorm
