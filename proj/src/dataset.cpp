#include "clickstorm/dataset.hpp"

#include <fstream>
#include <set>

#include "clickstorm/png_io.hpp"
#include "json.hpp"

namespace clickstorm {

Dataset Dataset::load(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw Error("cannot open manifest " + manifest_path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
  }
  const auto base = manifest_path.parent_path();
  Dataset ds;
  try {
    ds.name_ = j.at("name").get<std::string>();
    std::set<std::string> seen;
    for (const auto& e : j.at("entries")) {
      DatasetEntry entry{e.at("id").get<std::string>(), base / e.at("image").get<std::string>(),
                         base / e.at("mask").get<std::string>()};
      if (!seen.insert(entry.id).second) {
        throw Error("duplicate entry id '" + entry.id + "'");
      }
      ds.entries_.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("manifest " + manifest_path.string() + ": " + e.what());
  }
  return ds;
}

std::optional<std::size_t> Dataset::find(const std::string& id) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id == id) return i;
  }
  return std::nullopt;
}

Sample Dataset::load_entry(std::size_t index) const {
  const DatasetEntry& e = entries_.at(index);
  Image image;
  Grid<std::uint8_t> gray;
  try {
    image = to_image(read_png_rgb(e.image_path));
    gray = read_png_gray(e.mask_path);
  } catch (const std::exception& ex) {
    throw DatasetError(e.id, ex.what());
  }
  if (gray.width() != image.width() || gray.height() != image.height()) {
    throw DatasetError(e.id, "mask is " + std::to_string(gray.width()) + "x" + std::to_string(gray.height()) +
                                 " but image is " + std::to_string(image.width()) + "x" +
                                 std::to_string(image.height()));
  }
  BinaryMask mask(gray.width(), gray.height());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    mask[i] = gray[i] >= 128 ? 1 : 0;
  }
  return Sample{e.id, std::move(image), std::move(mask)};
}

LoadedDataset load_all(const Dataset& dataset) {
  LoadedDataset out;
  for (std::size_t i = 0; i < dataset.entries().size(); ++i) {
    try {
      out.samples.push_back(dataset.load_entry(i));
    } catch (const DatasetError& e) {
      out.errors.push_back(e);
    }
  }
  return out;
}

}  // namespace clickstorm
