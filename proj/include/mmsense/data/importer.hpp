#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mmsense/core/error.hpp"
#include "mmsense/data/manifest.hpp"

namespace mmsense::data {

/// Converts an external capture layout into the native sample directory.
class DatasetConverter {
 public:
  virtual ~DatasetConverter() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual bool recognizes(const std::filesystem::path& source) const = 0;
  /// Writes samples and a manifest under `out` and returns the manifest.
  virtual Manifest convert(const std::filesystem::path& source, const std::filesystem::path& out) const = 0;
};

inline std::vector<std::unique_ptr<DatasetConverter>>& converters() {
  static std::vector<std::unique_ptr<DatasetConverter>> registry;
  return registry;
}

/// Runs the first registered converter that recognizes `source`.
inline Manifest import_dataset(const std::filesystem::path& source, const std::filesystem::path& out) {
  if (!std::filesystem::exists(source)) throw DataError("import source " + source.string() + " does not exist");
  for (const auto& c : converters())
    if (c->recognizes(source)) return c->convert(source, out);
  throw DataError("no converter recognizes " + source.string() + "; register one for the capture layout");
}

}  // namespace mmsense::data
