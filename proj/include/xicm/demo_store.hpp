#pragma once

#include <filesystem>

#include "xicm/types.hpp"

namespace xicm {

/// Loads `manifest.json` plus one `<task>.jsonl` per listed task. Every
/// invariant is checked; the demonstrations come back sorted by id so the
/// result does not depend on file enumeration order.
///
/// Throws IoError when the manifest or an episode file is missing and
/// SchemaError (file, line, field) on any schema or invariant violation.
Dataset load_dataset(const std::filesystem::path& root);

/// Writes the dataset in the layout read by load_dataset. Throws IoError if
/// the directory or a file cannot be written.
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

/// Checks every dataset invariant in memory. Throws SchemaError with
/// `<memory>` as the file name.
void validate_dataset(const Dataset& dataset);

/// SHA-256 over a canonical JSON rendering of the whole dataset.
std::string dataset_digest(const Dataset& dataset);

}  // namespace xicm
