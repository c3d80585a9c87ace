#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace epiforge {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Whole file as bytes. Throws IoError naming the path.
std::string read_file(const std::filesystem::path &path);

/// Writes to a sibling temp file, then renames it over `path`, so readers
/// never observe a partial file. Creates missing parent directories.
void write_file_atomic(const std::filesystem::path &path, std::string_view content);

} // namespace epiforge
