#pragma once

#include <filesystem>
#include <string>

namespace repdistill::detail {

// Both throw Error(IoFailure) naming the path.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

// RFC 4180 quoting, applied only when the field needs it.
std::string csv_field(const std::string& field);

}  // namespace repdistill::detail
