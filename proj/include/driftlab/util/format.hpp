#pragma once

#include <filesystem>
#include <string>

namespace driftlab {

// Fixed-format double rendering ("%.17g"), so logs and reports are
// byte-identical across reruns with the same inputs.
std::string fmt_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace driftlab
