#include "driftlab/util/format.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "driftlab/errors.hpp"

namespace driftlab {

std::string fmt_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create " + path.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace driftlab
