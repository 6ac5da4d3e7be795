#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "ssanova/errors.hpp"

namespace ssanova {

/// Write-then-rename, so readers never observe a partially written file.
/// Missing parent directories are created.
inline void atomic_write_text(const std::string& path, const std::string& content) {
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot write to " + tmp);
        out << content;
        if (!out)
            throw DataError("short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

} // namespace ssanova
