// SPDX-License-Identifier: Apache-2.0
#include "boat/common.hpp"

#include <cstdio>
#include <fstream>

namespace boat {

void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw BoatError("cannot open for writing: " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw BoatError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw BoatError("rename failed: " + tmp + " -> " + path);
}

}  // namespace boat
