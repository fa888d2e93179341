#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include <wfchain/chain/block.hpp>

namespace wfchain::chain {

/// Append-only file of canonical-JSON blocks, one per line.
class BlockLog {
public:
    explicit BlockLog(std::filesystem::path path);

    void append(const Block& block);
    const std::filesystem::path& path() const { return path_; }

    /// Blocks in file order. A torn final line (crash mid-write) is ignored;
    /// any other malformed line throws FormatError.
    static std::vector<Block> load(const std::filesystem::path& path);

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

} // namespace wfchain::chain
