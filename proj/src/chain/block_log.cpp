#include <wfchain/chain/block_log.hpp>

#include <iterator>
#include <string>

namespace wfchain::chain {

BlockLog::BlockLog(std::filesystem::path path) : path_(std::move(path))
{
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) throw std::runtime_error("cannot open block log " + path_.string());
}

void BlockLog::append(const Block& block)
{
    out_ << canonical_bytes(block.to_json()) << '\n';
    out_.flush();
}

std::vector<Block> BlockLog::load(const std::filesystem::path& path)
{
    std::vector<Block> blocks;
    std::ifstream in(path, std::ios::binary);
    if (!in) return blocks;
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < content.size()) {
        const auto end = content.find('\n', start);
        lines.push_back(content.substr(start, end == std::string::npos ? std::string::npos : end - start));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    const bool torn_tail = !content.empty() && content.back() != '\n';
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        try {
            blocks.push_back(Block::from_json(parse_canonical(lines[i])));
        } catch (const std::exception& e) {
            if (torn_tail && i + 1 == lines.size()) break;
            throw FormatError("block log line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return blocks;
}

} // namespace wfchain::chain
