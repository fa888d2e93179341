#include <wfchain/core/canonical.hpp>

namespace wfchain {

namespace {

void check_representable(const Json& value, std::string& path)
{
    switch (value.type()) {
    case Json::value_t::number_float:
        throw CanonicalizationError("non-integer number at " + (path.empty() ? std::string("/") : path));
    case Json::value_t::binary:
    case Json::value_t::discarded:
        throw CanonicalizationError("unsupported value at " + (path.empty() ? std::string("/") : path));
    case Json::value_t::array: {
        std::size_t i = 0;
        for (const auto& item : value) {
            const auto saved = path.size();
            path += "/" + std::to_string(i++);
            check_representable(item, path);
            path.resize(saved);
        }
        break;
    }
    case Json::value_t::object:
        for (const auto& [key, item] : value.items()) {
            const auto saved = path.size();
            path += "/" + key;
            check_representable(item, path);
            path.resize(saved);
        }
        break;
    default:
        break;
    }
}

} // namespace

std::string canonical_bytes(const Json& value)
{
    std::string path;
    check_representable(value, path);
    try {
        return value.dump(-1, ' ', false, Json::error_handler_t::strict);
    } catch (const Json::exception& e) {
        throw CanonicalizationError(e.what());
    }
}

Json parse_canonical(std::string_view bytes)
{
    Json value;
    try {
        value = Json::parse(bytes.begin(), bytes.end());
    } catch (const Json::exception& e) {
        throw CanonicalizationError(e.what());
    }
    std::string path;
    check_representable(value, path);
    return value;
}

} // namespace wfchain
