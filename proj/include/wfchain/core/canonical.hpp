#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace wfchain {

// Objects use std::map underneath, so keys are always emitted in byte-wise order.
using Json = nlohmann::json;

class CanonicalizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic encoding shared by every node: sorted keys, no insignificant
/// whitespace, UTF-8, integers only. Floating-point numbers are rejected;
/// decimal workflow values travel as strings.
std::string canonical_bytes(const Json& value);

/// Strict parse of a JSON document. Throws CanonicalizationError on malformed
/// input or if the document contains floating-point numbers.
Json parse_canonical(std::string_view bytes);

} // namespace wfchain
