#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <wfchain/core/canonical.hpp>

namespace wfchain::petri {

class ValueError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class VarType { Integer, Decimal, String, Boolean };

std::string_view to_string(VarType type);
/// Throws ValueError for unknown type names.
VarType var_type_from_string(std::string_view name);

/// Exact decimal number kept in normalised text form ("-12.5", "0", "3").
class Decimal {
public:
    Decimal() : text_("0") {}
    /// Throws ValueError unless text matches -?digits(.digits)?
    static Decimal parse(std::string_view text);
    static Decimal from_integer(std::int64_t value);

    const std::string& text() const { return text_; }

    friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);
    friend bool operator==(const Decimal& a, const Decimal& b) { return a.text_ == b.text_; }

private:
    std::string text_;
};

using Value = std::variant<std::int64_t, Decimal, std::string, bool>;
using Values = std::map<std::string, Value>;

VarType type_of(const Value& value);
Value default_value(VarType type);

/// Decimals travel as JSON strings, so decoding needs the declared type.
Value value_from_json(VarType type, const Json& json);
Json value_to_json(const Value& value);
Json values_to_json(const Values& values);

} // namespace wfchain::petri
