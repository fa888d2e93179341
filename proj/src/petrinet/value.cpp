#include <wfchain/petrinet/value.hpp>

#include <algorithm>

namespace wfchain::petri {

std::string_view to_string(VarType type)
{
    switch (type) {
    case VarType::Integer: return "integer";
    case VarType::Decimal: return "decimal";
    case VarType::String: return "string";
    case VarType::Boolean: return "boolean";
    }
    return "?";
}

VarType var_type_from_string(std::string_view name)
{
    if (name == "integer") return VarType::Integer;
    if (name == "decimal") return VarType::Decimal;
    if (name == "string") return VarType::String;
    if (name == "boolean") return VarType::Boolean;
    throw ValueError("unknown variable type '" + std::string(name) + "'");
}

Decimal Decimal::parse(std::string_view text)
{
    std::string_view rest = text;
    bool negative = false;
    if (!rest.empty() && rest.front() == '-') {
        negative = true;
        rest.remove_prefix(1);
    }
    const auto dot = rest.find('.');
    std::string_view whole = rest.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
    const auto all_digits = [](std::string_view s) {
        return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if (whole.empty() || !all_digits(whole) || (dot != std::string_view::npos && (frac.empty() || !all_digits(frac)))) {
        throw ValueError("malformed decimal '" + std::string(text) + "'");
    }
    while (whole.size() > 1 && whole.front() == '0') whole.remove_prefix(1);
    while (!frac.empty() && frac.back() == '0') frac.remove_suffix(1);

    Decimal d;
    d.text_.clear();
    const bool is_zero = whole == "0" && frac.empty();
    if (negative && !is_zero) d.text_ += '-';
    d.text_ += whole;
    if (!frac.empty()) {
        d.text_ += '.';
        d.text_ += frac;
    }
    return d;
}

Decimal Decimal::from_integer(std::int64_t value)
{
    return parse(std::to_string(value));
}

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b)
{
    const bool neg_a = a.text_.front() == '-';
    const bool neg_b = b.text_.front() == '-';
    if (neg_a != neg_b) {
        return neg_a ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    const auto split = [](const std::string& t) {
        std::string_view s = t;
        if (s.front() == '-') s.remove_prefix(1);
        const auto dot = s.find('.');
        return std::pair{s.substr(0, dot), dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1)};
    };
    const auto [wa, fa] = split(a.text_);
    const auto [wb, fb] = split(b.text_);
    std::strong_ordering mag = std::strong_ordering::equal;
    if (wa.size() != wb.size()) {
        mag = wa.size() <=> wb.size();
    } else if (const int c = wa.compare(wb); c != 0) {
        mag = c <=> 0;
    } else {
        const auto n = std::max(fa.size(), fb.size());
        for (std::size_t i = 0; i < n && mag == 0; ++i) {
            const char ca = i < fa.size() ? fa[i] : '0';
            const char cb = i < fb.size() ? fb[i] : '0';
            mag = ca <=> cb;
        }
    }
    if (neg_a) {
        return 0 <=> mag;
    }
    return mag;
}

VarType type_of(const Value& value)
{
    switch (value.index()) {
    case 0: return VarType::Integer;
    case 1: return VarType::Decimal;
    case 2: return VarType::String;
    default: return VarType::Boolean;
    }
}

Value default_value(VarType type)
{
    switch (type) {
    case VarType::Integer: return std::int64_t{0};
    case VarType::Decimal: return Decimal{};
    case VarType::String: return std::string{};
    case VarType::Boolean: return false;
    }
    return false;
}

Value value_from_json(VarType type, const Json& json)
{
    switch (type) {
    case VarType::Integer:
        if (json.is_number_integer()) return json.get<std::int64_t>();
        break;
    case VarType::Decimal:
        if (json.is_string()) return Decimal::parse(json.get<std::string>());
        if (json.is_number_integer()) return Decimal::from_integer(json.get<std::int64_t>());
        break;
    case VarType::String:
        if (json.is_string()) return json.get<std::string>();
        break;
    case VarType::Boolean:
        if (json.is_boolean()) return json.get<bool>();
        break;
    }
    throw ValueError("expected " + std::string(to_string(type)) + ", got " + json.dump());
}

Json value_to_json(const Value& value)
{
    return std::visit(
        [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Decimal>) {
                return v.text();
            } else {
                return v;
            }
        },
        value);
}

Json values_to_json(const Values& values)
{
    Json out = Json::object();
    for (const auto& [name, value] : values) {
        out[name] = value_to_json(value);
    }
    return out;
}

} // namespace wfchain::petri
