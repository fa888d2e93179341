#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include <wfchain/petrinet/value.hpp>

namespace wfchain::petri {

class ConstraintError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConstraintNode;

/// Boolean expression over case variables and literals.
///
/// Grammar: `or` < `and` < `not` < comparison (== != < <= > >=) < primary,
/// where a primary is a parenthesised expression, an identifier, an integer
/// or decimal literal, a double-quoted string, or `true` / `false`.
/// Integers and decimals compare numerically with each other; strings order
/// byte-wise; booleans support equality only.
class Constraint {
public:
    /// Throws ConstraintError on syntax errors.
    static Constraint parse(std::string_view source);

    const std::string& source() const { return source_; }
    std::set<std::string> identifiers() const;

    /// Static check against declared variable types. Throws ConstraintError.
    void typecheck(const std::map<std::string, VarType>& declared) const;

    /// Throws ConstraintError on undeclared variables or type mismatches.
    bool evaluate(const Values& values) const;

private:
    std::string source_;
    std::shared_ptr<const ConstraintNode> root_;
};

/// Free-function form; any ConstraintError propagates to the caller.
inline bool evaluate(const Constraint& constraint, const Values& values)
{
    return constraint.evaluate(values);
}

} // namespace wfchain::petri
