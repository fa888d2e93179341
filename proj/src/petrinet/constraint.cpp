#include <wfchain/petrinet/constraint.hpp>

#include <cctype>
#include <optional>
#include <vector>

namespace wfchain::petri {

enum class Op { Or, And, Not, Eq, Ne, Lt, Le, Gt, Ge };

struct ConstraintNode {
    enum class Kind { Literal, Identifier, Unary, Binary } kind;
    Op op{};
    Value literal{};
    std::string name;
    std::shared_ptr<const ConstraintNode> lhs;
    std::shared_ptr<const ConstraintNode> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const ConstraintNode>;

struct Token {
    enum class Kind { Ident, Integer, Decimal, String, Op, LParen, RParen, End } kind;
    std::string text;
};

std::vector<Token> tokenize(std::string_view src)
{
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '(') {
            out.push_back({Token::Kind::LParen, "("});
            ++i;
        } else if (c == ')') {
            out.push_back({Token::Kind::RParen, ")"});
            ++i;
        } else if (c == '"') {
            std::string text;
            ++i;
            bool closed = false;
            while (i < src.size()) {
                if (src[i] == '\\' && i + 1 < src.size()) {
                    text += src[i + 1];
                    i += 2;
                } else if (src[i] == '"') {
                    closed = true;
                    ++i;
                    break;
                } else {
                    text += src[i++];
                }
            }
            if (!closed) throw ConstraintError("unterminated string literal");
            out.push_back({Token::Kind::String, std::move(text)});
        } else if (std::isdigit(static_cast<unsigned char>(c))
                   || (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i + 1;
            bool dot = false;
            while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || (src[j] == '.' && !dot))) {
                dot = dot || src[j] == '.';
                ++j;
            }
            out.push_back({dot ? Token::Kind::Decimal : Token::Kind::Integer, std::string(src.substr(i, j - i))});
            i = j;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            out.push_back({Token::Kind::Ident, std::string(src.substr(i, j - i))});
            i = j;
        } else {
            static constexpr std::string_view kOps[] = {"==", "!=", "<=", ">=", "<", ">"};
            bool matched = false;
            for (auto op : kOps) {
                if (src.substr(i, op.size()) == op) {
                    out.push_back({Token::Kind::Op, std::string(op)});
                    i += op.size();
                    matched = true;
                    break;
                }
            }
            if (!matched) throw ConstraintError(std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back({Token::Kind::End, ""});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    NodePtr parse()
    {
        auto node = parse_or();
        if (peek().kind != Token::Kind::End) {
            throw ConstraintError("unexpected token '" + peek().text + "'");
        }
        return node;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& take() { return tokens_[pos_++]; }
    bool keyword(std::string_view word) const { return peek().kind == Token::Kind::Ident && peek().text == word; }

    static NodePtr binary(Op op, NodePtr lhs, NodePtr rhs)
    {
        auto n = std::make_shared<ConstraintNode>();
        n->kind = ConstraintNode::Kind::Binary;
        n->op = op;
        n->lhs = std::move(lhs);
        n->rhs = std::move(rhs);
        return n;
    }

    NodePtr parse_or()
    {
        auto lhs = parse_and();
        while (keyword("or")) {
            take();
            lhs = binary(Op::Or, lhs, parse_and());
        }
        return lhs;
    }

    NodePtr parse_and()
    {
        auto lhs = parse_not();
        while (keyword("and")) {
            take();
            lhs = binary(Op::And, lhs, parse_not());
        }
        return lhs;
    }

    NodePtr parse_not()
    {
        if (keyword("not")) {
            take();
            auto n = std::make_shared<ConstraintNode>();
            n->kind = ConstraintNode::Kind::Unary;
            n->op = Op::Not;
            n->lhs = parse_not();
            return n;
        }
        return parse_comparison();
    }

    NodePtr parse_comparison()
    {
        auto lhs = parse_primary();
        if (peek().kind == Token::Kind::Op) {
            const auto text = take().text;
            Op op = Op::Eq;
            if (text == "!=") op = Op::Ne;
            else if (text == "<") op = Op::Lt;
            else if (text == "<=") op = Op::Le;
            else if (text == ">") op = Op::Gt;
            else if (text == ">=") op = Op::Ge;
            lhs = binary(op, lhs, parse_primary());
        }
        return lhs;
    }

    NodePtr parse_primary()
    {
        const Token tok = take();
        auto n = std::make_shared<ConstraintNode>();
        switch (tok.kind) {
        case Token::Kind::LParen: {
            auto inner = parse_or();
            if (take().kind != Token::Kind::RParen) throw ConstraintError("expected ')'");
            return inner;
        }
        case Token::Kind::Integer:
            n->kind = ConstraintNode::Kind::Literal;
            try {
                n->literal = std::int64_t{std::stoll(tok.text)};
            } catch (const std::exception&) {
                throw ConstraintError("integer literal out of range: " + tok.text);
            }
            return n;
        case Token::Kind::Decimal:
            n->kind = ConstraintNode::Kind::Literal;
            try {
                n->literal = Decimal::parse(tok.text);
            } catch (const ValueError& e) {
                throw ConstraintError(e.what());
            }
            return n;
        case Token::Kind::String:
            n->kind = ConstraintNode::Kind::Literal;
            n->literal = tok.text;
            return n;
        case Token::Kind::Ident:
            if (tok.text == "true" || tok.text == "false") {
                n->kind = ConstraintNode::Kind::Literal;
                n->literal = tok.text == "true";
                return n;
            }
            if (tok.text == "and" || tok.text == "or" || tok.text == "not") {
                throw ConstraintError("unexpected keyword '" + tok.text + "'");
            }
            n->kind = ConstraintNode::Kind::Identifier;
            n->name = tok.text;
            return n;
        default:
            throw ConstraintError(tok.kind == Token::Kind::End ? "unexpected end of expression"
                                                                : "unexpected token '" + tok.text + "'");
        }
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

bool numeric(VarType t)
{
    return t == VarType::Integer || t == VarType::Decimal;
}

VarType check_types(const ConstraintNode& n, const std::map<std::string, VarType>& declared)
{
    switch (n.kind) {
    case ConstraintNode::Kind::Literal:
        return type_of(n.literal);
    case ConstraintNode::Kind::Identifier: {
        const auto it = declared.find(n.name);
        if (it == declared.end()) throw ConstraintError("undeclared variable '" + n.name + "'");
        return it->second;
    }
    case ConstraintNode::Kind::Unary:
        if (check_types(*n.lhs, declared) != VarType::Boolean) throw ConstraintError("'not' needs a boolean operand");
        return VarType::Boolean;
    case ConstraintNode::Kind::Binary: {
        const auto l = check_types(*n.lhs, declared);
        const auto r = check_types(*n.rhs, declared);
        if (n.op == Op::And || n.op == Op::Or) {
            if (l != VarType::Boolean || r != VarType::Boolean) {
                throw ConstraintError("'and'/'or' need boolean operands");
            }
            return VarType::Boolean;
        }
        if (!(l == r || (numeric(l) && numeric(r)))) {
            throw ConstraintError("cannot compare " + std::string(to_string(l)) + " with " + std::string(to_string(r)));
        }
        if (l == VarType::Boolean && n.op != Op::Eq && n.op != Op::Ne) {
            throw ConstraintError("booleans support only == and !=");
        }
        return VarType::Boolean;
    }
    }
    return VarType::Boolean;
}

Value eval(const ConstraintNode& n, const Values& values);

std::strong_ordering compare_values(const Value& l, const Value& r)
{
    const auto lt = type_of(l);
    const auto rt = type_of(r);
    if (numeric(lt) && numeric(rt)) {
        if (lt == VarType::Integer && rt == VarType::Integer) {
            return std::get<std::int64_t>(l) <=> std::get<std::int64_t>(r);
        }
        const auto as_decimal = [](const Value& v) {
            return v.index() == 0 ? Decimal::from_integer(std::get<std::int64_t>(v)) : std::get<Decimal>(v);
        };
        return as_decimal(l) <=> as_decimal(r);
    }
    if (lt != rt) {
        throw ConstraintError("cannot compare " + std::string(to_string(lt)) + " with " + std::string(to_string(rt)));
    }
    if (lt == VarType::String) {
        const int c = std::get<std::string>(l).compare(std::get<std::string>(r));
        return c <=> 0;
    }
    return std::get<bool>(l) == std::get<bool>(r) ? std::strong_ordering::equal : std::strong_ordering::less;
}

bool as_bool(const Value& v)
{
    if (const auto* b = std::get_if<bool>(&v)) return *b;
    throw ConstraintError("expected a boolean operand");
}

Value eval(const ConstraintNode& n, const Values& values)
{
    switch (n.kind) {
    case ConstraintNode::Kind::Literal:
        return n.literal;
    case ConstraintNode::Kind::Identifier: {
        const auto it = values.find(n.name);
        if (it == values.end()) throw ConstraintError("undeclared variable '" + n.name + "'");
        return it->second;
    }
    case ConstraintNode::Kind::Unary:
        return !as_bool(eval(*n.lhs, values));
    case ConstraintNode::Kind::Binary:
        break;
    }
    if (n.op == Op::And) return as_bool(eval(*n.lhs, values)) && as_bool(eval(*n.rhs, values));
    if (n.op == Op::Or) return as_bool(eval(*n.lhs, values)) || as_bool(eval(*n.rhs, values));

    const auto l = eval(*n.lhs, values);
    const auto r = eval(*n.rhs, values);
    if (type_of(l) == VarType::Boolean && type_of(r) == VarType::Boolean && n.op != Op::Eq && n.op != Op::Ne) {
        throw ConstraintError("booleans support only == and !=");
    }
    const auto c = compare_values(l, r);
    switch (n.op) {
    case Op::Eq: return c == 0;
    case Op::Ne: return c != 0;
    case Op::Lt: return c < 0;
    case Op::Le: return c <= 0;
    case Op::Gt: return c > 0;
    case Op::Ge: return c >= 0;
    default: break;
    }
    throw ConstraintError("bad operator");
}

void collect(const ConstraintNode& n, std::set<std::string>& out)
{
    if (n.kind == ConstraintNode::Kind::Identifier) out.insert(n.name);
    if (n.lhs) collect(*n.lhs, out);
    if (n.rhs) collect(*n.rhs, out);
}

} // namespace

Constraint Constraint::parse(std::string_view source)
{
    Constraint c;
    c.source_ = std::string(source);
    c.root_ = Parser(tokenize(source)).parse();
    return c;
}

std::set<std::string> Constraint::identifiers() const
{
    std::set<std::string> out;
    collect(*root_, out);
    return out;
}

void Constraint::typecheck(const std::map<std::string, VarType>& declared) const
{
    if (check_types(*root_, declared) != VarType::Boolean) {
        throw ConstraintError("constraint '" + source_ + "' is not boolean");
    }
}

bool Constraint::evaluate(const Values& values) const
{
    return as_bool(eval(*root_, values));
}

} // namespace wfchain::petri
