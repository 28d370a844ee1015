#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace boolmin {

/// Binary connectives. Negation is structural (a unary node), not a member.
enum class Connective { And, Or, Implies };

inline const char* connective_symbol(Connective c) {
    switch (c) {
        case Connective::And: return "&";
        case Connective::Or: return "|";
        case Connective::Implies: return "->";
    }
    return "?";
}

inline const char* connective_name(Connective c) {
    switch (c) {
        case Connective::And: return "and";
        case Connective::Or: return "or";
        case Connective::Implies: return "implies";
    }
    return "?";
}

class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& msg, std::size_t column)
        : std::runtime_error(msg), column_(column) {}

    /// 1-based column of the offending token.
    std::size_t column() const { return column_; }

private:
    std::size_t column_;
};

/// Immutable propositional formula: variables, the constant false,
/// negation, and binary connectives. Nodes are shared, so copies are cheap
/// and values can be passed across threads freely.
class Formula {
public:
    enum class Kind { Var, ConstFalse, Not, Binary };

    static Formula var(std::string name) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Var;
        n->name = std::move(name);
        n->size = 1;
        n->depth = 0;
        return Formula(std::move(n));
    }

    static Formula constant_false() {
        auto n = std::make_shared<Node>();
        n->kind = Kind::ConstFalse;
        n->size = 1;
        n->depth = 0;
        return Formula(std::move(n));
    }

    static Formula negation(Formula child) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Not;
        n->size = 1 + child.size();
        n->depth = 1 + child.depth();
        n->a = std::move(child.node_);
        return Formula(std::move(n));
    }

    static Formula binary(Connective c, Formula lhs, Formula rhs) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Binary;
        n->conn = c;
        n->size = 1 + lhs.size() + rhs.size();
        n->depth = 1 + std::max(lhs.depth(), rhs.depth());
        n->a = std::move(lhs.node_);
        n->b = std::move(rhs.node_);
        return Formula(std::move(n));
    }

    Kind kind() const { return node_->kind; }

    const std::string& var_name() const { return node_->name; }

    Connective connective() const { return node_->conn; }

    /// Child of a Not node.
    Formula operand() const { return Formula(node_->a); }

    Formula left() const { return Formula(node_->a); }
    Formula right() const { return Formula(node_->b); }

    /// Symbol count: every variable occurrence, constant, negation, and
    /// binary connective counts one; parentheses do not count.
    int size() const { return node_->size; }

    /// Leaves have depth 0; Not adds 1; a binary node adds 1 over the
    /// deeper child.
    int depth() const { return node_->depth; }

    std::set<std::string> vars() const {
        std::set<std::string> out;
        collect_vars(node_.get(), out);
        return out;
    }

    bool operator==(const Formula& other) const {
        return structurally_equal(node_.get(), other.node_.get());
    }
    bool operator!=(const Formula& other) const { return !(*this == other); }

private:
    struct Node {
        Kind kind;
        std::string name;                    // Kind::Var
        Connective conn = Connective::And;   // Kind::Binary
        std::shared_ptr<const Node> a, b;
        int size = 0;
        int depth = 0;
    };

    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    static void collect_vars(const Node* n, std::set<std::string>& out) {
        switch (n->kind) {
            case Kind::Var: out.insert(n->name); break;
            case Kind::ConstFalse: break;
            case Kind::Not: collect_vars(n->a.get(), out); break;
            case Kind::Binary:
                collect_vars(n->a.get(), out);
                collect_vars(n->b.get(), out);
                break;
        }
    }

    static bool structurally_equal(const Node* x, const Node* y) {
        if (x == y) return true;
        if (x->kind != y->kind || x->size != y->size || x->depth != y->depth)
            return false;
        switch (x->kind) {
            case Kind::Var: return x->name == y->name;
            case Kind::ConstFalse: return true;
            case Kind::Not: return structurally_equal(x->a.get(), y->a.get());
            case Kind::Binary:
                return x->conn == y->conn &&
                       structurally_equal(x->a.get(), y->a.get()) &&
                       structurally_equal(x->b.get(), y->b.get());
        }
        return false;
    }

    std::shared_ptr<const Node> node_;
};

/// Total assignment of truth values to variable names.
using Assignment = std::map<std::string, bool>;

inline bool evaluate(const Formula& f, const Assignment& assignment) {
    switch (f.kind()) {
        case Formula::Kind::Var: {
            auto it = assignment.find(f.var_name());
            if (it == assignment.end())
                throw std::out_of_range("unbound variable: " + f.var_name());
            return it->second;
        }
        case Formula::Kind::ConstFalse:
            return false;
        case Formula::Kind::Not:
            return !evaluate(f.operand(), assignment);
        case Formula::Kind::Binary: {
            bool l = evaluate(f.left(), assignment);
            bool r = evaluate(f.right(), assignment);
            switch (f.connective()) {
                case Connective::And: return l && r;
                case Connective::Or: return l || r;
                case Connective::Implies: return !l || r;
            }
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Parsing and printing
//
// Grammar (binding strength increases downward; -> is right-associative,
// & and | associate to the left):
//
//   formula := impl
//   impl    := or ("->" impl)?
//   or      := and ("|" and)*
//   and     := unary ("&" unary)*
//   unary   := "!" unary | atom
//   atom    := IDENT | "false" | "(" formula ")"
//   IDENT   := [A-Za-z_][A-Za-z0-9_]*   (excluding the keyword "false")
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
    enum class Type { Ident, False, Not, And, Or, Implies, LParen, RParen, End };
    Type type;
    std::string text;
    std::size_t column;  // 1-based
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return current_; }

    Token next() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        std::size_t col = pos_ + 1;
        if (pos_ >= text_.size()) {
            current_ = {Token::Type::End, "", col};
            return;
        }
        char c = text_[pos_];
        if (c == '!') { current_ = {Token::Type::Not, "!", col}; ++pos_; return; }
        if (c == '&') { current_ = {Token::Type::And, "&", col}; ++pos_; return; }
        if (c == '|') { current_ = {Token::Type::Or, "|", col}; ++pos_; return; }
        if (c == '(') { current_ = {Token::Type::LParen, "(", col}; ++pos_; return; }
        if (c == ')') { current_ = {Token::Type::RParen, ")", col}; ++pos_; return; }
        if (c == '-') {
            if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
                current_ = {Token::Type::Implies, "->", col};
                pos_ += 2;
                return;
            }
            throw parse_error("unknown token '-'", col);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string ident = text_.substr(start, pos_ - start);
            if (ident == "false")
                current_ = {Token::Type::False, ident, col};
            else
                current_ = {Token::Type::Ident, ident, col};
            return;
        }
        throw parse_error(std::string("unknown token '") + c + "'", col);
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    Token current_{Token::Type::End, "", 1};
};

class Parser {
public:
    explicit Parser(const std::string& text) : lexer_(text) {}

    Formula parse() {
        Formula f = parse_impl();
        const Token& t = lexer_.peek();
        if (t.type != Token::Type::End)
            throw parse_error("unexpected '" + t.text + "'", t.column);
        return f;
    }

private:
    Formula parse_impl() {
        Formula lhs = parse_or();
        if (lexer_.peek().type == Token::Type::Implies) {
            lexer_.next();
            return Formula::binary(Connective::Implies, std::move(lhs), parse_impl());
        }
        return lhs;
    }

    Formula parse_or() {
        Formula f = parse_and();
        while (lexer_.peek().type == Token::Type::Or) {
            lexer_.next();
            f = Formula::binary(Connective::Or, std::move(f), parse_and());
        }
        return f;
    }

    Formula parse_and() {
        Formula f = parse_unary();
        while (lexer_.peek().type == Token::Type::And) {
            lexer_.next();
            f = Formula::binary(Connective::And, std::move(f), parse_unary());
        }
        return f;
    }

    Formula parse_unary() {
        if (lexer_.peek().type == Token::Type::Not) {
            lexer_.next();
            return Formula::negation(parse_unary());
        }
        return parse_atom();
    }

    Formula parse_atom() {
        Token t = lexer_.next();
        switch (t.type) {
            case Token::Type::Ident: return Formula::var(t.text);
            case Token::Type::False: return Formula::constant_false();
            case Token::Type::LParen: {
                Formula f = parse_impl();
                Token close = lexer_.next();
                if (close.type != Token::Type::RParen)
                    throw parse_error("expected ')'", close.column);
                return f;
            }
            case Token::Type::End:
                throw parse_error("unexpected end of input", t.column);
            default:
                throw parse_error("unexpected '" + t.text + "'", t.column);
        }
    }

    Lexer lexer_;
};

// Binding level of a node when printed: higher binds tighter.
inline int print_level(const Formula& f) {
    switch (f.kind()) {
        case Formula::Kind::Binary:
            switch (f.connective()) {
                case Connective::Implies: return 0;
                case Connective::Or: return 1;
                case Connective::And: return 2;
            }
            return 0;
        default:
            return 3;
    }
}

inline void print_into(const Formula& f, int min_level, std::string& out) {
    bool parens = print_level(f) < min_level;
    if (parens) out += '(';
    switch (f.kind()) {
        case Formula::Kind::Var:
            out += f.var_name();
            break;
        case Formula::Kind::ConstFalse:
            out += "false";
            break;
        case Formula::Kind::Not:
            out += '!';
            print_into(f.operand(), 3, out);
            break;
        case Formula::Kind::Binary: {
            int lvl = print_level(f);
            // Left-associative chains reprint without parentheses on the
            // left; -> is right-associative, so the sides flip.
            bool right_assoc = f.connective() == Connective::Implies;
            print_into(f.left(), right_assoc ? lvl + 1 : lvl, out);
            out += ' ';
            out += connective_symbol(f.connective());
            out += ' ';
            print_into(f.right(), right_assoc ? lvl : lvl + 1, out);
            break;
        }
    }
    if (parens) out += ')';
}

}  // namespace detail

/// Parse a formula from text. Throws parse_error with a 1-based column.
inline Formula parse(const std::string& text) {
    detail::Parser p(text);
    return p.parse();
}

/// Minimal-parentheses rendering; parse(to_string(f)) == f structurally.
inline std::string to_string(const Formula& f) {
    std::string out;
    detail::print_into(f, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// Truth tables
// ---------------------------------------------------------------------------

/// Truth tables above this many variables are refused.
inline constexpr int kTruthTableVarCap = 24;

/// Bit vector of a formula's value under every assignment of an ordered
/// variable list. Assignment index i sets the first variable from the most
/// significant bit of i.
struct TruthTable {
    std::vector<std::string> variables;
    std::vector<bool> bits;

    bool operator==(const TruthTable&) const = default;
};

namespace detail {

/// Evaluate against an assignment given as index bits over `positions`.
inline bool eval_indexed(const Formula& f,
                         const std::map<std::string, int>& positions,
                         int num_vars, std::uint32_t index) {
    switch (f.kind()) {
        case Formula::Kind::Var: {
            auto it = positions.find(f.var_name());
            if (it == positions.end())
                throw std::invalid_argument("variable not in table: " + f.var_name());
            return (index >> (num_vars - 1 - it->second)) & 1u;
        }
        case Formula::Kind::ConstFalse:
            return false;
        case Formula::Kind::Not:
            return !eval_indexed(f.operand(), positions, num_vars, index);
        case Formula::Kind::Binary: {
            bool l = eval_indexed(f.left(), positions, num_vars, index);
            bool r = eval_indexed(f.right(), positions, num_vars, index);
            switch (f.connective()) {
                case Connective::And: return l && r;
                case Connective::Or: return l || r;
                case Connective::Implies: return !l || r;
            }
        }
    }
    return false;
}

}  // namespace detail

inline TruthTable truth_table(const Formula& f, const std::vector<std::string>& varlist) {
    if (varlist.size() > static_cast<std::size_t>(kTruthTableVarCap))
        throw std::length_error("truth table over " + std::to_string(varlist.size()) +
                                " variables exceeds the cap of " +
                                std::to_string(kTruthTableVarCap));
    std::map<std::string, int> positions;
    for (std::size_t i = 0; i < varlist.size(); ++i)
        positions.emplace(varlist[i], static_cast<int>(i));
    for (const auto& v : f.vars())
        if (!positions.count(v))
            throw std::invalid_argument("variable not in table: " + v);

    int n = static_cast<int>(varlist.size());
    TruthTable table;
    table.variables = varlist;
    table.bits.resize(std::size_t{1} << n);
    for (std::uint32_t i = 0; i < table.bits.size(); ++i)
        table.bits[i] = detail::eval_indexed(f, positions, n, i);
    return table;
}

/// Truth-table equivalence over the union of both variable sets
/// (lexicographic order).
inline bool equivalent_tt(const Formula& a, const Formula& b) {
    std::set<std::string> names = a.vars();
    auto bv = b.vars();
    names.insert(bv.begin(), bv.end());
    std::vector<std::string> varlist(names.begin(), names.end());
    return truth_table(a, varlist).bits == truth_table(b, varlist).bits;
}

}  // namespace boolmin
