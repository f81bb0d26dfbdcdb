#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>

#include "witforge/metriclang.hpp"

namespace witforge::metriclang {

const char* to_string(ValueType t) {
    switch (t) {
        case ValueType::boolean: return "bool";
        case ValueType::number: return "number";
        case ValueType::vec3: return "vec3";
        case ValueType::object_name: return "object";
        case ValueType::polygon: return "polygon";
    }
    return "?";
}

namespace {

struct BuiltinSig {
    std::vector<ValueType> params;
    ValueType result;
};

const std::map<std::string, BuiltinSig>& builtin_table() {
    static const std::map<std::string, BuiltinSig> table{
        {"pos", {{ValueType::object_name}, ValueType::vec3}},
        {"vel_norm", {{ValueType::object_name}, ValueType::number}},
        {"hull", {{ValueType::object_name}, ValueType::polygon}},
        {"overlap_frac", {{ValueType::object_name, ValueType::object_name}, ValueType::number}},
        {"on_table", {{ValueType::object_name}, ValueType::boolean}},
        {"min_z", {{ValueType::object_name}, ValueType::number}},
        {"max_z", {{ValueType::object_name}, ValueType::number}},
        {"dist", {{ValueType::object_name, ValueType::object_name}, ValueType::number}},
        {"contained_frac",
         {{ValueType::object_name, ValueType::object_name, ValueType::number, ValueType::number},
          ValueType::number}},
        {"still", {{ValueType::object_name, ValueType::number}, ValueType::boolean}},
        {"x_of", {{ValueType::vec3}, ValueType::number}},
        {"y_of", {{ValueType::vec3}, ValueType::number}},
        {"z_of", {{ValueType::vec3}, ValueType::number}},
    };
    return table;
}

enum class Tok {
    kw_metric, kw_success, kw_milestone, kw_weight, kw_and, kw_or, kw_not, kw_true, kw_false,
    ident, number, string,
    lbrace, rbrace, lparen, rparen, colon, semicolon, comma,
    lt, le, gt, ge, eq, ne, plus, minus, star, slash,
    end
};

struct Token {
    Tok tok = Tok::end;
    std::string text;
    double number = 0.0;
    int line = 1;
    int column = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_ws();
        Token t;
        t.line = line_;
        t.column = column_;
        if (pos_ >= src_.size()) {
            t.tok = Tok::end;
            return t;
        }
        const char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string word;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
                word.push_back(src_[pos_]);
                advance();
            }
            t.text = word;
            if (word == "metric") t.tok = Tok::kw_metric;
            else if (word == "success") t.tok = Tok::kw_success;
            else if (word == "milestone") t.tok = Tok::kw_milestone;
            else if (word == "weight") t.tok = Tok::kw_weight;
            else if (word == "and") t.tok = Tok::kw_and;
            else if (word == "or") t.tok = Tok::kw_or;
            else if (word == "not") t.tok = Tok::kw_not;
            else if (word == "true") t.tok = Tok::kw_true;
            else if (word == "false") t.tok = Tok::kw_false;
            else t.tok = Tok::ident;
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            std::string num;
            while (pos_ < src_.size() &&
                   (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' ||
                    src_[pos_] == 'e' || src_[pos_] == 'E' ||
                    ((src_[pos_] == '+' || src_[pos_] == '-') && !num.empty() &&
                     (num.back() == 'e' || num.back() == 'E')))) {
                num.push_back(src_[pos_]);
                advance();
            }
            char* end = nullptr;
            t.number = std::strtod(num.c_str(), &end);
            if (end == nullptr || *end != '\0') {
                throw SyntaxError(t.line, t.column, "malformed number \"" + num + "\"");
            }
            t.tok = Tok::number;
            t.text = num;
            return t;
        }
        if (c == '"') {
            advance();
            std::string s;
            while (pos_ < src_.size() && src_[pos_] != '"') {
                if (src_[pos_] == '\\' && pos_ + 1 < src_.size()) advance();
                if (src_[pos_] == '\n') throw SyntaxError(t.line, t.column, "unterminated string");
                s.push_back(src_[pos_]);
                advance();
            }
            if (pos_ >= src_.size()) throw SyntaxError(t.line, t.column, "unterminated string");
            advance();  // closing quote
            t.tok = Tok::string;
            t.text = s;
            return t;
        }
        auto two = [&](char second, Tok yes, Tok no) {
            advance();
            if (pos_ < src_.size() && src_[pos_] == second) {
                advance();
                t.tok = yes;
            } else {
                t.tok = no;
            }
        };
        switch (c) {
            case '{': advance(); t.tok = Tok::lbrace; return t;
            case '}': advance(); t.tok = Tok::rbrace; return t;
            case '(': advance(); t.tok = Tok::lparen; return t;
            case ')': advance(); t.tok = Tok::rparen; return t;
            case ':': advance(); t.tok = Tok::colon; return t;
            case ';': advance(); t.tok = Tok::semicolon; return t;
            case ',': advance(); t.tok = Tok::comma; return t;
            case '+': advance(); t.tok = Tok::plus; return t;
            case '-': advance(); t.tok = Tok::minus; return t;
            case '*': advance(); t.tok = Tok::star; return t;
            case '/': advance(); t.tok = Tok::slash; return t;
            case '<': two('=', Tok::le, Tok::lt); return t;
            case '>': two('=', Tok::ge, Tok::gt); return t;
            case '=':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '=') { advance(); t.tok = Tok::eq; return t; }
                throw SyntaxError(t.line, t.column, "expected == (single = is not assignment)");
            case '!':
                advance();
                if (pos_ < src_.size() && src_[pos_] == '=') { advance(); t.tok = Tok::ne; return t; }
                throw SyntaxError(t.line, t.column, "expected !=");
            default:
                throw SyntaxError(t.line, t.column, std::string("unexpected character '") + c + "'");
        }
    }

private:
    void skip_ws() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '#') {  // comment to end of line
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lexer_(src) { shift(); }

    MetricProgram parse_program() {
        expect(Tok::kw_metric, "expected \"metric\"");
        expect(Tok::lbrace, "expected '{'");
        expect(Tok::kw_success, "expected \"success\"");
        expect(Tok::colon, "expected ':'");
        MetricProgram program;
        program.success = parse_expr();
        expect(Tok::semicolon, "expected ';'");
        while (cur_.tok == Tok::kw_milestone) {
            shift();
            if (cur_.tok != Tok::ident) error("expected milestone name");
            Milestone m;
            m.name = cur_.text;
            shift();
            expect(Tok::kw_weight, "expected \"weight\"");
            if (cur_.tok != Tok::number) error("expected milestone weight");
            m.weight = cur_.number;
            if (!(m.weight > 0)) error("milestone weight must be > 0");
            shift();
            expect(Tok::colon, "expected ':'");
            m.expr = parse_expr();
            expect(Tok::semicolon, "expected ';'");
            program.milestones.push_back(std::move(m));
        }
        expect(Tok::rbrace, "expected '}'");
        if (cur_.tok != Tok::end) error("trailing input after program");
        return program;
    }

private:
    [[noreturn]] void error(const std::string& what) const {
        throw SyntaxError(cur_.line, cur_.column, what);
    }

    void shift() { cur_ = lexer_.next(); }

    void expect(Tok tok, const std::string& what) {
        if (cur_.tok != tok) error(what);
        shift();
    }

    ExprPtr make(Expr e) { return std::make_shared<Expr>(std::move(e)); }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (cur_.tok == Tok::kw_or) {
            shift();
            Expr e;
            e.kind = Expr::Kind::binary;
            e.op = Expr::Op::logical_or;
            e.lhs = lhs;
            e.rhs = parse_and();
            lhs = make(std::move(e));
        }
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_not();
        while (cur_.tok == Tok::kw_and) {
            shift();
            Expr e;
            e.kind = Expr::Kind::binary;
            e.op = Expr::Op::logical_and;
            e.lhs = lhs;
            e.rhs = parse_not();
            lhs = make(std::move(e));
        }
        return lhs;
    }

    ExprPtr parse_not() {
        if (cur_.tok == Tok::kw_not) {
            shift();
            Expr e;
            e.kind = Expr::Kind::unary;
            e.op = Expr::Op::logical_not;
            e.lhs = parse_not();
            return make(std::move(e));
        }
        return parse_comparison();
    }

    ExprPtr parse_comparison() {
        ExprPtr lhs = parse_additive();
        Expr::Op op;
        switch (cur_.tok) {
            case Tok::lt: op = Expr::Op::lt; break;
            case Tok::le: op = Expr::Op::le; break;
            case Tok::gt: op = Expr::Op::gt; break;
            case Tok::ge: op = Expr::Op::ge; break;
            case Tok::eq: op = Expr::Op::eq; break;
            case Tok::ne: op = Expr::Op::ne; break;
            default: return lhs;
        }
        shift();
        Expr e;
        e.kind = Expr::Kind::binary;
        e.op = op;
        e.lhs = lhs;
        e.rhs = parse_additive();
        return make(std::move(e));
    }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        while (cur_.tok == Tok::plus || cur_.tok == Tok::minus) {
            const Expr::Op op = cur_.tok == Tok::plus ? Expr::Op::add : Expr::Op::sub;
            shift();
            Expr e;
            e.kind = Expr::Kind::binary;
            e.op = op;
            e.lhs = lhs;
            e.rhs = parse_multiplicative();
            lhs = make(std::move(e));
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_unary();
        while (cur_.tok == Tok::star || cur_.tok == Tok::slash) {
            const Expr::Op op = cur_.tok == Tok::star ? Expr::Op::mul : Expr::Op::div;
            shift();
            Expr e;
            e.kind = Expr::Kind::binary;
            e.op = op;
            e.lhs = lhs;
            e.rhs = parse_unary();
            lhs = make(std::move(e));
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (cur_.tok == Tok::minus) {
            shift();
            Expr e;
            e.kind = Expr::Kind::unary;
            e.op = Expr::Op::neg;
            e.lhs = parse_unary();
            return make(std::move(e));
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        Expr e;
        switch (cur_.tok) {
            case Tok::number:
                e.kind = Expr::Kind::number_lit;
                e.number_value = cur_.number;
                shift();
                return make(std::move(e));
            case Tok::string:
                e.kind = Expr::Kind::string_lit;
                e.string_value = cur_.text;
                shift();
                return make(std::move(e));
            case Tok::kw_true:
            case Tok::kw_false:
                e.kind = Expr::Kind::bool_lit;
                e.bool_value = cur_.tok == Tok::kw_true;
                shift();
                return make(std::move(e));
            case Tok::lparen: {
                shift();
                ExprPtr inner = parse_expr();
                expect(Tok::rparen, "expected ')'");
                return inner;
            }
            case Tok::ident: {
                e.kind = Expr::Kind::call;
                e.callee = cur_.text;
                shift();
                expect(Tok::lparen, "expected '(' after builtin name");
                if (cur_.tok != Tok::rparen) {
                    e.args.push_back(parse_expr());
                    while (cur_.tok == Tok::comma) {
                        shift();
                        e.args.push_back(parse_expr());
                    }
                }
                expect(Tok::rparen, "expected ')'");
                return make(std::move(e));
            }
            default:
                error("expected an expression");
        }
    }

    Lexer lexer_;
    Token cur_;
};

ValueType check(const ExprPtr& node);

ValueType check_call(const Expr& e) {
    const auto it = builtin_table().find(e.callee);
    if (it == builtin_table().end()) throw UnknownBuiltin(e.callee);
    const auto& sig = it->second;
    if (e.args.size() != sig.params.size()) {
        throw TypeError(e.callee + " expects " + std::to_string(sig.params.size()) +
                        " arguments, got " + std::to_string(e.args.size()));
    }
    for (std::size_t i = 0; i < e.args.size(); ++i) {
        const ValueType got = check(e.args[i]);
        if (got != sig.params[i]) {
            throw TypeError(e.callee + " argument " + std::to_string(i + 1) + ": expected " +
                            to_string(sig.params[i]) + ", got " + to_string(got));
        }
    }
    return sig.result;
}

ValueType check(const ExprPtr& node) {
    auto& e = const_cast<Expr&>(*node);
    switch (e.kind) {
        case Expr::Kind::bool_lit: e.type = ValueType::boolean; break;
        case Expr::Kind::number_lit: e.type = ValueType::number; break;
        case Expr::Kind::string_lit: e.type = ValueType::object_name; break;
        case Expr::Kind::unary: {
            const ValueType inner = check(e.lhs);
            if (e.op == Expr::Op::logical_not) {
                if (inner != ValueType::boolean) throw TypeError("not: expected bool");
                e.type = ValueType::boolean;
            } else {
                if (inner != ValueType::number) throw TypeError("unary minus: expected number");
                e.type = ValueType::number;
            }
            break;
        }
        case Expr::Kind::binary: {
            const ValueType l = check(e.lhs);
            const ValueType r = check(e.rhs);
            switch (e.op) {
                case Expr::Op::logical_and:
                case Expr::Op::logical_or:
                    if (l != ValueType::boolean || r != ValueType::boolean) {
                        throw TypeError("and/or: expected bool operands");
                    }
                    e.type = ValueType::boolean;
                    break;
                case Expr::Op::eq:
                case Expr::Op::ne:
                    if (l != r || (l != ValueType::number && l != ValueType::boolean)) {
                        throw TypeError(std::string("==/!=: cannot compare ") + to_string(l) +
                                        " with " + to_string(r));
                    }
                    e.type = ValueType::boolean;
                    break;
                case Expr::Op::lt:
                case Expr::Op::le:
                case Expr::Op::gt:
                case Expr::Op::ge:
                    if (l != ValueType::number || r != ValueType::number) {
                        throw TypeError(std::string("comparison: cannot compare ") + to_string(l) +
                                        " with " + to_string(r));
                    }
                    e.type = ValueType::boolean;
                    break;
                default:
                    if (l != ValueType::number || r != ValueType::number) {
                        throw TypeError("arithmetic: expected number operands");
                    }
                    e.type = ValueType::number;
                    break;
            }
            break;
        }
        case Expr::Kind::call:
            e.type = check_call(e);
            break;
    }
    return e.type;
}

void collect_objects(const ExprPtr& node, std::vector<std::string>& out,
                     std::set<std::string>& seen) {
    const Expr& e = *node;
    if (e.kind == Expr::Kind::call) {
        const auto it = builtin_table().find(e.callee);
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            const Expr& arg = *e.args[i];
            const bool wants_object = it != builtin_table().end() &&
                                      i < it->second.params.size() &&
                                      it->second.params[i] == ValueType::object_name;
            if (wants_object && arg.kind == Expr::Kind::string_lit) {
                if (seen.insert(arg.string_value).second) out.push_back(arg.string_value);
            }
            collect_objects(e.args[i], out, seen);
        }
    }
    if (e.lhs) collect_objects(e.lhs, out, seen);
    if (e.rhs) collect_objects(e.rhs, out, seen);
}

}  // namespace

MetricProgram parse_metric(const std::string& source) {
    Parser parser(source);
    MetricProgram program = parser.parse_program();

    if (check(program.success) != ValueType::boolean) {
        throw TypeError("success expression must be bool");
    }
    for (const auto& m : program.milestones) {
        if (check(m.expr) != ValueType::boolean) {
            throw TypeError("milestone \"" + m.name + "\" must be bool");
        }
    }

    std::set<std::string> seen;
    collect_objects(program.success, program.referenced_objects, seen);
    for (const auto& m : program.milestones) {
        collect_objects(m.expr, program.referenced_objects, seen);
    }
    return program;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (!a || !b) return a == b;
    const Expr& x = *a;
    const Expr& y = *b;
    if (x.kind != y.kind) return false;
    switch (x.kind) {
        case Expr::Kind::bool_lit: return x.bool_value == y.bool_value;
        case Expr::Kind::number_lit: return x.number_value == y.number_value;
        case Expr::Kind::string_lit: return x.string_value == y.string_value;
        case Expr::Kind::unary: return x.op == y.op && expr_equal(x.lhs, y.lhs);
        case Expr::Kind::binary:
            return x.op == y.op && expr_equal(x.lhs, y.lhs) && expr_equal(x.rhs, y.rhs);
        case Expr::Kind::call: {
            if (x.callee != y.callee || x.args.size() != y.args.size()) return false;
            for (std::size_t i = 0; i < x.args.size(); ++i) {
                if (!expr_equal(x.args[i], y.args[i])) return false;
            }
            return true;
        }
    }
    return false;
}

bool operator==(const MetricProgram& a, const MetricProgram& b) {
    if (!expr_equal(a.success, b.success)) return false;
    if (a.milestones.size() != b.milestones.size()) return false;
    for (std::size_t i = 0; i < a.milestones.size(); ++i) {
        if (a.milestones[i].name != b.milestones[i].name) return false;
        if (a.milestones[i].weight != b.milestones[i].weight) return false;
        if (!expr_equal(a.milestones[i].expr, b.milestones[i].expr)) return false;
    }
    return true;
}

namespace {

std::string number_text(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

int precedence(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::binary:
            switch (e.op) {
                case Expr::Op::logical_or: return 1;
                case Expr::Op::logical_and: return 2;
                case Expr::Op::lt:
                case Expr::Op::le:
                case Expr::Op::gt:
                case Expr::Op::ge:
                case Expr::Op::eq:
                case Expr::Op::ne: return 4;
                case Expr::Op::add:
                case Expr::Op::sub: return 5;
                default: return 6;
            }
        case Expr::Kind::unary: return e.op == Expr::Op::logical_not ? 3 : 7;
        default: return 8;
    }
}

const char* op_text(Expr::Op op) {
    switch (op) {
        case Expr::Op::logical_or: return "or";
        case Expr::Op::logical_and: return "and";
        case Expr::Op::logical_not: return "not";
        case Expr::Op::lt: return "<";
        case Expr::Op::le: return "<=";
        case Expr::Op::gt: return ">";
        case Expr::Op::ge: return ">=";
        case Expr::Op::eq: return "==";
        case Expr::Op::ne: return "!=";
        case Expr::Op::add: return "+";
        case Expr::Op::sub: return "-";
        case Expr::Op::mul: return "*";
        case Expr::Op::div: return "/";
        case Expr::Op::neg: return "-";
    }
    return "?";
}

void print_expr(const ExprPtr& node, std::string& out, int parent_prec, bool is_right) {
    const Expr& e = *node;
    const int prec = precedence(e);
    const bool parens = prec < parent_prec || (prec == parent_prec && is_right);
    if (parens) out.push_back('(');
    switch (e.kind) {
        case Expr::Kind::bool_lit:
            out += e.bool_value ? "true" : "false";
            break;
        case Expr::Kind::number_lit:
            out += number_text(e.number_value);
            break;
        case Expr::Kind::string_lit:
            out.push_back('"');
            out += e.string_value;
            out.push_back('"');
            break;
        case Expr::Kind::unary:
            if (e.op == Expr::Op::logical_not) {
                out += "not ";
                print_expr(e.lhs, out, prec, false);
            } else {
                out += "-";
                print_expr(e.lhs, out, prec, false);
            }
            break;
        case Expr::Kind::binary:
            print_expr(e.lhs, out, prec, false);
            out.push_back(' ');
            out += op_text(e.op);
            out.push_back(' ');
            print_expr(e.rhs, out, prec, true);
            break;
        case Expr::Kind::call: {
            out += e.callee;
            out.push_back('(');
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                print_expr(e.args[i], out, 0, false);
            }
            out.push_back(')');
            break;
        }
    }
    if (parens) out.push_back(')');
}

}  // namespace

std::string to_source(const MetricProgram& p) {
    std::string out = "metric {\n  success: ";
    print_expr(p.success, out, 0, false);
    out += ";\n";
    for (const auto& m : p.milestones) {
        out += "  milestone " + m.name + " weight " + number_text(m.weight) + ": ";
        print_expr(m.expr, out, 0, false);
        out += ";\n";
    }
    out += "}\n";
    return out;
}

}  // namespace witforge::metriclang
