#include "hmcf/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace hmcf {

namespace {
enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Sqrt, Abs, Exp, Log };
}

struct Expr::Node {
    Kind kind;
    double value = 0.0;  // Const
    int var = -1;        // Var
    NodePtr a, b;
};

namespace {

using Node = Expr::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr num(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Const;
    n->value = v;
    return n;
}

NodePtr var(int i) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    n->var = i;
    return n;
}

bool is_const(const NodePtr& n, double v) {
    return n->kind == Kind::Const && n->value == v;
}

// Constant-folding constructors keep derivative trees small.
NodePtr add(NodePtr a, NodePtr b) {
    if (is_const(a, 0)) return b;
    if (is_const(b, 0)) return a;
    if (a->kind == Kind::Const && b->kind == Kind::Const) return num(a->value + b->value);
    return make(Kind::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
    if (is_const(b, 0)) return a;
    if (a->kind == Kind::Const && b->kind == Kind::Const) return num(a->value - b->value);
    if (is_const(a, 0)) return make(Kind::Neg, std::move(b));
    return make(Kind::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
    if (is_const(a, 0) || is_const(b, 0)) return num(0);
    if (is_const(a, 1)) return b;
    if (is_const(b, 1)) return a;
    if (a->kind == Kind::Const && b->kind == Kind::Const) return num(a->value * b->value);
    return make(Kind::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
    if (is_const(a, 0)) return num(0);
    if (is_const(b, 1)) return a;
    if (a->kind == Kind::Const && b->kind == Kind::Const && b->value != 0)
        return num(a->value / b->value);
    return make(Kind::Div, std::move(a), std::move(b));
}

NodePtr pow_(NodePtr a, NodePtr b) {
    if (is_const(b, 0)) return num(1);
    if (is_const(b, 1)) return a;
    if (a->kind == Kind::Const && b->kind == Kind::Const)
        return num(std::pow(a->value, b->value));
    return make(Kind::Pow, std::move(a), std::move(b));
}

NodePtr neg(NodePtr a) {
    if (a->kind == Kind::Const) return num(-a->value);
    return make(Kind::Neg, std::move(a));
}

class Parser {
public:
    explicit Parser(const std::string& s) : src_(s) {}

    NodePtr run() {
        auto e = expr();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr expr() {
        auto e = term();
        while (true) {
            if (eat('+'))
                e = add(e, term());
            else if (eat('-'))
                e = sub(e, term());
            else
                return e;
        }
    }

    NodePtr term() {
        auto e = factor();
        while (true) {
            if (eat('*'))
                e = mul(e, factor());
            else if (eat('/'))
                e = div(e, factor());
            else
                return e;
        }
    }

    NodePtr factor() {
        if (eat('-')) return neg(factor());
        auto base = primary();
        if (eat('^')) return pow_(base, factor());  // right associative
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of expression", pos_);
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
        if (eat('(')) {
            auto e = expr();
            if (!eat(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr number() {
        std::size_t start = pos_;
        std::size_t consumed = 0;
        double v;
        try {
            v = std::stod(src_.substr(start), &consumed);
        } catch (const std::exception&) {
            throw ParseError("bad number", start);
        }
        pos_ = start + consumed;
        return num(v);
    }

    NodePtr ident() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string name = src_.substr(start, pos_ - start);
        if (name == "pi") return num(M_PI);
        if (name == "x") return var(0);
        if (name == "y") return var(1);
        if (name == "z") return var(2);
        if (name.size() >= 2 && name[0] == 'x' &&
            std::all_of(name.begin() + 1, name.end(),
                        [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
            int idx = std::stoi(name.substr(1));
            if (idx < 1) throw ParseError("variable index must be >= 1", start);
            return var(idx - 1);
        }
        Kind fk;
        if (name == "sin")
            fk = Kind::Sin;
        else if (name == "cos")
            fk = Kind::Cos;
        else if (name == "sqrt")
            fk = Kind::Sqrt;
        else if (name == "abs")
            fk = Kind::Abs;
        else if (name == "exp")
            fk = Kind::Exp;
        else if (name == "log")
            fk = Kind::Log;
        else
            throw ParseError("unknown identifier '" + name + "'", start);
        if (!eat('(')) throw ParseError("expected '(' after " + name, pos_);
        auto arg = expr();
        if (!eat(')')) throw ParseError("expected ')'", pos_);
        return make(fk, std::move(arg));
    }
};

double eval_node(const Node* n, std::span<const double> v) {
    switch (n->kind) {
        case Kind::Const: return n->value;
        case Kind::Var:
            if (n->var >= static_cast<int>(v.size()))
                throw std::runtime_error("expression references x" + std::to_string(n->var + 1) +
                                         " beyond supplied dimension");
            return v[n->var];
        case Kind::Add: return eval_node(n->a.get(), v) + eval_node(n->b.get(), v);
        case Kind::Sub: return eval_node(n->a.get(), v) - eval_node(n->b.get(), v);
        case Kind::Mul: return eval_node(n->a.get(), v) * eval_node(n->b.get(), v);
        case Kind::Div: return eval_node(n->a.get(), v) / eval_node(n->b.get(), v);
        case Kind::Pow: return std::pow(eval_node(n->a.get(), v), eval_node(n->b.get(), v));
        case Kind::Neg: return -eval_node(n->a.get(), v);
        case Kind::Sin: return std::sin(eval_node(n->a.get(), v));
        case Kind::Cos: return std::cos(eval_node(n->a.get(), v));
        case Kind::Sqrt: return std::sqrt(eval_node(n->a.get(), v));
        case Kind::Abs: return std::abs(eval_node(n->a.get(), v));
        case Kind::Exp: return std::exp(eval_node(n->a.get(), v));
        case Kind::Log: return std::log(eval_node(n->a.get(), v));
    }
    return 0;
}

NodePtr diff_node(const NodePtr& n, int i) {
    switch (n->kind) {
        case Kind::Const: return num(0);
        case Kind::Var: return num(n->var == i ? 1 : 0);
        case Kind::Add: return add(diff_node(n->a, i), diff_node(n->b, i));
        case Kind::Sub: return sub(diff_node(n->a, i), diff_node(n->b, i));
        case Kind::Mul:
            return add(mul(diff_node(n->a, i), n->b), mul(n->a, diff_node(n->b, i)));
        case Kind::Div:
            return div(sub(mul(diff_node(n->a, i), n->b), mul(n->a, diff_node(n->b, i))),
                       mul(n->b, n->b));
        case Kind::Pow: {
            if (n->b->kind == Kind::Const) {
                double c = n->b->value;
                return mul(mul(num(c), pow_(n->a, num(c - 1))), diff_node(n->a, i));
            }
            // a^b = exp(b log a)
            auto rewritten = make(Kind::Exp, mul(n->b, make(Kind::Log, n->a)));
            return diff_node(rewritten, i);
        }
        case Kind::Neg: return neg(diff_node(n->a, i));
        case Kind::Sin: return mul(make(Kind::Cos, n->a), diff_node(n->a, i));
        case Kind::Cos: return neg(mul(make(Kind::Sin, n->a), diff_node(n->a, i)));
        case Kind::Sqrt:
            return div(diff_node(n->a, i), mul(num(2), make(Kind::Sqrt, n->a)));
        case Kind::Abs:
            // sign(a) * a' away from the kink; callers check smooth() first
            return mul(div(n->a, make(Kind::Abs, n->a)), diff_node(n->a, i));
        case Kind::Exp: return mul(make(Kind::Exp, n->a), diff_node(n->a, i));
        case Kind::Log: return div(diff_node(n->a, i), n->a);
    }
    return num(0);
}

bool smooth_node(const Node* n) {
    if (n->kind == Kind::Abs) return false;
    if (n->a && !smooth_node(n->a.get())) return false;
    if (n->b && !smooth_node(n->b.get())) return false;
    return true;
}

int max_var_node(const Node* n) {
    int m = n->kind == Kind::Var ? n->var : -1;
    if (n->a) m = std::max(m, max_var_node(n->a.get()));
    if (n->b) m = std::max(m, max_var_node(n->b.get()));
    return m;
}

void str_node(const Node* n, std::ostream& os) {
    auto bin = [&](const char* op) {
        os << '(';
        str_node(n->a.get(), os);
        os << op;
        str_node(n->b.get(), os);
        os << ')';
    };
    auto fun = [&](const char* f) {
        os << f << '(';
        str_node(n->a.get(), os);
        os << ')';
    };
    switch (n->kind) {
        case Kind::Const: os << n->value; break;
        case Kind::Var: os << 'x' << (n->var + 1); break;
        case Kind::Add: bin("+"); break;
        case Kind::Sub: bin("-"); break;
        case Kind::Mul: bin("*"); break;
        case Kind::Div: bin("/"); break;
        case Kind::Pow: bin("^"); break;
        case Kind::Neg:
            os << "(-";
            str_node(n->a.get(), os);
            os << ')';
            break;
        case Kind::Sin: fun("sin"); break;
        case Kind::Cos: fun("cos"); break;
        case Kind::Sqrt: fun("sqrt"); break;
        case Kind::Abs: fun("abs"); break;
        case Kind::Exp: fun("exp"); break;
        case Kind::Log: fun("log"); break;
    }
}

}  // namespace

Expr Expr::parse(const std::string& src) { return Expr(Parser(src).run()); }

Expr Expr::constant(double v) { return Expr(num(v)); }

double Expr::eval(std::span<const double> vars) const { return eval_node(root_.get(), vars); }

Expr Expr::diff(int v) const { return Expr(diff_node(root_, v)); }

bool Expr::smooth() const { return smooth_node(root_.get()); }

int Expr::max_var() const { return max_var_node(root_.get()); }

std::string Expr::str() const {
    std::ostringstream os;
    str_node(root_.get(), os);
    return os.str();
}

}  // namespace hmcf
