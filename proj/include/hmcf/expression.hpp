#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace hmcf {

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " at position " + std::to_string(pos)), pos(pos) {}
    std::size_t pos;
};

/// Arithmetic expression over variables x1..xn with symbolic differentiation.
/// Supported: + - * / ^, unary minus, sin, cos, sqrt, abs, exp, log, constants
/// (including pi). x, y, z are accepted as aliases for x1, x2, x3.
class Expr {
public:
    Expr() = default;

    static Expr parse(const std::string& src);
    static Expr constant(double v);

    double eval(std::span<const double> vars) const;
    Expr diff(int var) const;

    /// False when the tree contains abs (derivatives then need an FD fallback).
    bool smooth() const;
    /// Highest variable index referenced, 0-based; -1 for constants.
    int max_var() const;

    bool valid() const { return root_ != nullptr; }
    std::string str() const;

    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

private:
    explicit Expr(NodePtr n) : root_(std::move(n)) {}
    NodePtr root_;
};

}  // namespace hmcf
