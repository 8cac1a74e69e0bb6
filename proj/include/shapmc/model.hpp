#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapmc {

/// Thrown when an evaluation leaves the real domain (log of a non-positive
/// value, negative base with fractional exponent, overflow to infinity, ...).
class EvalDomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

class ParseError : public std::invalid_argument {
  public:
    ParseError(const std::string& msg, std::size_t pos)
        : std::invalid_argument(msg + " (at position " + std::to_string(pos) + ")"),
          position(pos) {}
    std::size_t position;
};

/// A trained model f : R^n -> R. Evaluation is deterministic and reentrant.
class Model {
  public:
    virtual ~Model() = default;
    virtual int dim() const = 0;
    virtual double evaluate(std::span<const double> x) const = 0;
};

using ModelPtr = std::shared_ptr<const Model>;

/// Arithmetic expression over variables x1..xn (1-based), constants, `pi`,
/// operators + - * / ^ (with ^ binding tighter than unary minus), and the
/// functions exp, sin, cos, sqrt, abs, log.
class ExpressionModel final : public Model {
  public:
    static std::shared_ptr<const ExpressionModel> parse(const std::string& text, int n);

    int dim() const override { return n_; }
    double evaluate(std::span<const double> x) const override;

    /// Canonical fully-parenthesized form; reparses to an identical AST.
    const std::string& pretty() const { return pretty_; }

    /// True iff variable i (0-based) appears in the expression.
    bool references(int i) const { return used_[static_cast<std::size_t>(i)]; }

    struct Instr;  // postfix op

  private:
    ExpressionModel() = default;
    int n_ = 0;
    std::vector<Instr> tape_;
    std::size_t stack_depth_ = 0;
    std::vector<bool> used_;
    std::string pretty_;
};

/// scale / (1 + exp(-(coeffs . x + intercept)))
class LogisticModel final : public Model {
  public:
    LogisticModel(double scale, std::vector<double> coeffs, double intercept)
        : scale_(scale), coeffs_(std::move(coeffs)), intercept_(intercept) {}

    int dim() const override { return static_cast<int>(coeffs_.size()); }
    double evaluate(std::span<const double> x) const override;

    double scale() const { return scale_; }
    double intercept() const { return intercept_; }
    const std::vector<double>& coeffs() const { return coeffs_; }

  private:
    double scale_;
    std::vector<double> coeffs_;
    double intercept_;
};

/// Loads a model config: {"n": int, "kind": "expression"|"logistic", ...}.
ModelPtr model_from_json_text(const std::string& json_text);
ModelPtr model_from_json_file(const std::string& path);

}  // namespace shapmc
