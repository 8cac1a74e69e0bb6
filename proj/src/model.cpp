#include "shapmc/model.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace shapmc {

namespace {

enum class Func { Exp, Sin, Cos, Sqrt, Abs, Log };

const char* func_name(Func f) {
    switch (f) {
        case Func::Exp: return "exp";
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Sqrt: return "sqrt";
        case Func::Abs: return "abs";
        case Func::Log: return "log";
    }
    return "?";
}

struct Node {
    enum Kind { Num, Var, Neg, Bin, Call } kind;
    double value = 0.0;           // Num
    int var = 0;                  // Var, 0-based
    char op = 0;                  // Bin
    Func func = Func::Exp;        // Call
    std::unique_ptr<Node> a, b;
};

using NodePtr = std::unique_ptr<Node>;

struct Token {
    enum Kind { Number, Ident, Op, LParen, RParen, End } kind;
    double value = 0.0;
    std::string text;
    char op = 0;
    std::size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& s) : s_(s) { advance(); }
    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
        tok_.pos = i_;
        if (i_ >= s_.size()) {
            tok_.kind = Token::End;
            return;
        }
        char c = s_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            tok_.value = std::stod(s_.substr(i_), &used);
            tok_.kind = Token::Number;
            i_ += used;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i_;
            while (j < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[j])) ||
                                     s_[j] == '_'))
                ++j;
            tok_.kind = Token::Ident;
            tok_.text = s_.substr(i_, j - i_);
            i_ = j;
            return;
        }
        if (c == '(') {
            tok_.kind = Token::LParen;
            ++i_;
            return;
        }
        if (c == ')') {
            tok_.kind = Token::RParen;
            ++i_;
            return;
        }
        if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
            tok_.kind = Token::Op;
            tok_.op = c;
            ++i_;
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", i_);
    }

    const std::string& s_;
    std::size_t i_ = 0;
    Token tok_;
};

int binary_prec(char op) {
    switch (op) {
        case '+':
        case '-': return 1;
        case '*':
        case '/': return 2;
        case '^': return 4;
        default: return -1;
    }
}
constexpr int kUnaryPrec = 3;  // ^ binds tighter than unary minus

class Parser {
  public:
    Parser(const std::string& text, int n) : lex_(text), n_(n) {}

    NodePtr parse() {
        NodePtr root = parse_expr(1);
        if (lex_.peek().kind != Token::End)
            throw ParseError("unexpected trailing input", lex_.peek().pos);
        return root;
    }

  private:
    NodePtr parse_expr(int min_prec) {
        NodePtr lhs = parse_unary();
        while (lex_.peek().kind == Token::Op) {
            char op = lex_.peek().op;
            int prec = binary_prec(op);
            if (prec < min_prec) break;
            lex_.take();
            NodePtr rhs = parse_expr(op == '^' ? prec : prec + 1);  // ^ is right-assoc
            auto node = std::make_unique<Node>();
            node->kind = Node::Bin;
            node->op = op;
            node->a = std::move(lhs);
            node->b = std::move(rhs);
            lhs = std::move(node);
        }
        return lhs;
    }

    NodePtr parse_unary() {
        if (lex_.peek().kind == Token::Op && lex_.peek().op == '-') {
            lex_.take();
            auto node = std::make_unique<Node>();
            node->kind = Node::Neg;
            node->a = parse_expr(kUnaryPrec + 1);
            return node;
        }
        return parse_primary();
    }

    NodePtr parse_primary() {
        Token t = lex_.take();
        switch (t.kind) {
            case Token::Number: {
                auto node = std::make_unique<Node>();
                node->kind = Node::Num;
                node->value = t.value;
                return node;
            }
            case Token::LParen: {
                NodePtr inner = parse_expr(1);
                expect_rparen(t.pos);
                return inner;
            }
            case Token::Ident:
                return parse_ident(t);
            default:
                throw ParseError("expected a number, variable, function, or '('", t.pos);
        }
    }

    NodePtr parse_ident(const Token& t) {
        if (t.text == "pi") {
            auto node = std::make_unique<Node>();
            node->kind = Node::Num;
            node->value = M_PI;
            return node;
        }
        if (t.text.size() >= 2 && t.text[0] == 'x' &&
            std::isdigit(static_cast<unsigned char>(t.text[1]))) {
            int k = 0;
            for (std::size_t i = 1; i < t.text.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(t.text[i])))
                    throw ParseError("bad variable name '" + t.text + "'", t.pos);
                k = k * 10 + (t.text[i] - '0');
            }
            if (k < 1 || k > n_)
                throw ParseError("variable x" + std::to_string(k) + " out of range for n=" +
                                     std::to_string(n_),
                                 t.pos);
            auto node = std::make_unique<Node>();
            node->kind = Node::Var;
            node->var = k - 1;
            return node;
        }
        Func f;
        if (t.text == "exp") f = Func::Exp;
        else if (t.text == "sin") f = Func::Sin;
        else if (t.text == "cos") f = Func::Cos;
        else if (t.text == "sqrt") f = Func::Sqrt;
        else if (t.text == "abs") f = Func::Abs;
        else if (t.text == "log") f = Func::Log;
        else throw ParseError("unknown function '" + t.text + "'", t.pos);

        Token open = lex_.take();
        if (open.kind != Token::LParen)
            throw ParseError("expected '(' after function name", open.pos);
        NodePtr arg = parse_expr(1);
        expect_rparen(open.pos);
        auto node = std::make_unique<Node>();
        node->kind = Node::Call;
        node->func = f;
        node->a = std::move(arg);
        return node;
    }

    void expect_rparen(std::size_t open_pos) {
        Token t = lex_.take();
        if (t.kind != Token::RParen)
            throw ParseError("missing ')' for '(' opened earlier", t.pos ? t.pos : open_pos);
    }

    Lexer lex_;
    int n_;
};

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void pretty_print(const Node& node, std::string& out) {
    switch (node.kind) {
        case Node::Num:
            out += format_number(node.value);
            break;
        case Node::Var:
            out += "x" + std::to_string(node.var + 1);
            break;
        case Node::Neg:
            out += "(-";
            pretty_print(*node.a, out);
            out += ")";
            break;
        case Node::Bin:
            out += "(";
            pretty_print(*node.a, out);
            out += node.op;
            pretty_print(*node.b, out);
            out += ")";
            break;
        case Node::Call:
            out += func_name(node.func);
            out += "(";
            pretty_print(*node.a, out);
            out += ")";
            break;
    }
}

}  // namespace

struct ExpressionModel::Instr {
    enum Op : std::uint8_t {
        PushConst, PushVar, Add, Sub, Mul, Div, Pow, Negate,
        FExp, FSin, FCos, FSqrt, FAbs, FLog
    } op;
    double value = 0.0;
    int var = 0;
};

namespace {

void compile(const Node& node, std::vector<ExpressionModel::Instr>& tape,
             std::vector<bool>& used) {
    using I = ExpressionModel::Instr;
    switch (node.kind) {
        case Node::Num:
            tape.push_back({I::PushConst, node.value, 0});
            break;
        case Node::Var:
            tape.push_back({I::PushVar, 0.0, node.var});
            used[static_cast<std::size_t>(node.var)] = true;
            break;
        case Node::Neg:
            compile(*node.a, tape, used);
            tape.push_back({I::Negate, 0.0, 0});
            break;
        case Node::Bin: {
            compile(*node.a, tape, used);
            compile(*node.b, tape, used);
            I::Op op = node.op == '+'   ? I::Add
                       : node.op == '-' ? I::Sub
                       : node.op == '*' ? I::Mul
                       : node.op == '/' ? I::Div
                                        : I::Pow;
            tape.push_back({op, 0.0, 0});
            break;
        }
        case Node::Call: {
            compile(*node.a, tape, used);
            I::Op op;
            switch (node.func) {
                case Func::Exp: op = I::FExp; break;
                case Func::Sin: op = I::FSin; break;
                case Func::Cos: op = I::FCos; break;
                case Func::Sqrt: op = I::FSqrt; break;
                case Func::Abs: op = I::FAbs; break;
                case Func::Log: op = I::FLog; break;
                default: op = I::FExp; break;
            }
            tape.push_back({op, 0.0, 0});
            break;
        }
    }
}

std::size_t tape_stack_depth(const std::vector<ExpressionModel::Instr>& tape) {
    using I = ExpressionModel::Instr;
    std::size_t depth = 0, max_depth = 0;
    for (const auto& ins : tape) {
        if (ins.op == I::PushConst || ins.op == I::PushVar) ++depth;
        else if (ins.op >= I::Add && ins.op <= I::Pow) --depth;
        max_depth = std::max(max_depth, depth);
    }
    return max_depth;
}

constexpr std::size_t kMaxStack = 256;

}  // namespace

std::shared_ptr<const ExpressionModel> ExpressionModel::parse(const std::string& text, int n) {
    if (text.empty()) throw ParseError("empty expression", 0);
    if (n < 1 || n > 64) throw std::invalid_argument("ExpressionModel: n must be in [1,64]");
    Parser parser(text, n);
    NodePtr root = parser.parse();

    auto model = std::shared_ptr<ExpressionModel>(new ExpressionModel());
    model->n_ = n;
    model->used_.assign(static_cast<std::size_t>(n), false);
    compile(*root, model->tape_, model->used_);
    model->stack_depth_ = tape_stack_depth(model->tape_);
    if (model->stack_depth_ > kMaxStack)
        throw ParseError("expression too deeply nested", 0);
    pretty_print(*root, model->pretty_);
    return model;
}

double ExpressionModel::evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_)
        throw std::invalid_argument("ExpressionModel::evaluate: point has wrong dimension");
    double stack[kMaxStack];
    double* sp = stack;
    for (const auto& ins : tape_) {
        switch (ins.op) {
            case Instr::PushConst: *sp++ = ins.value; break;
            case Instr::PushVar: *sp++ = x[static_cast<std::size_t>(ins.var)]; break;
            case Instr::Add: sp[-2] += sp[-1]; --sp; break;
            case Instr::Sub: sp[-2] -= sp[-1]; --sp; break;
            case Instr::Mul: sp[-2] *= sp[-1]; --sp; break;
            case Instr::Div: sp[-2] /= sp[-1]; --sp; break;
            case Instr::Pow: sp[-2] = std::pow(sp[-2], sp[-1]); --sp; break;
            case Instr::Negate: sp[-1] = -sp[-1]; break;
            case Instr::FExp: sp[-1] = std::exp(sp[-1]); break;
            case Instr::FSin: sp[-1] = std::sin(sp[-1]); break;
            case Instr::FCos: sp[-1] = std::cos(sp[-1]); break;
            case Instr::FSqrt: sp[-1] = std::sqrt(sp[-1]); break;
            case Instr::FAbs: sp[-1] = std::fabs(sp[-1]); break;
            case Instr::FLog: sp[-1] = std::log(sp[-1]); break;
        }
    }
    double result = stack[0];
    if (!std::isfinite(result))
        throw EvalDomainError("expression evaluated to a non-finite value");
    return result;
}

double LogisticModel::evaluate(std::span<const double> x) const {
    if (x.size() != coeffs_.size())
        throw std::invalid_argument("LogisticModel::evaluate: point has wrong dimension");
    double z = intercept_;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) z += coeffs_[i] * x[i];
    double result = scale_ / (1.0 + std::exp(-z));
    if (!std::isfinite(result))
        throw EvalDomainError("logistic model evaluated to a non-finite value");
    return result;
}

ModelPtr model_from_json_text(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    const int n = j.at("n").get<int>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "expression")
        return ExpressionModel::parse(j.at("expression").get<std::string>(), n);
    if (kind == "logistic") {
        auto coeffs = j.at("coeffs").get<std::vector<double>>();
        if (static_cast<int>(coeffs.size()) != n)
            throw std::invalid_argument("model config: coeffs length != n");
        return std::make_shared<LogisticModel>(j.at("scale").get<double>(), std::move(coeffs),
                                               j.at("intercept").get<double>());
    }
    throw std::invalid_argument("model config: unknown kind '" + kind + "'");
}

ModelPtr model_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("model config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json_text(ss.str());
}

}  // namespace shapmc
