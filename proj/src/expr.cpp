#include "hypolab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>

namespace hypolab::expr {

struct Node {
  enum Kind { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Call } kind = Num;
  double num = 0.0;
  int slot = -1;
  std::string fn;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodeP = std::shared_ptr<const Node>;

NodeP make(Node::Kind k, NodeP a = nullptr, NodeP b = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  Parser(const std::string& s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

  NodeP parse() {
    NodeP n = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  const std::vector<std::string>& vars_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error("bad-expression", msg + " at offset " + std::to_string(pos_) + " in '" + s_ + "'");
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodeP sum() {
    NodeP l = product();
    for (;;) {
      if (eat('+')) l = make(Node::Add, l, product());
      else if (eat('-')) l = make(Node::Sub, l, product());
      else return l;
    }
  }
  NodeP product() {
    NodeP l = unary();
    for (;;) {
      if (eat('*')) l = make(Node::Mul, l, unary());
      else if (eat('/')) l = make(Node::Div, l, unary());
      else return l;
    }
  }
  NodeP unary() {
    if (eat('-')) return make(Node::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  NodeP power() {
    NodeP base = primary();
    if (eat('^')) return make(Node::Pow, base, unary());
    return base;
  }
  int slot_of(const std::string& id) const {
    auto it = std::find(vars_.begin(), vars_.end(), id);
    if (it != vars_.end()) return static_cast<int>(it - vars_.begin());
    if ((id == "q" || id == "p") &&
        std::find(vars_.begin(), vars_.end(), id + "1") == vars_.end()) {
      it = std::find(vars_.begin(), vars_.end(), id + "0");
      if (it != vars_.end()) return static_cast<int>(it - vars_.begin());
    }
    return -1;
  }
  NodeP primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    char c = s_[pos_];
    if (eat('(')) {
      NodeP n = sum();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      auto n = std::make_shared<Node>();
      n->kind = Node::Num;
      n->num = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string id = s_.substr(start, pos_ - start);
      if (eat('(')) {
        static const char* known[] = {"exp", "log", "sqrt", "sin", "cos"};
        if (std::find(std::begin(known), std::end(known), id) == std::end(known))
          fail("unknown function " + id);
        auto n = std::make_shared<Node>();
        n->kind = Node::Call;
        n->fn = id;
        n->a = sum();
        if (!eat(')')) fail("expected ')'");
        return n;
      }
      if (id == "pi") {
        auto n = std::make_shared<Node>();
        n->num = M_PI;
        return n;
      }
      int slot = slot_of(id);
      if (slot < 0) fail("unknown variable " + id);
      auto n = std::make_shared<Node>();
      n->kind = Node::Var;
      n->slot = slot;
      return n;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
};

double eval(const Node& n, const Vec& x) {
  switch (n.kind) {
    case Node::Num: return n.num;
    case Node::Var: return x[n.slot];
    case Node::Add: return eval(*n.a, x) + eval(*n.b, x);
    case Node::Sub: return eval(*n.a, x) - eval(*n.b, x);
    case Node::Mul: return eval(*n.a, x) * eval(*n.b, x);
    case Node::Div: return eval(*n.a, x) / eval(*n.b, x);
    case Node::Pow: return std::pow(eval(*n.a, x), eval(*n.b, x));
    case Node::Neg: return -eval(*n.a, x);
    case Node::Call: {
      double u = eval(*n.a, x);
      if (n.fn == "exp") return std::exp(u);
      if (n.fn == "log") return std::log(u);
      if (n.fn == "sqrt") return std::sqrt(u);
      if (n.fn == "sin") return std::sin(u);
      return std::cos(u);
    }
  }
  return 0.0;
}

// f(u) with f' and f'' given.
Jet chain(const Jet& u, double f, double f1, double f2) {
  Jet r;
  r.v = f;
  r.g = f1 * u.g;
  r.H = f1 * u.H + f2 * u.g * u.g.transpose();
  return r;
}

Jet mul(const Jet& a, const Jet& b) {
  Jet r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  r.H = a.v * b.H + b.v * a.H + a.g * b.g.transpose() + b.g * a.g.transpose();
  return r;
}

bool is_const(const Node& n) {
  if (n.kind == Node::Num) return true;
  if (n.kind == Node::Var) return false;
  bool c = n.a ? is_const(*n.a) : true;
  if (n.b) c = c && is_const(*n.b);
  return c;
}

Jet jet_eval(const Node& n, const Vec& x) {
  const int m = static_cast<int>(x.size());
  switch (n.kind) {
    case Node::Num: return Jet{n.num, Vec::Zero(m), Mat::Zero(m, m)};
    case Node::Var: {
      Jet r{x[n.slot], Vec::Zero(m), Mat::Zero(m, m)};
      r.g[n.slot] = 1.0;
      return r;
    }
    case Node::Add: {
      Jet a = jet_eval(*n.a, x), b = jet_eval(*n.b, x);
      return Jet{a.v + b.v, a.g + b.g, a.H + b.H};
    }
    case Node::Sub: {
      Jet a = jet_eval(*n.a, x), b = jet_eval(*n.b, x);
      return Jet{a.v - b.v, a.g - b.g, a.H - b.H};
    }
    case Node::Neg: {
      Jet a = jet_eval(*n.a, x);
      return Jet{-a.v, -a.g, -a.H};
    }
    case Node::Mul: return mul(jet_eval(*n.a, x), jet_eval(*n.b, x));
    case Node::Div: {
      Jet b = jet_eval(*n.b, x);
      double iv = 1.0 / b.v;
      return mul(jet_eval(*n.a, x), chain(b, iv, -iv * iv, 2.0 * iv * iv * iv));
    }
    case Node::Pow: {
      Jet a = jet_eval(*n.a, x);
      if (is_const(*n.b)) {
        double c = eval(*n.b, x);
        double f = std::pow(a.v, c);
        double f1 = c == 0.0 ? 0.0 : c * std::pow(a.v, c - 1.0);
        double f2 = (c == 0.0 || c == 1.0) ? 0.0 : c * (c - 1.0) * std::pow(a.v, c - 2.0);
        return chain(a, f, f1, f2);
      }
      Jet b = jet_eval(*n.b, x);
      Jet la = chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
      Jet e = mul(b, la);
      double ev = std::exp(e.v);
      return chain(e, ev, ev, ev);
    }
    case Node::Call: {
      Jet u = jet_eval(*n.a, x);
      if (n.fn == "exp") {
        double e = std::exp(u.v);
        return chain(u, e, e, e);
      }
      if (n.fn == "log") return chain(u, std::log(u.v), 1.0 / u.v, -1.0 / (u.v * u.v));
      if (n.fn == "sqrt") {
        double s = std::sqrt(u.v);
        return chain(u, s, 0.5 / s, -0.25 / (s * u.v));
      }
      if (n.fn == "sin") return chain(u, std::sin(u.v), std::cos(u.v), -std::sin(u.v));
      return chain(u, std::cos(u.v), -std::sin(u.v), -std::cos(u.v));
    }
  }
  return {};
}

}  // namespace

Expression::Expression(const std::string& text, std::vector<std::string> vars)
    : text_(text), vars_(std::move(vars)) {
  root_ = Parser(text_, vars_).parse();
}

double Expression::value(const Vec& x) const { return eval(*root_, x); }

Jet Expression::jet(const Vec& x) const { return jet_eval(*root_, x); }

std::vector<std::string> q_names(int d) {
  std::vector<std::string> v;
  for (int i = 0; i < d; ++i) v.push_back("q" + std::to_string(i));
  return v;
}

std::vector<std::string> qp_names(int d) {
  auto v = q_names(d);
  for (int i = 0; i < d; ++i) v.push_back("p" + std::to_string(i));
  return v;
}

}  // namespace hypolab::expr
