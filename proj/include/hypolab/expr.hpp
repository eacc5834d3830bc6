#ifndef HYPOLAB_EXPR_HPP
#define HYPOLAB_EXPR_HPP

// Small expression language for custom potentials and observables:
// numbers, variables, + - * / ^, unary minus, exp log sqrt sin cos.
// Evaluation returns value, gradient and Hessian by second-order forward AD.

#include <memory>
#include <string>
#include <vector>

#include "hypolab/common.hpp"

namespace hypolab::expr {

/** \brief Value with exact first and second derivatives. */
struct Jet {
  double v = 0.0;
  Vec g;
  Mat H;
};

struct Node;

class Expression {
 public:
  /** Parse `text`; `vars` lists the admissible identifiers in slot order. */
  Expression(const std::string& text, std::vector<std::string> vars);

  double value(const Vec& x) const;
  Jet jet(const Vec& x) const;
  const std::string& text() const { return text_; }
  int arity() const { return static_cast<int>(vars_.size()); }

 private:
  std::string text_;
  std::vector<std::string> vars_;
  std::shared_ptr<const Node> root_;
};

/** Variable names q0..q{d-1}; in d=1 "q" is accepted as an alias of q0. */
std::vector<std::string> q_names(int d);
/** q0..q{d-1} followed by p0..p{d-1} (plus q/p aliases in d=1). */
std::vector<std::string> qp_names(int d);

}  // namespace hypolab::expr

#endif
