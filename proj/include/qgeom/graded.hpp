#pragma once

// Exact polynomial algebra over non-negatively graded coordinates.
//
// Conventions used throughout:
//  * monomials are stored with coordinates in context order; moving a factor
//    of degree a past a factor of degree b costs (-1)^(a*b);
//  * odd coordinates square to zero;
//  * partial derivatives act from the left: differentiating through a
//    monomial picks up (-1)^(deg(coord) * degree of the factors passed);
//  * a vector field v = sum_i v^i d/dx^i acts as v(f) = sum_i v^i * (df/dx^i).

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace qgeom {

using Rational = mpq_class;

namespace graded {

struct Coordinate {
  std::string name;
  int degree = 0;

  bool operator==(const Coordinate&) const = default;
};

/// Ordered list of graded coordinates. Cheap to copy; immutable once built.
/// Two contexts compare equal when their coordinate lists are equal.
class GradedContext {
 public:
  explicit GradedContext(std::vector<Coordinate> coordinates);

  std::size_t size() const { return data_->coords.size(); }
  const Coordinate& coordinate(std::size_t i) const { return data_->coords.at(i); }
  const std::vector<Coordinate>& coordinates() const { return data_->coords; }
  int degree(std::size_t i) const { return data_->coords[i].degree; }
  bool is_odd(std::size_t i) const { return (data_->coords[i].degree & 1) != 0; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Index of `name`; throws DomainError when absent.
  std::size_t index_of(std::string_view name) const;

  bool operator==(const GradedContext& other) const;

 private:
  struct Data {
    std::vector<Coordinate> coords;
    std::map<std::string, std::size_t, std::less<>> index;
  };
  std::shared_ptr<const Data> data_;
};

/// Reads a context file: one `name degree` pair per line, `#` comments.
GradedContext parse_context(std::string_view text);

using Monomial = std::vector<std::uint32_t>;

class GradedPolynomial {
 public:
  using TermMap = std::map<Monomial, Rational>;

  explicit GradedPolynomial(GradedContext ctx);

  static GradedPolynomial constant(const GradedContext& ctx, const Rational& c);
  static GradedPolynomial coordinate(const GradedContext& ctx, std::size_t index);
  static GradedPolynomial coordinate(const GradedContext& ctx, std::string_view name);
  /// Builds c * x_{i1} * x_{i2} * ... in the given (arbitrary) factor order.
  static GradedPolynomial product_of(const GradedContext& ctx, std::span<const std::size_t> factors,
                                     const Rational& c = 1);

  const GradedContext& context() const { return ctx_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t term_count() const { return terms_.size(); }

  /// Degree of a monomial under this context's grading.
  int monomial_degree(const Monomial& m) const;
  /// Common degree of all terms; nullopt if inhomogeneous or zero.
  std::optional<int> degree() const;
  bool is_homogeneous() const;
  /// True if the polynomial involves only the listed coordinates.
  bool depends_only_on(std::span<const std::size_t> allowed) const;
  bool depends_on(std::size_t index) const;
  /// Constant term value; nullopt unless the polynomial is a constant.
  std::optional<Rational> constant_value() const;

  GradedPolynomial& operator+=(const GradedPolynomial& other);
  GradedPolynomial& operator-=(const GradedPolynomial& other);
  GradedPolynomial& operator*=(const Rational& c);

  friend GradedPolynomial operator+(GradedPolynomial a, const GradedPolynomial& b) { return a += b; }
  friend GradedPolynomial operator-(GradedPolynomial a, const GradedPolynomial& b) { return a -= b; }
  friend GradedPolynomial operator*(GradedPolynomial a, const Rational& c) { return a *= c; }
  friend GradedPolynomial operator*(const Rational& c, GradedPolynomial a) { return a *= c; }
  friend GradedPolynomial operator*(const GradedPolynomial& a, const GradedPolynomial& b);
  GradedPolynomial operator-() const;

  bool operator==(const GradedPolynomial& other) const;

  /// Adds c * m where m is already in normal form.
  void add_term(const Monomial& m, const Rational& c);

 private:
  void require_same_context(const GradedPolynomial& other, const char* op) const;

  GradedContext ctx_;
  TermMap terms_;
};

/// Renders in the expression grammar accepted by parse_polynomial.
std::string to_string(const GradedPolynomial& f);

/// Parses `text` into normal form. Grammar: identifiers, integer and rational
/// literals (3, 3/4), + - * ^ with ^ tightest, parentheses.
GradedPolynomial parse_polynomial(const GradedContext& ctx, std::string_view text);

/// Left graded partial derivative.
GradedPolynomial partial_derivative(const GradedPolynomial& f, std::size_t coord);
GradedPolynomial partial_derivative(const GradedPolynomial& f, std::string_view coord);

/// Re-expresses `f` over `target` by matching coordinate names (degrees must agree).
GradedPolynomial rebase(const GradedPolynomial& f, const GradedContext& target);

/// Substitutes rational values for the even coordinates in `values` (index -> value).
GradedPolynomial substitute(const GradedPolynomial& f, const std::map<std::size_t, Rational>& values);

/// Homogeneous derivation sum_i v^i d/dx^i of a fixed degree.
class GradedVectorField {
 public:
  /// Validates that each nonzero component has degree deg(x^i) + degree.
  GradedVectorField(GradedContext ctx, std::vector<GradedPolynomial> components, int degree);
  /// Degree inferred from the components; throws if they disagree or all vanish.
  static GradedVectorField infer(GradedContext ctx, std::vector<GradedPolynomial> components);
  static GradedVectorField zero(const GradedContext& ctx, int degree);

  const GradedContext& context() const { return ctx_; }
  int degree() const { return degree_; }
  const std::vector<GradedPolynomial>& components() const { return components_; }
  const GradedPolynomial& component(std::size_t i) const { return components_.at(i); }
  bool is_zero() const;

  bool operator==(const GradedVectorField& other) const;

 private:
  GradedContext ctx_;
  std::vector<GradedPolynomial> components_;
  int degree_;
};

std::string to_string(const GradedVectorField& v);

/// Reads a field file: one `name = <expression>` line per nonzero component.
GradedVectorField parse_vector_field(const GradedContext& ctx, std::string_view text);

GradedPolynomial apply_vector_field(const GradedVectorField& v, const GradedPolynomial& f);

/// Graded commutator [v,w] = vw - (-1)^{|v||w|} wv.
GradedVectorField commutator(const GradedVectorField& v, const GradedVectorField& w);

struct QVerdict {
  bool is_q = false;
  std::string reason;
  /// First nonzero component of (1/2)[v,v] in context order.
  std::optional<std::size_t> witness_coordinate;
  std::optional<GradedPolynomial> witness;
};

QVerdict is_q_structure(const GradedVectorField& v);

/// Context and field of the de Rham differential on T[1]R^dim:
/// sigma1..sigmaN (degree 0), theta1..thetaN (degree 1), Q = sum theta^mu d/dsigma^mu.
struct ContextWithField {
  GradedContext context;
  GradedVectorField field;
};

ContextWithField de_rham_q(std::size_t dim);

/// Antisymmetric bivector on a base of degree-0 coordinates; only i<j is stored.
class BivectorSpec {
 public:
  BivectorSpec(GradedContext base, std::map<std::pair<std::size_t, std::size_t>, GradedPolynomial> upper);
  static BivectorSpec zero(const GradedContext& base);

  const GradedContext& base() const { return base_; }
  std::size_t dimension() const { return base_.size(); }
  /// pi^{ij} with pi^{ji} = -pi^{ij} and pi^{ii} = 0.
  GradedPolynomial component(std::size_t i, std::size_t j) const;

 private:
  GradedContext base_;
  std::map<std::pair<std::size_t, std::size_t>, GradedPolynomial> upper_;
};

/// Base context x1..xn, all degree 0.
GradedContext euclidean_base(std::size_t n);

/// T*[1]M over `base`: base coordinates (degree 0) followed by p1..pn (degree 1).
GradedContext shifted_cotangent(const GradedContext& base);

/// Q_pi = pi^{ij} p_j d/dx^i + (1/2) d_i pi^{jk} p_j p_k d/dp_i.
/// The sign of the second term is the one for which Q_pi^2 = 0 under the left
/// derivative convention above.
ContextWithField bivector_to_q(const BivectorSpec& pi);

struct JacobiEntry {
  std::size_t i, j, k;
  GradedPolynomial residual;
};

/// sum_l (d_l pi^{ij} pi^{lk} + d_l pi^{ki} pi^{lj} + d_l pi^{jk} pi^{li}) for i<j<k.
std::vector<JacobiEntry> jacobi_residual(const BivectorSpec& pi);

/// Lift of X = X^i d/dx^i to X^i d/dx^i - (d_i X^j) p_j d/dp_i on T*[1]M.
/// `components` are polynomials over `base`.
GradedVectorField cotangent_lift(const GradedContext& base, const std::vector<GradedPolynomial>& components);

struct PreservationVerdict {
  bool preserved = false;
  /// Nonzero components of [X^, Q_pi] as (coordinate name, polynomial).
  std::vector<std::pair<std::string, GradedPolynomial>> witness;
};

PreservationVerdict poisson_preservation_check(const std::vector<GradedPolynomial>& field, const BivectorSpec& pi);

}  // namespace graded
}  // namespace qgeom
