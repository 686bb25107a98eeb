#pragma once

// Differential forms on a chart of R^n, realized as polynomials on T[1]M:
// base coordinates have degree 0, their differentials d<name> have degree 1,
// and the de Rham differential is the degree-1 field sum dx^mu d/dx^mu.
//
// Trigonometric coefficients enter through declared pairs (c, s) standing for
// (cos t, sin t) of a base angle t. They are extra degree-0 generators with
// dc = -s dt, ds = c dt, and zero tests are taken modulo c^2 + s^2 = 1.

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qgeom/graded.hpp"

namespace qgeom::dirac {

using graded::GradedContext;
using graded::GradedPolynomial;
using graded::GradedVectorField;

struct TrigPair {
  std::string cos_name;
  std::string sin_name;
  std::string angle;
};

class FormSpace {
 public:
  explicit FormSpace(std::vector<std::string> base_names, std::vector<TrigPair> trig = {});
  /// Base coordinates x1..xn.
  static FormSpace euclidean(std::size_t n);

  std::size_t dimension() const { return base_names_.size(); }
  const std::vector<std::string>& base_names() const { return base_names_; }
  const std::vector<TrigPair>& trig_pairs() const { return trig_; }
  const GradedContext& context() const { return ctx_; }

  std::size_t base_index(std::size_t i) const { return i; }
  std::size_t differential_index(std::size_t i) const { return function_count_ + i; }
  /// Number of degree-0 generators (base coordinates plus trig symbols).
  std::size_t function_count() const { return function_count_; }

  GradedPolynomial coordinate(std::size_t i) const;
  GradedPolynomial differential(std::size_t i) const;
  GradedPolynomial parse(std::string_view text) const;

  /// Normal form modulo c^2 + s^2 = 1 for every trig pair (sin exponents <= 1).
  GradedPolynomial reduce(const GradedPolynomial& f) const;
  bool is_zero(const GradedPolynomial& f) const { return reduce(f).is_zero(); }

  const GradedVectorField& de_rham() const { return de_rham_; }

  /// (cos index, sin index, angle index) per trig pair.
  const std::vector<std::array<std::size_t, 3>>& trig_indices() const { return trig_index_; }

  /// Random point with rational coordinates; trig pairs land on the unit circle.
  std::map<std::size_t, Rational> sample_point(std::mt19937_64& rng) const;

  bool operator==(const FormSpace& other) const { return ctx_ == other.ctx_; }

 private:
  std::vector<std::string> base_names_;
  std::vector<TrigPair> trig_;
  std::size_t function_count_ = 0;
  GradedContext ctx_;
  GradedVectorField de_rham_;
  std::vector<std::array<std::size_t, 3>> trig_index_;
};

/// A p-form: polynomial in the differentials, homogeneous of degree p.
class DifferentialForm {
 public:
  DifferentialForm(const FormSpace& space, GradedPolynomial poly);
  DifferentialForm(const FormSpace& space, GradedPolynomial poly, int degree);
  static DifferentialForm zero(const FormSpace& space, int degree);

  const GradedPolynomial& poly() const { return poly_; }
  int degree() const { return degree_; }
  bool is_zero() const { return poly_.is_zero(); }

  bool operator==(const DifferentialForm& o) const { return degree_ == o.degree_ && poly_ == o.poly_; }

 private:
  GradedPolynomial poly_;
  int degree_;
};

/// Vector field on the base: one function (degree-0 polynomial) per base coordinate.
class VectorField {
 public:
  VectorField(const FormSpace& space, std::vector<GradedPolynomial> components);
  static VectorField zero(const FormSpace& space);
  /// d/dx^i
  static VectorField basis(const FormSpace& space, std::size_t i);

  const std::vector<GradedPolynomial>& components() const { return components_; }
  const GradedPolynomial& component(std::size_t i) const { return components_.at(i); }
  bool is_zero() const;

 private:
  std::vector<GradedPolynomial> components_;
};

/// v as an even derivation of the form algebra acting on coefficient functions
/// (chain rule through trig pairs included).
GradedVectorField derivation_of(const FormSpace& space, const VectorField& v);

GradedPolynomial apply(const FormSpace& space, const VectorField& v, const GradedPolynomial& f);
VectorField lie_bracket(const FormSpace& space, const VectorField& v, const VectorField& w);

DifferentialForm exterior_derivative(const FormSpace& space, const DifferentialForm& alpha);
/// Odd derivation sum v^mu d/d(dx^mu). Contracting a 0-form yields the zero 0-form.
DifferentialForm interior_product(const FormSpace& space, const VectorField& v, const DifferentialForm& alpha);
/// Cartan: L_v = i_v d + d i_v.
DifferentialForm lie_derivative(const FormSpace& space, const VectorField& v, const DifferentialForm& alpha);

/// Coefficient of dx^i in a 1-form.
GradedPolynomial one_form_coefficient(const FormSpace& space, const DifferentialForm& alpha, std::size_t i);

struct PontryaginSection {
  VectorField vector;
  DifferentialForm form;  // degree 1
};

PontryaginSection make_section(const FormSpace& space, VectorField v, DifferentialForm eta);

/// <v + eta, v' + eta'> = i_{v'} eta + i_v eta'
GradedPolynomial pairing(const FormSpace& space, const PontryaginSection& a, const PontryaginSection& b);

/// [v + eta, v' + eta'] = [v,v'] + (L_v eta' - i_{v'} d eta)
PontryaginSection courant_dorfman_bracket(const FormSpace& space, const PontryaginSection& a,
                                          const PontryaginSection& b);

struct GraphOfForm {
  DifferentialForm omega;  // 2-form
};

struct GraphOfBivector {
  graded::BivectorSpec pi;
};

struct FromDistribution {
  std::vector<DifferentialForm> annihilators;  // 1-forms
};

/// Generating description of an almost-Dirac subbundle of TM + T*M.
class DiracSpec {
 public:
  using Structure = std::variant<GraphOfForm, GraphOfBivector, FromDistribution>;

  DiracSpec(FormSpace space, Structure structure);

  const FormSpace& space() const { return space_; }
  const Structure& structure() const { return structure_; }

 private:
  FormSpace space_;
  Structure structure_;
};

/// Parses the sectioned spec format:
///   [base] n [names...]
///   trigpair c s angle
///   [form]          i j = <expr>       (coefficient of dx^i ^ dx^j)
///   [bivector]      i j = <expr>
///   [distribution]  a: <one-form expr>
DiracSpec parse_dirac_spec(std::string_view text);

struct GeneratorSet {
  std::vector<PontryaginSection> sections;
  /// False when the kernel basis degenerates on a proper subset (rank must be sampled).
  bool constant_rank = true;
  /// Number of leading sections of the form v + 0 spanning the kernel (distribution case).
  std::size_t kernel_count = 0;
};

GeneratorSet generators(const DiracSpec& spec);

struct CheckOptions {
  std::size_t samples = 32;
  std::uint64_t seed = 20240531;
};

struct IsotropyVerdict {
  bool almost_dirac = false;
  std::string reason;
  std::optional<std::pair<std::size_t, std::size_t>> pair;
  std::optional<GradedPolynomial> witness;
  std::size_t min_rank = 0;
};

IsotropyVerdict isotropy_and_rank_check(const DiracSpec& spec, const CheckOptions& opts = {});

/// Checks a fixed generator list (used for hand-assembled subbundles).
IsotropyVerdict isotropy_and_rank_check(const FormSpace& space, const std::vector<PontryaginSection>& sections,
                                        const CheckOptions& opts = {});

struct IntegrabilityVerdict {
  bool dirac = false;
  std::string reason;
  std::optional<GradedPolynomial> witness;
};

IntegrabilityVerdict integrability_check(const DiracSpec& spec, const CheckOptions& opts = {});

/// T(a,b,c) = <[a,b], c> over all generator triples; zero iff the generators close.
std::vector<GradedPolynomial> courant_tensor(const DiracSpec& spec);

}  // namespace qgeom::dirac
