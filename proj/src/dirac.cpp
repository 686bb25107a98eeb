#include "qgeom/dirac.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "lexer.hpp"
#include "qgeom/errors.hpp"

namespace qgeom::dirac {

namespace {

GradedContext build_context(const std::vector<std::string>& base, const std::vector<TrigPair>& trig) {
  std::vector<graded::Coordinate> coords;
  for (const auto& n : base) coords.push_back({n, 0});
  for (const auto& t : trig) {
    coords.push_back({t.cos_name, 0});
    coords.push_back({t.sin_name, 0});
  }
  for (const auto& n : base) coords.push_back({"d" + n, 1});
  return GradedContext(std::move(coords));
}

GradedVectorField build_de_rham(const GradedContext& ctx, std::size_t n, std::size_t functions,
                                const std::vector<std::array<std::size_t, 3>>& trig) {
  std::vector<GradedPolynomial> comps(ctx.size(), GradedPolynomial(ctx));
  for (std::size_t i = 0; i < n; ++i) comps[i] = GradedPolynomial::coordinate(ctx, functions + i);
  for (const auto& [c, s, angle] : trig) {
    GradedPolynomial dt = GradedPolynomial::coordinate(ctx, functions + angle);
    comps[c] = -(GradedPolynomial::coordinate(ctx, s) * dt);
    comps[s] = GradedPolynomial::coordinate(ctx, c) * dt;
  }
  return GradedVectorField(ctx, std::move(comps), 1);
}

std::vector<std::array<std::size_t, 3>> trig_layout(const std::vector<std::string>& base,
                                                    const std::vector<TrigPair>& trig) {
  std::vector<std::array<std::size_t, 3>> out;
  for (std::size_t k = 0; k < trig.size(); ++k) {
    auto it = std::find(base.begin(), base.end(), trig[k].angle);
    if (it == base.end()) throw DomainError("trig pair angle '" + trig[k].angle + "' is not a base coordinate");
    out.push_back({base.size() + 2 * k, base.size() + 2 * k + 1, static_cast<std::size_t>(it - base.begin())});
  }
  return out;
}

Rational random_rational(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> num(-9, 9);
  std::uniform_int_distribution<int> den(1, 7);
  Rational r(num(rng), den(rng));
  r.canonicalize();
  return r;
}

// Exact rank of a dense rational matrix.
std::size_t rank_of(std::vector<std::vector<Rational>> rows) {
  if (rows.empty()) return 0;
  const std::size_t cols = rows.front().size();
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][c] == 0) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[pivot], rows[rank]);
    for (std::size_t r = rank + 1; r < rows.size(); ++r) {
      if (rows[r][c] == 0) continue;
      const Rational f = rows[r][c] / rows[rank][c];
      for (std::size_t k = c; k < cols; ++k) rows[r][k] -= f * rows[rank][k];
    }
    ++rank;
  }
  return rank;
}

Rational evaluate_function(const FormSpace& space, const GradedPolynomial& f,
                           const std::map<std::size_t, Rational>& point) {
  GradedPolynomial v = graded::substitute(space.reduce(f), point);
  auto c = v.constant_value();
  if (!c) throw DomainError("evaluate: polynomial still depends on unassigned coordinates");
  return *c;
}

}  // namespace

// ---------------------------------------------------------------------------
// FormSpace

FormSpace::FormSpace(std::vector<std::string> base_names, std::vector<TrigPair> trig)
    : base_names_(std::move(base_names)),
      trig_(std::move(trig)),
      function_count_(base_names_.size() + 2 * trig_.size()),
      ctx_(build_context(base_names_, trig_)),
      de_rham_(build_de_rham(ctx_, base_names_.size(), function_count_, trig_layout(base_names_, trig_))),
      trig_index_(trig_layout(base_names_, trig_)) {
  if (base_names_.empty()) throw DomainError("form space needs at least one base coordinate");
}

FormSpace FormSpace::euclidean(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return FormSpace(std::move(names));
}

GradedPolynomial FormSpace::coordinate(std::size_t i) const {
  if (i >= dimension()) throw DomainError("coordinate index out of range");
  return GradedPolynomial::coordinate(ctx_, i);
}

GradedPolynomial FormSpace::differential(std::size_t i) const {
  if (i >= dimension()) throw DomainError("differential index out of range");
  return GradedPolynomial::coordinate(ctx_, differential_index(i));
}

GradedPolynomial FormSpace::parse(std::string_view text) const { return graded::parse_polynomial(ctx_, text); }

GradedPolynomial FormSpace::reduce(const GradedPolynomial& f) const {
  if (trig_index_.empty()) return f;
  GradedPolynomial current = f;
  bool changed = true;
  while (changed) {
    changed = false;
    GradedPolynomial next(ctx_);
    for (const auto& [m, coeff] : current.terms()) {
      bool rewrote = false;
      for (const auto& [c, s, angle] : trig_index_) {
        if (m[s] < 2) continue;
        // s^2 -> 1 - c^2
        graded::Monomial lower = m;
        lower[s] -= 2;
        graded::Monomial with_c = lower;
        with_c[c] += 2;
        next.add_term(lower, coeff);
        next.add_term(with_c, -coeff);
        rewrote = true;
        break;
      }
      if (rewrote) {
        changed = true;
      } else {
        next.add_term(m, coeff);
      }
    }
    current = std::move(next);
  }
  return current;
}

std::map<std::size_t, Rational> FormSpace::sample_point(std::mt19937_64& rng) const {
  std::map<std::size_t, Rational> point;
  for (std::size_t i = 0; i < dimension(); ++i) point[i] = random_rational(rng);
  for (const auto& [c, s, angle] : trig_index_) {
    const Rational t = random_rational(rng);
    const Rational denom = 1 + t * t;
    point[c] = (1 - t * t) / denom;
    point[s] = 2 * t / denom;
  }
  return point;
}

// ---------------------------------------------------------------------------
// Forms and vector fields

DifferentialForm::DifferentialForm(const FormSpace& space, GradedPolynomial poly)
    : poly_(graded::rebase(poly, space.context())), degree_(0) {
  if (poly_.is_zero()) throw DomainError("degree of a zero form must be given explicitly");
  auto d = poly_.degree();
  if (!d) throw DomainError("form is not homogeneous in the differentials");
  degree_ = *d;
}

DifferentialForm::DifferentialForm(const FormSpace& space, GradedPolynomial poly, int degree)
    : poly_(graded::rebase(poly, space.context())), degree_(degree) {
  if (degree < 0 || static_cast<std::size_t>(degree) > space.dimension()) {
    throw DomainError("form degree out of range");
  }
  if (!poly_.is_zero() && poly_.degree() != degree) {
    throw DomainError("form is not homogeneous of degree " + std::to_string(degree));
  }
}

DifferentialForm DifferentialForm::zero(const FormSpace& space, int degree) {
  return DifferentialForm(space, GradedPolynomial(space.context()), degree);
}

VectorField::VectorField(const FormSpace& space, std::vector<GradedPolynomial> components) {
  if (components.size() != space.dimension()) throw DomainError("vector field has wrong number of components");
  for (auto& c : components) {
    GradedPolynomial r = graded::rebase(c, space.context());
    if (!r.is_zero() && r.degree() != 0) throw DomainError("vector field components must be functions");
    components_.push_back(std::move(r));
  }
}

VectorField VectorField::zero(const FormSpace& space) {
  return VectorField(space, std::vector<GradedPolynomial>(space.dimension(), GradedPolynomial(space.context())));
}

VectorField VectorField::basis(const FormSpace& space, std::size_t i) {
  std::vector<GradedPolynomial> comps(space.dimension(), GradedPolynomial(space.context()));
  comps.at(i) = GradedPolynomial::constant(space.context(), 1);
  return VectorField(space, std::move(comps));
}

bool VectorField::is_zero() const {
  return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.is_zero(); });
}

GradedVectorField derivation_of(const FormSpace& space, const VectorField& v) {
  const auto& ctx = space.context();
  std::vector<GradedPolynomial> comps(ctx.size(), GradedPolynomial(ctx));
  for (std::size_t i = 0; i < space.dimension(); ++i) comps[i] = v.component(i);
  for (const auto& [c, s, angle] : space.trig_indices()) {
    const auto& va = v.component(angle);
    comps[c] = -(GradedPolynomial::coordinate(ctx, s) * va);
    comps[s] = GradedPolynomial::coordinate(ctx, c) * va;
  }
  return GradedVectorField(ctx, std::move(comps), 0);
}

GradedPolynomial apply(const FormSpace& space, const VectorField& v, const GradedPolynomial& f) {
  return space.reduce(graded::apply_vector_field(derivation_of(space, v), f));
}

VectorField lie_bracket(const FormSpace& space, const VectorField& v, const VectorField& w) {
  std::vector<GradedPolynomial> comps;
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    comps.push_back(apply(space, v, w.component(i)) - apply(space, w, v.component(i)));
  }
  return VectorField(space, std::move(comps));
}

DifferentialForm exterior_derivative(const FormSpace& space, const DifferentialForm& alpha) {
  GradedPolynomial d = space.reduce(graded::apply_vector_field(space.de_rham(), alpha.poly()));
  if (static_cast<std::size_t>(alpha.degree()) >= space.dimension()) {
    return DifferentialForm::zero(space, static_cast<int>(space.dimension()));
  }
  return DifferentialForm(space, std::move(d), alpha.degree() + 1);
}

DifferentialForm interior_product(const FormSpace& space, const VectorField& v, const DifferentialForm& alpha) {
  if (alpha.degree() == 0) return DifferentialForm::zero(space, 0);
  const auto& ctx = space.context();
  GradedPolynomial acc(ctx);
  for (std::size_t i = 0; i < space.dimension(); ++i) {
    if (v.component(i).is_zero()) continue;
    acc += v.component(i) * graded::partial_derivative(alpha.poly(), space.differential_index(i));
  }
  return DifferentialForm(space, space.reduce(acc), alpha.degree() - 1);
}

DifferentialForm lie_derivative(const FormSpace& space, const VectorField& v, const DifferentialForm& alpha) {
  GradedPolynomial acc(space.context());
  if (static_cast<std::size_t>(alpha.degree()) < space.dimension()) {
    acc += interior_product(space, v, exterior_derivative(space, alpha)).poly();
  }
  if (alpha.degree() > 0) acc += exterior_derivative(space, interior_product(space, v, alpha)).poly();
  return DifferentialForm(space, space.reduce(acc), alpha.degree());
}

GradedPolynomial one_form_coefficient(const FormSpace& space, const DifferentialForm& alpha, std::size_t i) {
  if (alpha.degree() != 1) throw DomainError("one_form_coefficient: expected a 1-form");
  return graded::partial_derivative(alpha.poly(), space.differential_index(i));
}

// ---------------------------------------------------------------------------
// Pontryagin bundle

PontryaginSection make_section(const FormSpace& space, VectorField v, DifferentialForm eta) {
  if (eta.degree() != 1) throw DomainError("Pontryagin section needs a 1-form");
  if (!(eta.poly().context() == space.context())) throw ContextMismatch("section form lives in another space");
  return PontryaginSection{std::move(v), std::move(eta)};
}

GradedPolynomial pairing(const FormSpace& space, const PontryaginSection& a, const PontryaginSection& b) {
  return space.reduce(interior_product(space, b.vector, a.form).poly() +
                      interior_product(space, a.vector, b.form).poly());
}

PontryaginSection courant_dorfman_bracket(const FormSpace& space, const PontryaginSection& a,
                                          const PontryaginSection& b) {
  VectorField v = lie_bracket(space, a.vector, b.vector);
  GradedPolynomial eta = lie_derivative(space, a.vector, b.form).poly() -
                         interior_product(space, b.vector, exterior_derivative(space, a.form)).poly();
  return PontryaginSection{std::move(v), DifferentialForm(space, space.reduce(eta), 1)};
}

// ---------------------------------------------------------------------------
// Dirac specs

DiracSpec::DiracSpec(FormSpace space, Structure structure) : space_(std::move(space)), structure_(std::move(structure)) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GraphOfForm>) {
          if (s.omega.degree() != 2) throw DomainError("graph of a form needs a 2-form");
          if (!(s.omega.poly().context() == space_.context())) throw ContextMismatch("2-form lives in another space");
        } else if constexpr (std::is_same_v<T, GraphOfBivector>) {
          if (!space_.trig_pairs().empty()) throw DomainError("bivector specs do not support trig pairs");
          if (s.pi.dimension() != space_.dimension()) throw DomainError("bivector dimension does not match the base");
          for (std::size_t i = 0; i < space_.dimension(); ++i) {
            if (s.pi.base().coordinate(i).name != space_.base_names()[i]) {
              throw ContextMismatch("bivector base coordinates differ from the form space");
            }
          }
        } else {
          if (s.annihilators.empty()) throw DomainError("distribution needs at least one annihilating 1-form");
          if (s.annihilators.size() > space_.dimension()) throw DomainError("too many annihilating forms");
          for (const auto& w : s.annihilators) {
            if (w.degree() != 1) throw DomainError("annihilators must be 1-forms");
            if (!(w.poly().context() == space_.context())) throw ContextMismatch("1-form lives in another space");
          }
        }
      },
      structure_);
}

DiracSpec parse_dirac_spec(std::string_view text) {
  std::optional<std::vector<std::string>> names;
  std::vector<TrigPair> trig;
  enum class Section { None, Form, Bivector, Distribution } section = Section::None;
  struct Entry {
    std::size_t lineno;
    std::string lhs, rhs;
  };
  std::vector<Entry> entries;

  for (const auto& [lineno, line] : detail::content_lines(text)) {
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) throw ParseError(where + "unterminated section header");
      const std::string header = line.substr(1, close - 1);
      std::istringstream rest(line.substr(close + 1));
      if (header == "base") {
        std::size_t n = 0;
        if (!(rest >> n) || n == 0) throw ParseError(where + "[base] needs a positive dimension");
        std::vector<std::string> nm;
        std::string tok;
        while (rest >> tok) nm.push_back(tok);
        if (nm.empty()) {
          for (std::size_t i = 1; i <= n; ++i) nm.push_back("x" + std::to_string(i));
        } else if (nm.size() != n) {
          throw ParseError(where + "[base] lists " + std::to_string(nm.size()) + " names for dimension " +
                           std::to_string(n));
        }
        names = std::move(nm);
        continue;
      }
      if (section != Section::None) throw ParseError(where + "only one structure section is allowed");
      if (header == "form") {
        section = Section::Form;
      } else if (header == "bivector") {
        section = Section::Bivector;
      } else if (header == "distribution") {
        section = Section::Distribution;
      } else {
        throw ParseError(where + "unknown section [" + header + "]");
      }
      continue;
    }
    if (line.rfind("trigpair", 0) == 0) {
      std::istringstream in(line.substr(8));
      TrigPair t;
      std::string extra;
      if (!(in >> t.cos_name >> t.sin_name >> t.angle) || (in >> extra)) {
        throw ParseError(where + "expected `trigpair <cos> <sin> <angle>`");
      }
      trig.push_back(std::move(t));
      continue;
    }
    if (section == Section::None) throw ParseError(where + "entry outside of a structure section");
    const char sep = section == Section::Distribution ? ':' : '=';
    const auto pos = line.find(sep);
    if (pos == std::string::npos) {
      throw ParseError(where + (sep == ':' ? "expected `label: <one-form>`" : "expected `i j = <expression>`"));
    }
    entries.push_back({lineno, std::string(detail::trim(std::string_view(line).substr(0, pos))),
                       std::string(detail::trim(std::string_view(line).substr(pos + 1)))});
  }
  if (!names) throw ParseError("missing [base] section");
  if (section == Section::None) throw ParseError("missing [form], [bivector] or [distribution] section");

  FormSpace space(*names, trig);
  auto parse_expr = [&](const Entry& e) {
    try {
      return space.parse(e.rhs);
    } catch (const std::exception& ex) {
      throw ParseError("line " + std::to_string(e.lineno) + ": " + ex.what());
    }
  };
  auto parse_indices = [&](const Entry& e) {
    std::istringstream in(e.lhs);
    std::size_t i = 0, j = 0;
    std::string extra;
    if (!(in >> i >> j) || (in >> extra) || i == 0 || j == 0 || i > space.dimension() || j > space.dimension() ||
        i == j) {
      throw ParseError("line " + std::to_string(e.lineno) + ": expected two distinct indices in 1.." +
                       std::to_string(space.dimension()));
    }
    return std::pair{i - 1, j - 1};
  };
  auto require_function = [&](const Entry& e, const GradedPolynomial& f) {
    if (!f.is_zero() && f.degree() != 0) {
      throw ParseError("line " + std::to_string(e.lineno) + ": coefficient must not involve differentials");
    }
  };

  switch (section) {
    case Section::Form: {
      GradedPolynomial omega(space.context());
      for (const auto& e : entries) {
        auto [i, j] = parse_indices(e);
        GradedPolynomial coeff = parse_expr(e);
        require_function(e, coeff);
        omega += coeff * space.differential(i) * space.differential(j);
      }
      return DiracSpec(space, GraphOfForm{DifferentialForm(space, space.reduce(omega), 2)});
    }
    case Section::Bivector: {
      if (!trig.empty()) throw ParseError("trig pairs are not supported for [bivector]");
      GradedContext base = graded::GradedContext([&] {
        std::vector<graded::Coordinate> c;
        for (const auto& n : *names) c.push_back({n, 0});
        return c;
      }());
      std::map<std::pair<std::size_t, std::size_t>, GradedPolynomial> upper;
      for (const auto& e : entries) {
        auto [i, j] = parse_indices(e);
        GradedPolynomial coeff = parse_expr(e);
        require_function(e, coeff);
        coeff = graded::rebase(coeff, base);
        if (i > j) {
          std::swap(i, j);
          coeff = -coeff;
        }
        auto [it, inserted] = upper.try_emplace({i, j}, coeff);
        if (!inserted) throw ParseError("line " + std::to_string(e.lineno) + ": duplicate bivector component");
      }
      return DiracSpec(space, GraphOfBivector{graded::BivectorSpec(base, std::move(upper))});
    }
    case Section::Distribution: {
      std::vector<DifferentialForm> forms;
      for (const auto& e : entries) {
        GradedPolynomial w = parse_expr(e);
        if (w.is_zero() || w.degree() != 1) {
          throw ParseError("line " + std::to_string(e.lineno) + ": annihilator must be a nonzero 1-form");
        }
        forms.emplace_back(space, space.reduce(w), 1);
      }
      return DiracSpec(space, FromDistribution{std::move(forms)});
    }
    case Section::None: break;
  }
  throw ParseError("unreachable");
}

// ---------------------------------------------------------------------------
// Generators

namespace {

GradedPolynomial determinant(const FormSpace& space, std::vector<std::vector<GradedPolynomial>> m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  GradedPolynomial acc(space.context());
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c].is_zero()) continue;
    std::vector<std::vector<GradedPolynomial>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<GradedPolynomial> row;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != c) row.push_back(m[r][k]);
      }
      minor.push_back(std::move(row));
    }
    GradedPolynomial term = m[0][c] * determinant(space, std::move(minor));
    if (c % 2) acc -= term; else acc += term;
  }
  return space.reduce(acc);
}

bool next_combination(std::vector<std::size_t>& comb, std::size_t n) {
  const std::size_t k = comb.size();
  for (std::size_t i = k; i-- > 0;) {
    if (comb[i] < n - k + i) {
      ++comb[i];
      for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

struct KernelBasis {
  std::vector<VectorField> fields;
  bool constant_rank = true;
};

// Polynomial spanning set of ker{w^a} by Cramer's rule on a nonvanishing maximal minor.
KernelBasis kernel_basis(const FormSpace& space, const std::vector<DifferentialForm>& forms) {
  const std::size_t n = space.dimension();
  const std::size_t m = forms.size();
  const auto& ctx = space.context();
  std::vector<std::vector<GradedPolynomial>> a(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t i = 0; i < n; ++i) a[r].push_back(space.reduce(one_form_coefficient(space, forms[r], i)));
  }
  auto submatrix = [&](const std::vector<std::size_t>& cols) {
    std::vector<std::vector<GradedPolynomial>> s(m);
    for (std::size_t r = 0; r < m; ++r) {
      for (auto c : cols) s[r].push_back(a[r][c]);
    }
    return s;
  };

  std::vector<std::size_t> comb(m);
  for (std::size_t i = 0; i < m; ++i) comb[i] = i;
  std::optional<std::vector<std::size_t>> pivots;
  GradedPolynomial det(ctx);
  do {
    GradedPolynomial d = determinant(space, submatrix(comb));
    if (d.is_zero()) continue;
    if (!pivots || (d.constant_value() && !det.constant_value())) {
      pivots = comb;
      det = d;
    }
    if (det.constant_value()) break;
  } while (next_combination(comb, n));
  if (!pivots) throw DomainError("annihilating 1-forms are linearly dependent");

  KernelBasis basis;
  const auto constant = det.constant_value();
  basis.constant_rank = constant.has_value();
  for (std::size_t j = 0; j < n; ++j) {
    if (std::find(pivots->begin(), pivots->end(), j) != pivots->end()) continue;
    bool zero_column = true;
    for (std::size_t r = 0; r < m; ++r) zero_column = zero_column && a[r][j].is_zero();
    if (zero_column) {
      basis.fields.push_back(VectorField::basis(space, j));
      continue;
    }
    std::vector<GradedPolynomial> comps(n, GradedPolynomial(ctx));
    comps[j] = det;
    for (std::size_t k = 0; k < m; ++k) {
      auto replaced = submatrix(*pivots);
      for (std::size_t r = 0; r < m; ++r) replaced[r][k] = a[r][j];
      comps[(*pivots)[k]] = -determinant(space, std::move(replaced));
    }
    if (constant) {
      const Rational inv = 1 / *constant;
      for (auto& c : comps) c *= inv;
    }
    basis.fields.emplace_back(space, std::move(comps));
  }
  return basis;
}

}  // namespace

GeneratorSet generators(const DiracSpec& spec) {
  const auto& space = spec.space();
  const std::size_t n = space.dimension();
  GeneratorSet out;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GraphOfForm>) {
          for (std::size_t i = 0; i < n; ++i) {
            VectorField e = VectorField::basis(space, i);
            DifferentialForm eta = interior_product(space, e, s.omega);
            out.sections.push_back(make_section(space, std::move(e), std::move(eta)));
          }
        } else if constexpr (std::is_same_v<T, GraphOfBivector>) {
          for (std::size_t i = 0; i < n; ++i) {
            std::vector<GradedPolynomial> comps;
            for (std::size_t j = 0; j < n; ++j) comps.push_back(graded::rebase(s.pi.component(i, j), space.context()));
            out.sections.push_back(
                make_section(space, VectorField(space, std::move(comps)), DifferentialForm(space, space.differential(i), 1)));
          }
        } else {
          KernelBasis k = kernel_basis(space, s.annihilators);
          out.constant_rank = k.constant_rank;
          out.kernel_count = k.fields.size();
          for (auto& f : k.fields) out.sections.push_back(make_section(space, std::move(f), DifferentialForm::zero(space, 1)));
          for (const auto& w : s.annihilators) out.sections.push_back(make_section(space, VectorField::zero(space), w));
        }
      },
      spec.structure());
  return out;
}

IsotropyVerdict isotropy_and_rank_check(const FormSpace& space, const std::vector<PontryaginSection>& sections,
                                        const CheckOptions& opts) {
  IsotropyVerdict verdict;
  const std::size_t n = space.dimension();
  if (sections.empty()) {
    verdict.reason = "empty generator list";
    return verdict;
  }
  for (std::size_t i = 0; i < sections.size(); ++i) {
    for (std::size_t j = i; j < sections.size(); ++j) {
      GradedPolynomial p = pairing(space, sections[i], sections[j]);
      if (!p.is_zero()) {
        verdict.reason = "pairing of generators " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                         " does not vanish";
        verdict.pair = {i, j};
        verdict.witness = std::move(p);
        return verdict;
      }
    }
  }
  std::mt19937_64 rng(opts.seed);
  verdict.min_rank = 2 * n;
  for (std::size_t s = 0; s < std::max<std::size_t>(opts.samples, 1); ++s) {
    const auto point = space.sample_point(rng);
    std::vector<std::vector<Rational>> rows;
    for (const auto& sec : sections) {
      std::vector<Rational> row;
      for (std::size_t i = 0; i < n; ++i) row.push_back(evaluate_function(space, sec.vector.component(i), point));
      for (std::size_t i = 0; i < n; ++i) {
        row.push_back(evaluate_function(space, one_form_coefficient(space, sec.form, i), point));
      }
      rows.push_back(std::move(row));
    }
    verdict.min_rank = std::min(verdict.min_rank, rank_of(std::move(rows)));
    if (verdict.min_rank < n) break;
  }
  if (verdict.min_rank != n) {
    verdict.reason = "generator rank " + std::to_string(verdict.min_rank) + " != dim M = " + std::to_string(n);
    return verdict;
  }
  verdict.almost_dirac = true;
  return verdict;
}

IsotropyVerdict isotropy_and_rank_check(const DiracSpec& spec, const CheckOptions& opts) {
  return isotropy_and_rank_check(spec.space(), generators(spec).sections, opts);
}

IntegrabilityVerdict integrability_check(const DiracSpec& spec, const CheckOptions& /*opts*/) {
  const auto& space = spec.space();
  IntegrabilityVerdict verdict;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GraphOfForm>) {
          DifferentialForm d = exterior_derivative(space, s.omega);
          if (!d.is_zero()) {
            verdict.reason = "2-form is not closed";
            verdict.witness = d.poly();
            return;
          }
        } else if constexpr (std::is_same_v<T, GraphOfBivector>) {
          for (auto& e : graded::jacobi_residual(s.pi)) {
            if (!e.residual.is_zero()) {
              verdict.reason = "Jacobi identity fails at (" + std::to_string(e.i + 1) + "," + std::to_string(e.j + 1) +
                               "," + std::to_string(e.k + 1) + ")";
              verdict.witness = std::move(e.residual);
              return;
            }
          }
        } else {
          KernelBasis k = kernel_basis(space, s.annihilators);
          for (std::size_t i = 0; i < k.fields.size(); ++i) {
            for (std::size_t j = i + 1; j < k.fields.size(); ++j) {
              VectorField br = lie_bracket(space, k.fields[i], k.fields[j]);
              for (std::size_t a = 0; a < s.annihilators.size(); ++a) {
                GradedPolynomial val = interior_product(space, br, s.annihilators[a]).poly();
                if (!val.is_zero()) {
                  verdict.reason = "distribution is not involutive: form " + std::to_string(a + 1) +
                                   " does not annihilate the bracket of kernel fields " + std::to_string(i + 1) +
                                   " and " + std::to_string(j + 1);
                  verdict.witness = std::move(val);
                  return;
                }
              }
            }
          }
        }
        verdict.dirac = true;
      },
      spec.structure());
  return verdict;
}

std::vector<GradedPolynomial> courant_tensor(const DiracSpec& spec) {
  const auto& space = spec.space();
  const auto gens = generators(spec).sections;
  std::vector<GradedPolynomial> out;
  for (const auto& a : gens) {
    for (const auto& b : gens) {
      PontryaginSection br = courant_dorfman_bracket(space, a, b);
      for (const auto& c : gens) out.push_back(pairing(space, br, c));
    }
  }
  return out;
}

}  // namespace qgeom::dirac
