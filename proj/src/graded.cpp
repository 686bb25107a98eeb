#include "qgeom/graded.hpp"

#include <algorithm>
#include <sstream>

#include "lexer.hpp"
#include "qgeom/errors.hpp"

namespace qgeom::graded {

// ---------------------------------------------------------------------------
// GradedContext

GradedContext::GradedContext(std::vector<Coordinate> coordinates) {
  auto data = std::make_shared<Data>();
  for (std::size_t i = 0; i < coordinates.size(); ++i) {
    const auto& c = coordinates[i];
    if (c.name.empty()) throw DomainError("coordinate name must be nonempty");
    if (c.degree < 0) throw DomainError("coordinate '" + c.name + "' has negative degree");
    if (!data->index.emplace(c.name, i).second) throw DomainError("duplicate coordinate '" + c.name + "'");
  }
  data->coords = std::move(coordinates);
  data_ = std::move(data);
}

std::optional<std::size_t> GradedContext::find(std::string_view name) const {
  auto it = data_->index.find(name);
  if (it == data_->index.end()) return std::nullopt;
  return it->second;
}

std::size_t GradedContext::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw DomainError("unknown coordinate '" + std::string(name) + "'");
}

bool GradedContext::operator==(const GradedContext& other) const {
  return data_ == other.data_ || data_->coords == other.data_->coords;
}

GradedContext parse_context(std::string_view text) {
  std::vector<Coordinate> coords;
  for (const auto& [lineno, line] : detail::content_lines(text)) {
    std::istringstream in(line);
    Coordinate c;
    std::string extra;
    if (!(in >> c.name >> c.degree) || (in >> extra)) {
      throw ParseError("context line " + std::to_string(lineno) + ": expected `name degree`");
    }
    coords.push_back(std::move(c));
  }
  return GradedContext(std::move(coords));
}

// ---------------------------------------------------------------------------
// Monomial arithmetic

namespace {

// Product of two normal-form monomials. Returns the sign (+1, -1) or 0 when an
// odd coordinate would appear twice.
int multiply_monomials(const GradedContext& ctx, const Monomial& a, const Monomial& b, Monomial& out) {
  const std::size_t n = ctx.size();
  out.assign(n, 0);
  unsigned parity = 0;
  unsigned odd_b_before = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool odd = ctx.is_odd(i);
    if (odd && a[i] && b[i]) return 0;
    // every odd factor of a at position i must pass the odd factors of b at j < i
    if (odd && a[i]) parity += odd_b_before;
    if (odd && b[i]) ++odd_b_before;
    out[i] = a[i] + b[i];
  }
  return (parity & 1U) ? -1 : 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// GradedPolynomial

GradedPolynomial::GradedPolynomial(GradedContext ctx) : ctx_(std::move(ctx)) {}

GradedPolynomial GradedPolynomial::constant(const GradedContext& ctx, const Rational& c) {
  GradedPolynomial p(ctx);
  p.add_term(Monomial(ctx.size(), 0), c);
  return p;
}

GradedPolynomial GradedPolynomial::coordinate(const GradedContext& ctx, std::size_t index) {
  if (index >= ctx.size()) throw DomainError("coordinate index out of range");
  GradedPolynomial p(ctx);
  Monomial m(ctx.size(), 0);
  m[index] = 1;
  p.add_term(m, 1);
  return p;
}

GradedPolynomial GradedPolynomial::coordinate(const GradedContext& ctx, std::string_view name) {
  return coordinate(ctx, ctx.index_of(name));
}

GradedPolynomial GradedPolynomial::product_of(const GradedContext& ctx, std::span<const std::size_t> factors,
                                              const Rational& c) {
  GradedPolynomial p = constant(ctx, c);
  for (auto f : factors) p = p * coordinate(ctx, f);
  return p;
}

int GradedPolynomial::monomial_degree(const Monomial& m) const {
  int d = 0;
  for (std::size_t i = 0; i < m.size(); ++i) d += static_cast<int>(m[i]) * ctx_.degree(i);
  return d;
}

std::optional<int> GradedPolynomial::degree() const {
  std::optional<int> d;
  for (const auto& [m, c] : terms_) {
    const int md = monomial_degree(m);
    if (d && *d != md) return std::nullopt;
    d = md;
  }
  return d;
}

bool GradedPolynomial::is_homogeneous() const { return is_zero() || degree().has_value(); }

bool GradedPolynomial::depends_on(std::size_t index) const {
  return std::any_of(terms_.begin(), terms_.end(), [&](const auto& t) { return t.first[index] != 0; });
}

bool GradedPolynomial::depends_only_on(std::span<const std::size_t> allowed) const {
  for (std::size_t i = 0; i < ctx_.size(); ++i) {
    if (std::find(allowed.begin(), allowed.end(), i) != allowed.end()) continue;
    if (depends_on(i)) return false;
  }
  return true;
}

std::optional<Rational> GradedPolynomial::constant_value() const {
  if (terms_.empty()) return Rational(0);
  if (terms_.size() != 1) return std::nullopt;
  const auto& [m, c] = *terms_.begin();
  if (std::any_of(m.begin(), m.end(), [](auto e) { return e != 0; })) return std::nullopt;
  return c;
}

void GradedPolynomial::add_term(const Monomial& m, const Rational& c) {
  Rational value(c);
  value.canonicalize();
  if (value == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, value);
  if (!inserted) {
    it->second += value;
    if (it->second == 0) terms_.erase(it);
  }
}

void GradedPolynomial::require_same_context(const GradedPolynomial& other, const char* op) const {
  if (!(ctx_ == other.ctx_)) throw ContextMismatch(std::string(op) + ": polynomials live in different contexts");
}

GradedPolynomial& GradedPolynomial::operator+=(const GradedPolynomial& other) {
  require_same_context(other, "add");
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

GradedPolynomial& GradedPolynomial::operator-=(const GradedPolynomial& other) {
  require_same_context(other, "subtract");
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

GradedPolynomial& GradedPolynomial::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, coeff] : terms_) coeff *= c;
  return *this;
}

GradedPolynomial GradedPolynomial::operator-() const {
  GradedPolynomial r = *this;
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

GradedPolynomial operator*(const GradedPolynomial& a, const GradedPolynomial& b) {
  a.require_same_context(b, "multiply");
  GradedPolynomial r(a.ctx_);
  Monomial m;
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) {
      const int sign = multiply_monomials(a.ctx_, ma, mb, m);
      if (sign == 0) continue;
      Rational c = ca * cb;
      if (sign < 0) c = -c;
      r.add_term(m, c);
    }
  }
  return r;
}

bool GradedPolynomial::operator==(const GradedPolynomial& other) const {
  return ctx_ == other.ctx_ && terms_ == other.terms_;
}

// ---------------------------------------------------------------------------
// Printing and parsing

std::string to_string(const GradedPolynomial& f) {
  if (f.is_zero()) return "0";
  const auto& ctx = f.context();
  std::string out;
  bool first = true;
  for (const auto& [m, c] : f.terms()) {
    Rational mag = abs(c);
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    first = false;
    std::string mono;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!m[i]) continue;
      if (!mono.empty()) mono += "*";
      mono += ctx.coordinate(i).name;
      if (m[i] > 1) mono += "^" + std::to_string(m[i]);
    }
    if (mono.empty()) {
      out += mag.get_str();
    } else if (mag == 1) {
      out += mono;
    } else {
      out += mag.get_str() + "*" + mono;
    }
  }
  return out;
}

namespace {

class PolynomialParser {
 public:
  PolynomialParser(const GradedContext& ctx, std::string_view text) : ctx_(ctx), tokens_(detail::tokenize(text)) {}

  GradedPolynomial parse() {
    if (peek().kind == detail::TokenKind::End) throw ParseError("empty expression");
    GradedPolynomial result = sum();
    if (peek().kind != detail::TokenKind::End) fail("unexpected token '" + peek().text + "'");
    return result;
  }

 private:
  using K = detail::TokenKind;

  const detail::Token& peek() const { return tokens_[pos_]; }
  const detail::Token& next() { return tokens_[pos_++]; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at offset " + std::to_string(peek().offset));
  }

  GradedPolynomial sum() {
    GradedPolynomial acc(ctx_);
    bool negate = false;
    if (peek().kind == K::Minus) {
      next();
      negate = true;
    } else if (peek().kind == K::Plus) {
      next();
    }
    GradedPolynomial t = product();
    acc += negate ? -t : t;
    while (peek().kind == K::Plus || peek().kind == K::Minus) {
      const bool minus = next().kind == K::Minus;
      GradedPolynomial u = product();
      if (minus) acc -= u; else acc += u;
    }
    return acc;
  }

  GradedPolynomial product() {
    GradedPolynomial acc = power();
    while (peek().kind == K::Star) {
      next();
      acc = acc * power();
    }
    return acc;
  }

  GradedPolynomial power() {
    GradedPolynomial base = atom();
    if (peek().kind != K::Caret) return base;
    next();
    if (peek().kind != K::Number) fail("exponent must be a non-negative integer");
    const auto& tok = next();
    if (tok.text.find_first_not_of("0123456789") != std::string::npos || peek().kind == K::Slash) {
      fail("non-integer exponent '" + tok.text + "'");
    }
    const unsigned long e = std::stoul(tok.text);
    GradedPolynomial r = GradedPolynomial::constant(ctx_, 1);
    for (unsigned long k = 0; k < e && !r.is_zero(); ++k) r = r * base;
    return r;
  }

  GradedPolynomial atom() {
    const auto& tok = peek();
    switch (tok.kind) {
      case K::Number: {
        next();
        if (tok.text.find_first_not_of("0123456789") != std::string::npos) {
          fail("invalid literal '" + tok.text + "'");
        }
        Rational value(tok.text);
        if (peek().kind == K::Slash) {
          next();
          if (peek().kind != K::Number || peek().text.find_first_not_of("0123456789") != std::string::npos) {
            fail("malformed rational literal");
          }
          Rational den(next().text);
          if (den == 0) fail("zero denominator");
          value /= den;
        }
        value.canonicalize();
        return GradedPolynomial::constant(ctx_, value);
      }
      case K::Identifier: {
        next();
        auto idx = ctx_.find(tok.text);
        if (!idx) throw ParseError("unknown identifier '" + tok.text + "'");
        return GradedPolynomial::coordinate(ctx_, *idx);
      }
      case K::LParen: {
        next();
        GradedPolynomial inner = sum();
        if (peek().kind != K::RParen) fail("expected ')'");
        next();
        return inner;
      }
      default:
        fail(tok.kind == K::End ? "unexpected end of expression" : "unexpected token '" + tok.text + "'");
    }
  }

  const GradedContext& ctx_;
  std::vector<detail::Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

GradedPolynomial parse_polynomial(const GradedContext& ctx, std::string_view text) {
  return PolynomialParser(ctx, text).parse();
}

// ---------------------------------------------------------------------------
// Derivatives, rebasing, substitution

GradedPolynomial partial_derivative(const GradedPolynomial& f, std::size_t coord) {
  const auto& ctx = f.context();
  if (coord >= ctx.size()) throw DomainError("partial_derivative: coordinate index out of range");
  const bool odd = ctx.is_odd(coord);
  GradedPolynomial r(ctx);
  for (const auto& [m, c] : f.terms()) {
    if (m[coord] == 0) continue;
    unsigned passed = 0;
    if (odd) {
      for (std::size_t j = 0; j < coord; ++j) {
        if (ctx.is_odd(j)) passed += m[j];
      }
    }
    Monomial dm = m;
    dm[coord] -= 1;
    Rational coeff = c * m[coord];
    if (passed & 1U) coeff = -coeff;
    r.add_term(dm, coeff);
  }
  return r;
}

GradedPolynomial partial_derivative(const GradedPolynomial& f, std::string_view coord) {
  return partial_derivative(f, f.context().index_of(coord));
}

GradedPolynomial rebase(const GradedPolynomial& f, const GradedContext& target) {
  const auto& src = f.context();
  if (src == target) return f;
  std::vector<std::size_t> map(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto j = target.find(src.coordinate(i).name);
    if (!j) {
      if (f.depends_on(i)) {
        throw ContextMismatch("rebase: coordinate '" + src.coordinate(i).name + "' missing from target context");
      }
      map[i] = target.size();
      continue;
    }
    if (target.degree(*j) != src.degree(i)) {
      throw ContextMismatch("rebase: degree of '" + src.coordinate(i).name + "' differs");
    }
    map[i] = *j;
  }
  // Re-multiplying factor by factor redoes the sign bookkeeping for the new order.
  GradedPolynomial r(target);
  for (const auto& [m, c] : f.terms()) {
    GradedPolynomial term = GradedPolynomial::constant(target, c);
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::uint32_t e = 0; e < m[i]; ++e) term = term * GradedPolynomial::coordinate(target, map[i]);
    }
    r += term;
  }
  return r;
}

GradedPolynomial substitute(const GradedPolynomial& f, const std::map<std::size_t, Rational>& values) {
  const auto& ctx = f.context();
  for (const auto& [i, v] : values) {
    if (i >= ctx.size()) throw DomainError("substitute: coordinate index out of range");
    if (ctx.is_odd(i)) throw DomainError("substitute: cannot assign a value to odd coordinate '" + ctx.coordinate(i).name + "'");
  }
  GradedPolynomial r(ctx);
  for (const auto& [m, c] : f.terms()) {
    Rational coeff = c;
    Monomial rm = m;
    for (const auto& [i, v] : values) {
      if (m[i] == 0) continue;
      Rational pw = 1;
      for (std::uint32_t e = 0; e < m[i]; ++e) pw *= v;
      coeff *= pw;
      rm[i] = 0;
    }
    r.add_term(rm, coeff);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Vector fields

GradedVectorField::GradedVectorField(GradedContext ctx, std::vector<GradedPolynomial> components, int degree)
    : ctx_(std::move(ctx)), components_(std::move(components)), degree_(degree) {
  if (components_.size() != ctx_.size()) throw DomainError("vector field needs one component per coordinate");
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    if (!(c.context() == ctx_)) throw ContextMismatch("vector field component in a different context");
    if (c.is_zero()) continue;
    auto d = c.degree();
    if (!d) throw DomainError("component for '" + ctx_.coordinate(i).name + "' is not homogeneous");
    if (*d - ctx_.degree(i) != degree_) {
      throw DomainError("component for '" + ctx_.coordinate(i).name + "' has degree " + std::to_string(*d) +
                        ", expected " + std::to_string(degree_ + ctx_.degree(i)));
    }
  }
}

GradedVectorField GradedVectorField::infer(GradedContext ctx, std::vector<GradedPolynomial> components) {
  std::optional<int> deg;
  for (std::size_t i = 0; i < components.size() && i < ctx.size(); ++i) {
    if (components[i].is_zero()) continue;
    auto d = components[i].degree();
    if (!d) throw DomainError("component for '" + ctx.coordinate(i).name + "' is not homogeneous");
    const int vd = *d - ctx.degree(i);
    if (deg && *deg != vd) throw DomainError("vector field is not homogeneous");
    deg = vd;
  }
  if (!deg) throw DomainError("cannot infer the degree of the zero vector field");
  return GradedVectorField(std::move(ctx), std::move(components), *deg);
}

GradedVectorField GradedVectorField::zero(const GradedContext& ctx, int degree) {
  return GradedVectorField(ctx, std::vector<GradedPolynomial>(ctx.size(), GradedPolynomial(ctx)), degree);
}

bool GradedVectorField::is_zero() const {
  return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.is_zero(); });
}

bool GradedVectorField::operator==(const GradedVectorField& other) const {
  return ctx_ == other.ctx_ && components_ == other.components_ && (degree_ == other.degree_ || is_zero());
}

std::string to_string(const GradedVectorField& v) {
  std::string out;
  for (std::size_t i = 0; i < v.components().size(); ++i) {
    const auto& c = v.component(i);
    if (c.is_zero()) continue;
    if (!out.empty()) out += " + ";
    out += "(" + to_string(c) + ")*d/d" + v.context().coordinate(i).name;
  }
  return out.empty() ? "0" : out;
}

GradedVectorField parse_vector_field(const GradedContext& ctx, std::string_view text) {
  std::vector<GradedPolynomial> comps(ctx.size(), GradedPolynomial(ctx));
  std::vector<bool> seen(ctx.size(), false);
  std::optional<int> declared;
  for (const auto& [lineno, line] : detail::content_lines(text)) {
    const auto eq = line.find('=');
    const std::string where = "field line " + std::to_string(lineno);
    if (eq == std::string::npos) {
      // optional explicit degree for fields that may be zero
      std::istringstream in(line);
      std::string kw;
      int d;
      if (in >> kw >> d && kw == "degree") {
        declared = d;
        continue;
      }
      throw ParseError(where + ": expected `name = expression`");
    }
    const std::string name(detail::trim(std::string_view(line).substr(0, eq)));
    auto idx = ctx.find(name);
    if (!idx) throw ParseError(where + ": unknown coordinate '" + name + "'");
    if (seen[*idx]) throw ParseError(where + ": duplicate component for '" + name + "'");
    seen[*idx] = true;
    try {
      comps[*idx] = parse_polynomial(ctx, std::string_view(line).substr(eq + 1));
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (declared) return GradedVectorField(ctx, std::move(comps), *declared);
  return GradedVectorField::infer(ctx, std::move(comps));
}

GradedPolynomial apply_vector_field(const GradedVectorField& v, const GradedPolynomial& f) {
  if (!(v.context() == f.context())) throw ContextMismatch("apply_vector_field: contexts differ");
  GradedPolynomial r(f.context());
  for (std::size_t i = 0; i < v.components().size(); ++i) {
    const auto& vi = v.component(i);
    if (vi.is_zero() || !f.depends_on(i)) continue;
    r += vi * partial_derivative(f, i);
  }
  return r;
}

GradedVectorField commutator(const GradedVectorField& v, const GradedVectorField& w) {
  if (!(v.context() == w.context())) throw ContextMismatch("commutator: contexts differ");
  const bool sign_flip = ((v.degree() * w.degree()) & 1) != 0;
  std::vector<GradedPolynomial> comps;
  comps.reserve(v.components().size());
  for (std::size_t i = 0; i < v.components().size(); ++i) {
    GradedPolynomial vw = apply_vector_field(v, w.component(i));
    GradedPolynomial wv = apply_vector_field(w, v.component(i));
    comps.push_back(sign_flip ? vw + wv : vw - wv);
  }
  return GradedVectorField(v.context(), std::move(comps), v.degree() + w.degree());
}

QVerdict is_q_structure(const GradedVectorField& v) {
  QVerdict verdict;
  if (v.degree() != 1) {
    verdict.reason = "degree " + std::to_string(v.degree()) + " != 1";
    return verdict;
  }
  // For odd v, (1/2)[v,v]^i = v(v^i).
  for (std::size_t i = 0; i < v.components().size(); ++i) {
    GradedPolynomial half = apply_vector_field(v, v.component(i));
    if (!half.is_zero()) {
      verdict.reason = "[Q,Q] != 0";
      verdict.witness_coordinate = i;
      verdict.witness = std::move(half);
      return verdict;
    }
  }
  verdict.is_q = true;
  return verdict;
}

ContextWithField de_rham_q(std::size_t dim) {
  if (dim == 0) throw DomainError("de_rham_q: dimension must be positive");
  std::vector<Coordinate> coords;
  for (std::size_t i = 1; i <= dim; ++i) coords.push_back({"sigma" + std::to_string(i), 0});
  for (std::size_t i = 1; i <= dim; ++i) coords.push_back({"theta" + std::to_string(i), 1});
  GradedContext ctx(std::move(coords));
  std::vector<GradedPolynomial> comps(2 * dim, GradedPolynomial(ctx));
  for (std::size_t i = 0; i < dim; ++i) comps[i] = GradedPolynomial::coordinate(ctx, dim + i);
  GradedVectorField q(ctx, std::move(comps), 1);
  return {std::move(ctx), std::move(q)};
}

// ---------------------------------------------------------------------------
// Bivectors

BivectorSpec::BivectorSpec(GradedContext base, std::map<std::pair<std::size_t, std::size_t>, GradedPolynomial> upper)
    : base_(std::move(base)) {
  for (std::size_t i = 0; i < base_.size(); ++i) {
    if (base_.degree(i) != 0) throw DomainError("bivector base coordinates must have degree 0");
  }
  for (auto& [ij, poly] : upper) {
    const auto [i, j] = ij;
    if (i >= j || j >= base_.size()) {
      throw DomainError("bivector component (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                        ") must satisfy 1 <= i < j <= n");
    }
    GradedPolynomial p = rebase(poly, base_);
    if (!p.is_zero()) upper_.emplace(ij, std::move(p));
  }
}

BivectorSpec BivectorSpec::zero(const GradedContext& base) { return BivectorSpec(base, {}); }

GradedPolynomial BivectorSpec::component(std::size_t i, std::size_t j) const {
  if (i == j) return GradedPolynomial(base_);
  const bool swapped = i > j;
  auto it = upper_.find(swapped ? std::pair{j, i} : std::pair{i, j});
  if (it == upper_.end()) return GradedPolynomial(base_);
  return swapped ? -it->second : it->second;
}

GradedContext euclidean_base(std::size_t n) {
  std::vector<Coordinate> coords;
  for (std::size_t i = 1; i <= n; ++i) coords.push_back({"x" + std::to_string(i), 0});
  return GradedContext(std::move(coords));
}

GradedContext shifted_cotangent(const GradedContext& base) {
  std::vector<Coordinate> coords = base.coordinates();
  for (const auto& c : coords) {
    if (c.degree != 0) throw DomainError("shifted_cotangent: base coordinates must have degree 0");
  }
  const std::size_t n = coords.size();
  for (std::size_t i = 1; i <= n; ++i) coords.push_back({"p" + std::to_string(i), 1});
  return GradedContext(std::move(coords));
}

ContextWithField bivector_to_q(const BivectorSpec& pi) {
  const std::size_t n = pi.dimension();
  GradedContext ctx = shifted_cotangent(pi.base());
  auto p = [&](std::size_t j) { return GradedPolynomial::coordinate(ctx, n + j); };

  std::vector<GradedPolynomial> lifted;  // full antisymmetric matrix over ctx
  lifted.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) lifted.push_back(rebase(pi.component(i, j), ctx));
  }
  auto entry = [&](std::size_t i, std::size_t j) -> const GradedPolynomial& { return lifted[i * n + j]; };

  std::vector<GradedPolynomial> comps(2 * n, GradedPolynomial(ctx));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!entry(i, j).is_zero()) comps[i] += entry(i, j) * p(j);
    }
  }
  const Rational half(1, 2);
  for (std::size_t i = 0; i < n; ++i) {
    GradedPolynomial acc(ctx);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (entry(j, k).is_zero()) continue;
        GradedPolynomial d = partial_derivative(entry(j, k), i);
        if (!d.is_zero()) acc += d * p(j) * p(k);
      }
    }
    comps[n + i] = half * acc;
  }
  GradedVectorField q(ctx, std::move(comps), 1);
  return {std::move(ctx), std::move(q)};
}

std::vector<JacobiEntry> jacobi_residual(const BivectorSpec& pi) {
  const std::size_t n = pi.dimension();
  std::vector<GradedPolynomial> entries;
  entries.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) entries.push_back(pi.component(i, j));
  }
  auto entry = [&](std::size_t i, std::size_t j) -> const GradedPolynomial& { return entries[i * n + j]; };
  auto cyclic_term = [&](std::size_t a, std::size_t b, std::size_t c) {
    // sum_l d_l pi^{ab} pi^{lc}
    GradedPolynomial acc(pi.base());
    for (std::size_t l = 0; l < n; ++l) {
      if (entry(l, c).is_zero()) continue;
      GradedPolynomial d = partial_derivative(entry(a, b), l);
      if (!d.is_zero()) acc += d * entry(l, c);
    }
    return acc;
  };

  std::vector<JacobiEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        GradedPolynomial r = cyclic_term(i, j, k) + cyclic_term(k, i, j) + cyclic_term(j, k, i);
        out.push_back({i, j, k, std::move(r)});
      }
    }
  }
  return out;
}

GradedVectorField cotangent_lift(const GradedContext& base, const std::vector<GradedPolynomial>& components) {
  const std::size_t n = base.size();
  if (components.size() != n) throw DomainError("cotangent_lift: field has wrong number of components");
  GradedContext ctx = shifted_cotangent(base);
  std::vector<GradedPolynomial> x_part;
  for (const auto& c : components) {
    GradedPolynomial r = rebase(c, ctx);
    if (!r.is_zero() && r.degree() != 0) throw DomainError("cotangent_lift: components must be functions of x");
    x_part.push_back(std::move(r));
  }
  std::vector<GradedPolynomial> comps(2 * n, GradedPolynomial(ctx));
  for (std::size_t i = 0; i < n; ++i) {
    comps[i] = x_part[i];
    GradedPolynomial acc(ctx);
    for (std::size_t j = 0; j < n; ++j) {
      GradedPolynomial d = partial_derivative(x_part[j], i);
      if (!d.is_zero()) acc += d * GradedPolynomial::coordinate(ctx, n + j);
    }
    comps[n + i] = -acc;
  }
  return GradedVectorField(ctx, std::move(comps), 0);
}

PreservationVerdict poisson_preservation_check(const std::vector<GradedPolynomial>& field, const BivectorSpec& pi) {
  GradedVectorField lift = cotangent_lift(pi.base(), field);
  ContextWithField q = bivector_to_q(pi);
  GradedVectorField c = commutator(lift, q.field);
  PreservationVerdict verdict;
  for (std::size_t i = 0; i < c.components().size(); ++i) {
    if (!c.component(i).is_zero()) verdict.witness.emplace_back(c.context().coordinate(i).name, c.component(i));
  }
  verdict.preserved = verdict.witness.empty();
  return verdict;
}

}  // namespace qgeom::graded
