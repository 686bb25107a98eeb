#include "qgeom/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "lexer.hpp"
#include "qgeom/errors.hpp"

namespace qgeom::io {

using integrators::Expression;
using integrators::State;
using integrators::SystemKind;
using integrators::TrajectoryRecord;

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(sep);
    out.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  for (auto w : split(s, ' ')) {
    w = detail::trim(w);
    if (!w.empty()) out.push_back(w);
  }
  return out;
}

std::size_t parse_index(std::string_view s, std::size_t limit, std::size_t lineno) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v == 0 || v > limit) {
    throw ParseError("line " + std::to_string(lineno) + ": index '" + std::string(s) + "' out of range 1.." +
                     std::to_string(limit));
  }
  return v - 1;
}

std::vector<double> parse_values(std::string_view s, std::size_t expected, std::size_t lineno) {
  std::vector<double> out;
  for (auto item : split(s, ',')) {
    const Expression e = expr::parse_expression(detail::trim(item), {});
    out.push_back(e.evaluate({}));
  }
  if (out.size() != expected) {
    throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(expected) + " values, got " +
                     std::to_string(out.size()));
  }
  return out;
}

struct Header {
  std::string kind;
  std::size_t n;
};

Header parse_header(std::string_view line, std::size_t lineno) {
  const auto close = line.find(']');
  if (line.empty() || line.front() != '[' || close == std::string_view::npos) {
    throw ParseError("line " + std::to_string(lineno) + ": expected a section header like [hamiltonian] n=1");
  }
  Header h{std::string(detail::trim(line.substr(1, close - 1))), 0};
  std::string rest(line.substr(close + 1));
  rest.erase(std::remove(rest.begin(), rest.end(), ' '), rest.end());
  if (rest.rfind("n=", 0) != 0) throw ParseError("line " + std::to_string(lineno) + ": missing n=<dimension>");
  h.n = parse_index(std::string_view(rest).substr(2), 1000, lineno) + 1;
  return h;
}

Expression parse_at(std::string_view text, const std::vector<std::string>& names, std::size_t lineno) {
  try {
    return expr::parse_expression(text, names);
  } catch (const ParseError& e) {
    throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
  }
}

}  // namespace

LoadedSystem parse_system(std::string_view text) {
  const auto lines = detail::content_lines(text);
  if (lines.empty()) throw ParseError("empty system file");
  const Header header = parse_header(lines.front().second, lines.front().first);
  const std::size_t n = header.n;

  std::optional<Expression> energy_fn;
  std::vector<std::vector<Expression>> constraints;
  std::map<std::pair<std::size_t, std::size_t>, Expression> J, R, G;
  std::map<std::size_t, Expression> F;
  State init;
  init.q.assign(n, 0.0);

  std::vector<std::string> names;
  std::vector<std::string> constraint_names;
  if (header.kind == "hamiltonian") {
    names = integrators::hamiltonian_variable_names(n);
    init.second.assign(n, 0.0);
  } else if (header.kind == "lagrangian") {
    names = integrators::lagrangian_variable_names(n);
    init.second.assign(n, 0.0);
    constraint_names.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(n));
    for (std::size_t i = 1; i <= n; ++i) constraint_names.push_back("dq" + std::to_string(i));
  } else if (header.kind == "port") {
    names = integrators::port_variable_names(n);
  } else {
    throw ParseError("unknown system kind '" + header.kind + "'");
  }
  const std::string energy_key = header.kind == "lagrangian" ? "L" : "H";
  const std::string second_key = header.kind == "hamiltonian" ? "p0" : "v0";

  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [lineno, line] = lines[k];
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (header.kind == "lagrangian" && line.rfind("constraint:", 0) == 0) {
      const Expression form = parse_at(std::string_view(line).substr(11), constraint_names, lineno);
      std::vector<Expression> coeffs;
      std::map<std::size_t, Expression> at_rest;
      for (std::size_t i = 0; i < n; ++i) {
        coeffs.push_back(form.derivative(n + i));
        at_rest[n + i] = Expression();
        for (auto v : coeffs.back().variables()) {
          if (v >= n) throw ParseError(where + "constraint is not linear in the velocities");
        }
      }
      const Expression rest = form.substitute(at_rest);
      if (!rest.is_constant() || rest.constant_value() != 0.0) {
        throw ParseError(where + "constraint must be a one-form sum_i c_i(q) dq_i");
      }
      constraints.push_back(std::move(coeffs));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + "expected 'key = value'");
    const auto lhs = words(std::string_view(line).substr(0, eq));
    const std::string_view rhs = detail::trim(std::string_view(line).substr(eq + 1));
    if (lhs.empty()) throw ParseError(where + "missing key");
    const std::string key(lhs[0]);

    if (lhs.size() == 1 && key == energy_key) {
      if (energy_fn) throw ParseError(where + "duplicate " + key);
      energy_fn = parse_at(rhs, names, lineno);
    } else if (lhs.size() == 1 && key == "t0") {
      init.t = parse_values(rhs, 1, lineno)[0];
    } else if (lhs.size() == 1 && key == (header.kind == "port" ? "x0" : "q0")) {
      init.q = parse_values(rhs, n, lineno);
    } else if (lhs.size() == 1 && header.kind != "port" && key == second_key) {
      init.second = parse_values(rhs, n, lineno);
    } else if (header.kind == "port" && lhs.size() == 3 && (key == "J" || key == "R" || key == "g")) {
      std::size_t i = parse_index(lhs[1], n, lineno);
      std::size_t j = parse_index(lhs[2], key == "g" ? 1000 : n, lineno);
      Expression value = parse_at(rhs, names, lineno);
      if (key == "J") {
        if (i == j) throw ParseError(where + "J has no diagonal entries");
        if (i > j) {
          std::swap(i, j);
          value = -value;
        }
      } else if (key == "R" && i > j) {
        std::swap(i, j);
      }
      auto& target = key == "J" ? J : key == "R" ? R : G;
      if (!target.emplace(std::make_pair(i, j), value).second) throw ParseError(where + "duplicate " + key + " entry");
    } else if (header.kind == "port" && lhs.size() == 2 && key == "f") {
      const std::size_t k2 = parse_index(lhs[1], 1000, lineno);
      if (!F.emplace(k2, parse_at(rhs, names, lineno)).second) throw ParseError(where + "duplicate f entry");
    } else {
      throw ParseError(where + "unexpected key '" + std::string(detail::trim(std::string_view(line).substr(0, eq))) +
                       "'");
    }
  }
  if (!energy_fn) throw ParseError("missing " + energy_key + " = ...");

  if (header.kind == "hamiltonian") return {integrators::CanonicalHamiltonian(n, *energy_fn), init};
  if (header.kind == "lagrangian") return {integrators::ConstrainedLagrangian(n, *energy_fn, constraints), init};

  std::size_t inputs = F.empty() ? 0 : F.rbegin()->first + 1;
  for (const auto& [ij, _] : G) inputs = std::max(inputs, ij.second + 1);
  std::vector<Expression> f(inputs);
  for (std::size_t k = 0; k < inputs; ++k) {
    if (!F.count(k)) throw ParseError("missing input f " + std::to_string(k + 1));
    f[k] = F[k];
  }
  std::vector<std::vector<Expression>> g(n, std::vector<Expression>(inputs));
  for (const auto& [ij, e] : G) g[ij.first][ij.second] = e;
  std::vector<integrators::PortHamiltonian::Entry> j_upper, r_upper;
  for (const auto& [ij, e] : J) j_upper.push_back({ij.first, ij.second, e});
  for (const auto& [ij, e] : R) r_upper.push_back({ij.first, ij.second, e});
  return {integrators::PortHamiltonian(n, *energy_fn, j_upper, r_upper, g, f), init};
}

LoadedSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_system(buf.str());
}

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

double parse_number(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad number '" + std::string(s) + "'");
  return v;
}

std::optional<double> parse_cell(std::string_view s) {
  if (s.empty()) return std::nullopt;
  return parse_number(s);
}

void write_optional(std::ostream& os, const std::optional<double>& v) {
  os << ',';
  if (v) os << format_number(*v);
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
  const std::size_t n = rec.dimension;
  const bool port = rec.kind == SystemKind::Port;
  os << 't';
  for (std::size_t i = 1; i <= n; ++i) os << (port ? ",x" : ",q") << i;
  if (!port) {
    for (std::size_t i = 1; i <= n; ++i) os << (rec.kind == SystemKind::Hamiltonian ? ",p" : ",v") << i;
  }
  os << ",energy,constraint_residual,power_residual\n";
  for (const auto& s : rec.samples) {
    os << format_number(s.state.t);
    for (double x : s.state.q) os << ',' << format_number(x);
    for (double x : s.state.second) os << ',' << format_number(x);
    os << ',' << format_number(s.energy);
    write_optional(os, s.constraint_residual);
    write_optional(os, s.power_residual);
    os << '\n';
  }
  if (!os) throw std::runtime_error("failed writing trajectory CSV");
}

TrajectoryRecord read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty trajectory CSV");
  const auto cols = split(line, ',');
  if (cols.size() < 5 || cols[0] != "t") throw ParseError("bad trajectory header");
  TrajectoryRecord rec;
  std::size_t n = 0;
  while (1 + n < cols.size() && (cols[1 + n][0] == 'q' || cols[1 + n][0] == 'x')) ++n;
  if (n == 0) throw ParseError("trajectory header has no coordinates");
  rec.dimension = n;
  std::size_t second = 0;
  if (cols[1][0] == 'x') {
    rec.kind = SystemKind::Port;
  } else {
    if (cols.size() < 1 + 2 * n + 3) throw ParseError("bad trajectory header");
    rec.kind = cols[1 + n][0] == 'p' ? SystemKind::Hamiltonian : SystemKind::Lagrangian;
    second = n;
  }
  const std::size_t width = 1 + n + second + 3;
  if (cols.size() != width) throw ParseError("bad trajectory header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != width) throw ParseError("trajectory row has " + std::to_string(cells.size()) + " cells");
    integrators::Sample s;
    s.state.t = parse_number(cells[0]);
    for (std::size_t i = 0; i < n; ++i) s.state.q.push_back(parse_number(cells[1 + i]));
    for (std::size_t i = 0; i < second; ++i) s.state.second.push_back(parse_number(cells[1 + n + i]));
    s.energy = parse_number(cells[width - 3]);
    s.constraint_residual = parse_cell(cells[width - 2]);
    s.power_residual = parse_cell(cells[width - 1]);
    rec.samples.push_back(std::move(s));
  }
  return rec;
}

void write_error_table_csv(std::ostream& os, const bench::ErrorTable& table) {
  os << "method";
  for (const auto& c : table.columns) os << ',' << c;
  os << '\n';
  for (const auto& row : table.rows) {
    os << row.method;
    for (double v : row.values) os << ',' << format_number(v);
    os << '\n';
  }
  if (!os) throw std::runtime_error("failed writing error table CSV");
}

bench::ErrorTable read_error_table_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty error table CSV");
  const auto cols = split(line, ',');
  if (cols.empty() || cols[0] != "method") throw ParseError("bad error table header");
  bench::ErrorTable table;
  for (std::size_t i = 1; i < cols.size(); ++i) table.columns.emplace_back(cols[i]);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != cols.size()) throw ParseError("error table row has wrong width");
    bench::ErrorRow row{std::string(cells[0]), {}};
    for (std::size_t i = 1; i < cells.size(); ++i) row.values.push_back(parse_number(cells[i]));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace qgeom::io
