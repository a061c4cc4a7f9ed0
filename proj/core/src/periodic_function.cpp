#include "ldpx/periodic_function.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ldpx/errors.hpp"

namespace ldpx {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Catmull-Rom weights for nodes i-1, i, i+1, i+2 at fractional offset f.
std::array<double, 4> cubic_weights(double f) {
  const double f2 = f * f;
  const double f3 = f2 * f;
  return {0.5 * (-f3 + 2.0 * f2 - f), 0.5 * (3.0 * f3 - 5.0 * f2 + 2.0),
          0.5 * (-3.0 * f3 + 4.0 * f2 + f), 0.5 * (f3 - f2)};
}

std::array<double, 4> cubic_weight_derivatives(double f) {
  const double f2 = f * f;
  return {0.5 * (-3.0 * f2 + 4.0 * f - 1.0), 0.5 * (9.0 * f2 - 10.0 * f),
          0.5 * (-9.0 * f2 + 8.0 * f + 1.0), 0.5 * (3.0 * f2 - 2.0 * f)};
}

struct Stencil {
  std::array<std::size_t, 4> idx{};
  double f = 0.0;
};

Stencil locate(double x, std::size_t m) {
  double u = x * static_cast<double>(m);
  u -= std::floor(u / static_cast<double>(m)) * static_cast<double>(m);
  const double base = std::floor(u);
  Stencil s;
  s.f = u - base;
  const auto mi = static_cast<long long>(m);
  const auto i = static_cast<long long>(base);
  for (int k = 0; k < 4; ++k) {
    long long j = (i - 1 + k) % mi;
    if (j < 0) j += mi;
    s.idx[static_cast<std::size_t>(k)] = static_cast<std::size_t>(j);
  }
  return s;
}

std::vector<double> cyclic_difference(const std::vector<double>& f) {
  const std::size_t m = f.size();
  std::vector<double> d(m);
  for (std::size_t j = 0; j < m; ++j) d[j] = f[(j + 1) % m] - f[j];
  return d;
}

void seam_check_sequence(const std::vector<double>& seq, double abs_tol, SeamCheck& out) {
  const std::size_t m = seq.size();
  if (m < 8) return;
  double scale = 1.0;
  for (double v : seq) scale = std::max(scale, std::abs(v));
  std::vector<double> d = seq;
  for (int order = 1; order <= 3; ++order) {
    d = cyclic_difference(d);
    const std::size_t first_seam = m - static_cast<std::size_t>(order);
    double interior = 0.0;
    double seam = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j < first_seam) {
        interior = std::max(interior, std::abs(d[j]));
      } else {
        seam = std::max(seam, std::abs(d[j]));
      }
    }
    const double tol = abs_tol * scale;
    const double ratio = seam / (interior + tol);
    if (ratio > out.worst_ratio) {
      out.worst_ratio = ratio;
      out.worst_order = order;
    }
    if (seam > 2.0 * interior + tol) out.ok = false;
  }
}

}  // namespace

double interpolate(const PeriodicTable& table, const Point& x) {
  const std::size_t m = table.m;
  const Stencil sx = locate(x[0], m);
  const auto wx = cubic_weights(sx.f);
  if (table.dim == 1) {
    double v = 0.0;
    for (int a = 0; a < 4; ++a) v += wx[a] * table.values[sx.idx[a]];
    return v;
  }
  const Stencil sy = locate(x[1], m);
  const auto wy = cubic_weights(sy.f);
  double v = 0.0;
  for (int b = 0; b < 4; ++b) {
    double row = 0.0;
    for (int a = 0; a < 4; ++a) row += wx[a] * table.values[sx.idx[a] + m * sy.idx[b]];
    v += wy[b] * row;
  }
  return v;
}

std::array<double, 2> interpolate_gradient(const PeriodicTable& table, const Point& x) {
  const std::size_t m = table.m;
  const double md = static_cast<double>(m);
  const Stencil sx = locate(x[0], m);
  const auto wx = cubic_weights(sx.f);
  const auto dx = cubic_weight_derivatives(sx.f);
  if (table.dim == 1) {
    double g = 0.0;
    for (int a = 0; a < 4; ++a) g += dx[a] * table.values[sx.idx[a]];
    return {g * md, 0.0};
  }
  const Stencil sy = locate(x[1], m);
  const auto wy = cubic_weights(sy.f);
  const auto dy = cubic_weight_derivatives(sy.f);
  double gx = 0.0;
  double gy = 0.0;
  for (int b = 0; b < 4; ++b) {
    double row = 0.0;
    double drow = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double v = table.values[sx.idx[a] + m * sy.idx[b]];
      row += wx[a] * v;
      drow += dx[a] * v;
    }
    gx += wy[b] * drow;
    gy += dy[b] * row;
  }
  return {gx * md, gy * md};
}

PeriodicFunction PeriodicFunction::constant(double c) {
  PeriodicFunction f;
  f.c0_ = c;
  return f;
}

PeriodicFunction PeriodicFunction::fourier(double c0, std::vector<FourierTerm> terms) {
  PeriodicFunction f;
  f.c0_ = c0;
  for (auto& t : terms) {
    if (t.k[0] == 0 && t.k[1] == 0) {
      f.c0_ += t.cos_coef;
      continue;
    }
    if (t.cos_coef != 0.0 || t.sin_coef != 0.0) f.terms_.push_back(t);
  }
  return f;
}

PeriodicFunction PeriodicFunction::cosine(int k, double amplitude) {
  return fourier(0.0, {FourierTerm{{k, 0}, amplitude, 0.0}});
}

PeriodicFunction PeriodicFunction::sine(int k, double amplitude) {
  return fourier(0.0, {FourierTerm{{k, 0}, 0.0, amplitude}});
}

PeriodicFunction PeriodicFunction::table(PeriodicTable table) {
  if (table.dim != 1 && table.dim != 2) throw ConfigError("table dimension must be 1 or 2");
  const std::size_t expected = table.dim == 1 ? table.m : table.m * table.m;
  if (table.m < 4 || table.values.size() != expected) {
    throw ConfigError("table needs at least 4 points per axis and m^dim values");
  }
  for (double v : table.values) {
    if (!std::isfinite(v)) throw ConfigError("table contains a non-finite value");
  }
  PeriodicFunction f;
  f.table_ = std::move(table);
  return f;
}

double PeriodicFunction::operator()(const Point& x) const {
  double v = c0_;
  for (const auto& t : terms_) {
    const double phase = kTwoPi * (t.k[0] * x[0] + t.k[1] * x[1]);
    if (t.cos_coef != 0.0) v += t.cos_coef * std::cos(phase);
    if (t.sin_coef != 0.0) v += t.sin_coef * std::sin(phase);
  }
  if (table_) v += interpolate(*table_, x);
  return v;
}

std::array<double, 2> PeriodicFunction::gradient(const Point& x) const {
  std::array<double, 2> g{0.0, 0.0};
  for (const auto& t : terms_) {
    const double phase = kTwoPi * (t.k[0] * x[0] + t.k[1] * x[1]);
    const double d = kTwoPi * (-t.cos_coef * std::sin(phase) + t.sin_coef * std::cos(phase));
    g[0] += d * t.k[0];
    g[1] += d * t.k[1];
  }
  if (table_) {
    const auto gt = interpolate_gradient(*table_, x);
    g[0] += gt[0];
    g[1] += gt[1];
  }
  return g;
}

std::vector<double> PeriodicFunction::sample(int dim, std::size_t n) const {
  const double h = 1.0 / static_cast<double>(n);
  std::vector<double> out;
  if (dim == 1) {
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back((*this)({i * h, 0.0}));
  } else {
    out.reserve(n * n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) out.push_back((*this)({i * h, j * h}));
    }
  }
  return out;
}

int PeriodicFunction::max_harmonic() const {
  int k = 0;
  for (const auto& t : terms_) k = std::max({k, std::abs(t.k[0]), std::abs(t.k[1])});
  if (table_) k = std::max(k, static_cast<int>(table_->m / 2));
  return k;
}

int PeriodicFunction::min_dim() const {
  int d = 1;
  for (const auto& t : terms_) {
    if (t.k[1] != 0) d = 2;
  }
  if (table_) d = std::max(d, table_->dim);
  return d;
}

SeamCheck PeriodicFunction::seam_check(double abs_tol) const {
  SeamCheck out;
  if (!table_) return out;
  const auto& tab = *table_;
  const std::size_t m = tab.m;
  if (tab.dim == 1) {
    seam_check_sequence(tab.values, abs_tol, out);
    return out;
  }
  std::vector<double> line(m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < m; ++i) line[i] = tab.values[i + m * j];
    seam_check_sequence(line, abs_tol, out);
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) line[j] = tab.values[i + m * j];
    seam_check_sequence(line, abs_tol, out);
  }
  return out;
}

PeriodicFunction PeriodicFunction::shifted(double c) const {
  PeriodicFunction f = *this;
  f.c0_ += c;
  return f;
}

PeriodicFunction PeriodicFunction::scaled(double factor) const {
  PeriodicFunction f = *this;
  f.c0_ *= factor;
  for (auto& t : f.terms_) {
    t.cos_coef *= factor;
    t.sin_coef *= factor;
  }
  if (f.table_) {
    for (double& v : f.table_->values) v *= factor;
  }
  return f;
}

PeriodicFunction PeriodicFunction::plus(const PeriodicFunction& other) const {
  PeriodicFunction f = *this;
  f.c0_ += other.c0_;
  for (const auto& t : other.terms_) {
    auto it = std::find_if(f.terms_.begin(), f.terms_.end(),
                           [&](const FourierTerm& u) { return u.k == t.k; });
    if (it == f.terms_.end()) {
      f.terms_.push_back(t);
    } else {
      it->cos_coef += t.cos_coef;
      it->sin_coef += t.sin_coef;
    }
  }
  if (other.table_) {
    if (!f.table_) {
      f.table_ = other.table_;
    } else {
      const PeriodicTable& a = *f.table_;
      const PeriodicTable& b = *other.table_;
      const int dim = std::max(a.dim, b.dim);
      const std::size_t m = std::max(a.m, b.m);
      PeriodicTable merged{dim, m, {}};
      const double h = 1.0 / static_cast<double>(m);
      const std::size_t count = dim == 1 ? m : m * m;
      merged.values.resize(count);
      for (std::size_t idx = 0; idx < count; ++idx) {
        const Point x{static_cast<double>(idx % m) * h, static_cast<double>(idx / m) * h};
        merged.values[idx] = interpolate(a, x) + interpolate(b, x);
      }
      f.table_ = std::move(merged);
    }
  }
  return f;
}

}  // namespace ldpx
