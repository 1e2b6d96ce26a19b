#include "u1chaos/symbolic.hpp"

#include <sstream>

namespace u1chaos {

namespace {
BigInt big_gcd(BigInt a, BigInt b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    BigInt t = a % b;
    a = b;
    b = t;
  }
  return a;
}
}  // namespace

Polynomial::Polynomial(BigInt constant) {
  if (constant != 0) coeffs_.push_back(std::move(constant));
}

Polynomial Polynomial::monomial(BigInt coeff, int power) {
  Polynomial p;
  if (coeff != 0) {
    p.coeffs_.assign(power + 1, BigInt(0));
    p.coeffs_[power] = std::move(coeff);
  }
  return p;
}

Polynomial Polynomial::symbol() { return monomial(BigInt(1), 1); }

void Polynomial::trim() {
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r;
  r.coeffs_.resize(std::max(coeffs_.size(), o.coeffs_.size()), BigInt(0));
  for (std::size_t i = 0; i < coeffs_.size(); ++i) r.coeffs_[i] += coeffs_[i];
  for (std::size_t i = 0; i < o.coeffs_.size(); ++i) r.coeffs_[i] += o.coeffs_[i];
  r.trim();
  return r;
}

Polynomial Polynomial::operator-() const {
  Polynomial r = *this;
  for (auto& c : r.coeffs_) c = -c;
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + (-o); }

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (is_zero() || o.is_zero()) return {};
  Polynomial r;
  r.coeffs_.assign(coeffs_.size() + o.coeffs_.size() - 1, BigInt(0));
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    for (std::size_t j = 0; j < o.coeffs_.size(); ++j)
      r.coeffs_[i + j] += coeffs_[i] * o.coeffs_[j];
  r.trim();
  return r;
}

BigInt Polynomial::content() const {
  BigInt g = 0;
  for (const auto& c : coeffs_) g = big_gcd(g, c);
  return g;
}

Polynomial Polynomial::primitive_part() const {
  if (is_zero()) return {};
  BigInt g = content();
  if (leading() < 0) g = -g;
  Polynomial r = *this;
  for (auto& c : r.coeffs_) c /= g;
  return r;
}

Polynomial Polynomial::scaled(const BigInt& k) const {
  Polynomial r = *this;
  for (auto& c : r.coeffs_) c *= k;
  r.trim();
  return r;
}

Polynomial Polynomial::divide_content(const BigInt& k) const {
  Polynomial r = *this;
  for (auto& c : r.coeffs_) c /= k;
  return r;
}

Polynomial Polynomial::divide_exact(const Polynomial& d) const {
  if (d.is_zero()) throw std::logic_error("Polynomial: division by zero");
  Polynomial rem = *this;
  Polynomial quot;
  quot.coeffs_.assign(
      rem.degree() >= d.degree() ? rem.degree() - d.degree() + 1 : 0, BigInt(0));
  while (!rem.is_zero() && rem.degree() >= d.degree()) {
    if (rem.leading() % d.leading() != 0)
      throw std::logic_error("Polynomial: inexact division");
    const BigInt c = rem.leading() / d.leading();
    const int k = rem.degree() - d.degree();
    quot.coeffs_[k] = c;
    rem = rem - d * monomial(c, k);
  }
  if (!rem.is_zero()) throw std::logic_error("Polynomial: inexact division");
  quot.trim();
  return quot;
}

BigInt Polynomial::eval_int(const BigInt& x) const {
  BigInt acc = 0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double Polynomial::eval(double x) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it)
    acc = acc * x + it->convert_to<double>();
  return acc;
}

std::string Polynomial::str(const std::string& var) const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int k = degree(); k >= 0; --k) {
    const BigInt& c = coeffs_[k];
    if (c == 0) continue;
    BigInt mag = c < 0 ? BigInt(-c) : c;
    if (first) {
      if (c < 0) os << "-";
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    if (k == 0 || mag != 1) os << mag.str();
    if (k > 0) {
      if (mag != 1) os << "*";
      os << var;
      if (k > 1) os << "^" << k;
    }
  }
  return os.str();
}

// subresultant-free primitive PRS; degrees here are tiny
Polynomial Polynomial::gcd(Polynomial a, Polynomial b) {
  a = a.is_zero() ? a : a.primitive_part();
  b = b.is_zero() ? b : b.primitive_part();
  while (!b.is_zero()) {
    // pseudo-remainder of a by b
    Polynomial rem = a;
    const int db = b.degree();
    while (!rem.is_zero() && rem.degree() >= db) {
      const int k = rem.degree() - db;
      const BigInt lr = rem.leading();
      const BigInt lb = b.leading();
      rem = rem.scaled(lb) - b * monomial(lr, k);
    }
    a = b;
    b = rem.is_zero() ? rem : rem.primitive_part();
  }
  if (a.is_zero()) return a;
  return a.primitive_part();
}

SymbolicRational::SymbolicRational(Polynomial num, Polynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw std::logic_error("SymbolicRational: zero denominator");
  canonicalize();
}

SymbolicRational SymbolicRational::integer(long v) {
  return SymbolicRational(Polynomial(BigInt(v)), Polynomial(BigInt(1)));
}

SymbolicRational SymbolicRational::fraction(long num, long den) {
  return SymbolicRational(Polynomial(BigInt(num)), Polynomial(BigInt(den)));
}

void SymbolicRational::canonicalize() {
  if (num_.is_zero()) {
    den_ = Polynomial(BigInt(1));
    return;
  }
  Polynomial g = Polynomial::gcd(num_, den_);
  if (!g.is_zero() && g.degree() >= 1) {
    num_ = num_.divide_exact(g);
    den_ = den_.divide_exact(g);
  }
  // integer content
  const BigInt g2 = big_gcd(num_.content(), den_.content());
  if (g2 > 1) {
    num_ = num_.divide_content(g2);
    den_ = den_.divide_content(g2);
  }
  if (den_.leading() < 0) {
    num_ = -num_;
    den_ = -den_;
  }
}

SymbolicRational SymbolicRational::operator+(const SymbolicRational& o) const {
  return SymbolicRational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}
SymbolicRational SymbolicRational::operator-(const SymbolicRational& o) const {
  return SymbolicRational(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}
SymbolicRational SymbolicRational::operator*(const SymbolicRational& o) const {
  return SymbolicRational(num_ * o.num_, den_ * o.den_);
}
SymbolicRational SymbolicRational::operator/(const SymbolicRational& o) const {
  if (o.is_zero()) throw std::logic_error("SymbolicRational: division by zero");
  return SymbolicRational(num_ * o.den_, den_ * o.num_);
}
SymbolicRational SymbolicRational::operator-() const {
  SymbolicRational r = *this;
  r.num_ = -r.num_;
  return r;
}

double SymbolicRational::eval(std::int64_t dimension) const {
  const BigInt x(dimension);
  const BigInt d = den_.eval_int(x);
  if (d == 0)
    throw SingularDimensionError("SymbolicRational: denominator vanishes at dimension " +
                                 std::to_string(dimension));
  const BigInt n = num_.eval_int(x);
  // exact rational to double
  return n.convert_to<double>() / d.convert_to<double>();
}

std::string SymbolicRational::str(const std::string& var) const {
  if (num_.is_zero()) return "0";
  const bool den_one = den_.degree() == 0 && den_.leading() == 1;
  std::ostringstream os;
  if (den_one) {
    os << num_.str(var);
  } else {
    os << "(" << num_.str(var) << ")/(" << den_.str(var) << ")";
  }
  return os.str();
}

}  // namespace u1chaos
