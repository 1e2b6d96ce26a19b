#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace u1chaos {

using BigInt = boost::multiprecision::cpp_int;

struct SingularDimensionError : std::domain_error {
  using std::domain_error::domain_error;
};

// Univariate polynomial in the formal dimension symbol with exact integer
// coefficients, stored ascending by power.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(BigInt constant);
  static Polynomial monomial(BigInt coeff, int power);
  static Polynomial symbol();  // the dimension symbol itself

  bool is_zero() const { return coeffs_.empty(); }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<BigInt>& coeffs() const { return coeffs_; }
  BigInt leading() const { return coeffs_.empty() ? BigInt(0) : coeffs_.back(); }

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator-() const;
  bool operator==(const Polynomial& o) const { return coeffs_ == o.coeffs_; }

  BigInt content() const;            // gcd of coefficients (non-negative)
  Polynomial primitive_part() const; // content divided out, leading coeff > 0
  Polynomial scaled(const BigInt& k) const;
  Polynomial divide_content(const BigInt& k) const;  // exact coefficient division
  // exact division; throws std::logic_error if not divisible
  Polynomial divide_exact(const Polynomial& d) const;

  BigInt eval_int(const BigInt& x) const;
  double eval(double x) const;

  std::string str(const std::string& var = "L") const;

  static Polynomial gcd(Polynomial a, Polynomial b);

 private:
  void trim();
  std::vector<BigInt> coeffs_;
};

// Exact rational function in one dimension symbol, kept in canonical form:
// numerator and denominator coprime, denominator primitive with positive
// leading coefficient.
class SymbolicRational {
 public:
  SymbolicRational() : num_(), den_(Polynomial(BigInt(1))) {}
  SymbolicRational(Polynomial num, Polynomial den);
  static SymbolicRational integer(long v);
  static SymbolicRational fraction(long num, long den);

  const Polynomial& num() const { return num_; }
  const Polynomial& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }

  SymbolicRational operator+(const SymbolicRational& o) const;
  SymbolicRational operator-(const SymbolicRational& o) const;
  SymbolicRational operator*(const SymbolicRational& o) const;
  SymbolicRational operator/(const SymbolicRational& o) const;
  SymbolicRational operator-() const;
  bool operator==(const SymbolicRational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }

  // evaluation at an integer dimension; throws SingularDimensionError when the
  // denominator vanishes
  double eval(std::int64_t dimension) const;

  std::string str(const std::string& var = "L") const;

 private:
  void canonicalize();
  Polynomial num_, den_;
};

}  // namespace u1chaos
