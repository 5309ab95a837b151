#include "twoadic/ring2.hpp"

#include <sstream>

namespace twoadic::ring2 {

uint32_t mod2n(int64_t x, uint8_t level) {
  if (level == 0 || level > max_level)
    throw precondition_failed("level out of range [1," +
                              std::to_string(int(max_level)) + "]: " +
                              std::to_string(int(level)));
  uint64_t m = uint64_t(1) << level;
  int64_t r = x % int64_t(m);
  if (r < 0) r += int64_t(m);
  return uint32_t(r);
}

Residue make_residue(int64_t x, uint8_t level) {
  return Residue{mod2n(x, level), level};
}

uint32_t inv_odd(uint32_t x, uint8_t level) {
  if ((x & 1) == 0)
    throw not_invertible("even residue has no inverse mod 2^" +
                         std::to_string(int(level)));
  // Newton iteration doubles the number of correct bits per step.
  uint32_t mask = uint32_t((uint64_t(1) << level) - 1);
  uint64_t inv = 1;
  for (int i = 0; i < 5; ++i) inv = (inv * (2 - x * inv)) & mask;
  return uint32_t(inv & mask);
}

std::optional<unsigned long> val2(const mpz_class& x) {
  if (x == 0) return std::nullopt;
  return mpz_scan1(x.get_mpz_t(), 0);
}

std::optional<unsigned long> valp(const mpz_class& x, const mpz_class& p) {
  if (x == 0) return std::nullopt;
  if (p == 2) return val2(x);
  mpz_class q = x, r;
  unsigned long v = 0;
  for (;;) {
    mpz_class quo;
    mpz_fdiv_qr(quo.get_mpz_t(), r.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
    if (r != 0) return v;
    q = quo;
    ++v;
  }
}

IntPoly IntPoly::from_ints(const std::vector<long>& c) {
  IntPoly f;
  f.coeffs.assign(c.begin(), c.end());
  return f;
}

mpz_class IntPoly::eval(const mpz_class& x) const {
  mpz_class acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

IntPoly IntPoly::derivative() const {
  IntPoly d;
  for (size_t i = 1; i < coeffs.size(); ++i) d.coeffs.push_back(coeffs[i] * long(i));
  return d;
}

int IntPoly::degree() const {
  for (size_t i = coeffs.size(); i-- > 0;)
    if (coeffs[i] != 0) return int(i);
  return -1;
}

std::string IntPoly::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0) continue;
    if (!first) os << " + ";
    os << coeffs[i];
    if (i == 1) os << "*x";
    if (i > 1) os << "*x^" << i;
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

static mpz_class pow_p(const mpz_class& p, unsigned long e) {
  mpz_class r;
  mpz_pow_ui(r.get_mpz_t(), p.get_mpz_t(), e);
  return r;
}

static bool divides_pow(const mpz_class& v, const mpz_class& p, unsigned long e) {
  if (v == 0) return true;
  mpz_class r = v % pow_p(p, e);
  return r == 0;
}

unsigned hensel_step(const IntPoly& f, const mpz_class& a, unsigned long j,
                     const mpz_class& p) {
  if (p < 2) throw precondition_failed("prime must be >= 2");
  mpz_class fa = f.eval(a);
  if (!divides_pow(fa, p, j))
    throw precondition_failed("f(a) is not 0 mod p^j (j = " +
                              std::to_string(j) + ")");
  mpz_class dfa = f.derivative().eval(a);
  auto tau_opt = valp(dfa, p);
  if (!tau_opt)
    throw precondition_failed("f'(a) = 0: valuation tau is infinite");
  unsigned long tau = *tau_opt;
  if (j < 2 * tau + 1)
    throw precondition_failed("lifting hypothesis j >= 2*tau + 1 fails (j = " +
                              std::to_string(j) + ", tau = " +
                              std::to_string(tau) + ")");

  mpz_class step = pow_p(p, j - tau);
  std::optional<unsigned> found;
  for (mpz_class t = 0; t < p; ++t) {
    if (divides_pow(f.eval(a + t * step), p, j + 1)) {
      if (found)
        throw precondition_failed("lift digit is not unique; hypotheses violated");
      found = unsigned(t.get_ui());
    }
  }
  if (!found)
    throw precondition_failed("no lift digit exists; hypotheses violated");
  return *found;
}

HenselResult hensel_solve(const IntPoly& f, const mpz_class& seed,
                          unsigned long target_level, const mpz_class& p) {
  if (p < 2) throw precondition_failed("prime must be >= 2");
  if (target_level == 0) throw precondition_failed("target level must be >= 1");

  HenselResult res;
  res.target_level = target_level;
  mpz_class mod = pow_p(p, target_level);

  mpz_class a = seed;
  mpz_class fa = f.eval(a);
  if (fa == 0) {
    // Exact integer root; nothing to lift.
    res.root = ((a % mod) + mod) % mod;
    return res;
  }

  auto tau_opt = valp(f.derivative().eval(a), p);
  if (!tau_opt)
    throw no_progress("f'(seed) = 0 and f(seed) != 0: no starting level");
  unsigned long tau = *tau_opt;
  unsigned long v = *valp(fa, p);
  unsigned long j = 2 * tau + 1;
  if (v < j)
    throw no_progress("val_p(f(seed)) = " + std::to_string(v) +
                      " < 2*tau + 1 = " + std::to_string(j) +
                      ": seed does not satisfy the lifting hypothesis");
  res.start_level = j;
  res.tau = tau;

  // Each step improves f(a) = 0 from mod p^j to mod p^(j+1); tau is
  // unchanged along the way because a moves by multiples of p^(j - tau)
  // with j - tau > tau.
  while (j < target_level) {
    unsigned t = hensel_step(f, a, j, p);
    res.chain.push_back(t);
    a += mpz_class(t) * pow_p(p, j - tau);
    ++j;
  }

  res.root = ((a % mod) + mod) % mod;
  if (!divides_pow(f.eval(res.root), p, target_level))
    throw error("internal: lifted root fails its own residue check");
  return res;
}

} // namespace twoadic::ring2
