#pragma once

#include "twoadic/errors.hpp"

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace twoadic::ring2 {

// Canonical residue in [0, 2^level). Matrix and vector entries throughout the
// library live in this representation; level is capped at 15 so that products
// of two entries plus a carry fit comfortably in 64-bit intermediates.
struct Residue {
  uint32_t value = 0;
  uint8_t level = 1;
};

constexpr uint8_t max_level = 15;

uint32_t mod2n(int64_t x, uint8_t level);
Residue make_residue(int64_t x, uint8_t level);

// Multiplicative inverse of an odd residue mod 2^level.
uint32_t inv_odd(uint32_t x, uint8_t level);

// 2-adic valuation; nullopt encodes infinity (val of 0).
std::optional<unsigned long> val2(const mpz_class& x);
// General p-adic valuation, same convention.
std::optional<unsigned long> valp(const mpz_class& x, const mpz_class& p);

// Integer polynomial, constant coefficient first. Coefficients are exact
// arbitrary-precision integers so evaluation never overflows.
struct IntPoly {
  std::vector<mpz_class> coeffs;

  static IntPoly from_ints(const std::vector<long>& c);
  mpz_class eval(const mpz_class& x) const;
  IntPoly derivative() const;
  int degree() const; // -1 for the zero polynomial
  std::string to_string() const;
};

// One step of the generalized lifting lemma: given f(a) = 0 mod p^j with
// tau = val_p(f'(a)) finite and j >= 2*tau + 1, there is a unique t mod p
// such that f(a + t * p^(j - tau)) = 0 mod p^(j+1). Returns that t.
// Throws precondition_failed when the hypotheses do not hold.
unsigned hensel_step(const IntPoly& f, const mpz_class& a, unsigned long j,
                     const mpz_class& p = 2);

struct HenselResult {
  mpz_class root;               // canonical in [0, p^target_level)
  unsigned long target_level = 0;
  unsigned long start_level = 0;     // j of the first step (0 when no step ran)
  unsigned long tau = 0;             // val_p(f'(seed)) at the seed
  std::vector<unsigned> chain;       // digit t chosen at each step
};

// Iterate hensel_step from an integer seed until f(root) = 0 mod p^target_level.
// The starting j is the smallest level >= 2*tau + 1 at which the seed is a
// root; throws no_progress when no such level exists. A seed with f(seed) = 0
// exactly is returned as-is with an empty chain. The returned root is
// self-checked before returning.
HenselResult hensel_solve(const IntPoly& f, const mpz_class& seed,
                          unsigned long target_level, const mpz_class& p = 2);

} // namespace twoadic::ring2
