// Residue arithmetic and Hensel lifting. Lifted roots are checked against
// exhaustive searches at small levels, so the lifting chain is validated by an
// independent oracle rather than by its own self-check alone.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "twoadic/errors.hpp"
#include "twoadic/ring2.hpp"

#include <random>
#include <set>
#include <vector>

using namespace twoadic;
using ring2::IntPoly;

namespace {

mpz_class pow2(unsigned long n) {
  mpz_class m;
  mpz_ui_pow_ui(m.get_mpz_t(), 2, n);
  return m;
}

// Exhaustive root set of f mod 2^level.
std::set<unsigned long> roots_mod(const IntPoly& f, unsigned long level) {
  std::set<unsigned long> out;
  mpz_class mod = pow2(level);
  for (unsigned long x = 0; x < (1ul << level); ++x)
    if (f.eval(x) % mod == 0) out.insert(x);
  return out;
}

} // namespace

TEST_CASE("canonical residues") {
  CHECK(ring2::mod2n(-1, 3) == 7);
  CHECK(ring2::mod2n(16, 4) == 0);
  CHECK(ring2::mod2n(-17, 4) == 15);
  CHECK(ring2::mod2n(5, 1) == 1);
  ring2::Residue r = ring2::make_residue(-3, 5);
  CHECK(r.value == 29);
  CHECK(r.level == 5);

  std::mt19937 rng(12345);
  for (int i = 0; i < 200; ++i) {
    int64_t x = int64_t(rng()) - (1ll << 31);
    uint8_t lvl = uint8_t(1 + rng() % ring2::max_level);
    uint32_t v = ring2::mod2n(x, lvl);
    CHECK(v < (1u << lvl));
    CHECK((int64_t(v) - x) % (1ll << lvl) == 0);
  }
}

TEST_CASE("odd inverses") {
  for (uint32_t x = 1; x < (1u << 10); x += 2) {
    uint32_t inv = ring2::inv_odd(x, 10);
    CHECK((uint64_t(x) * inv) % (1u << 10) == 1);
  }
}

TEST_CASE("2-adic and p-adic valuations") {
  CHECK(!ring2::val2(0).has_value());
  CHECK(ring2::val2(1) == 0ul);
  CHECK(ring2::val2(48) == 4ul);
  CHECK(ring2::val2(-8) == 3ul);
  CHECK(ring2::valp(243, 3) == 5ul);
  CHECK(ring2::valp(10, 5) == 1ul);
  CHECK(!ring2::valp(0, 7).has_value());
}

TEST_CASE("integer polynomials") {
  IntPoly f = IntPoly::from_ints({1, 0, 7}); // 7x^2 + 1
  CHECK(f.degree() == 2);
  CHECK(f.eval(0) == 1);
  CHECK(f.eval(3) == 64);
  CHECK(f.eval(-3) == 64);

  IntPoly d = f.derivative();
  CHECK(d.degree() == 1);
  CHECK(d.eval(1) == 14);
  CHECK(d.eval(0) == 0);

  IntPoly zero;
  CHECK(zero.degree() == -1);
  CHECK(zero.eval(5) == 0);

  // Exact big-integer evaluation: (2^40 + 1)^2 expanded by hand.
  IntPoly sq = IntPoly::from_ints({0, 0, 1});
  mpz_class big = pow2(40) + 1;
  CHECK(sq.eval(big) == pow2(80) + 2 * pow2(40) + 1);
}

TEST_CASE("single lifting step") {
  // f = x^2 + 7 at a = 1: f(1) = 8 = 0 mod 2^3, f'(1) = 2 so tau = 1 and
  // j = 3 >= 2*tau + 1. The unique digit is t = 1: f(1 + 4) = 32 = 0 mod 16
  // while f(1) = 8 is not.
  IntPoly f = IntPoly::from_ints({7, 0, 1});
  CHECK(ring2::hensel_step(f, 1, 3) == 1);

  // Not a root at the claimed level.
  CHECK_THROWS_AS(ring2::hensel_step(f, 1, 4), precondition_failed);
  // Level below 2*tau + 1.
  CHECK_THROWS_AS(ring2::hensel_step(f, 1, 2), precondition_failed);
}

TEST_CASE("lifted roots agree with exhaustive search") {
  struct Case {
    std::vector<long> coeffs;
    long seed;
  };
  // 7x^2 + 1 and the family x^2 + x + c with even c (simple roots, tau = 0).
  std::vector<Case> cases = {
      {{1, 0, 7}, 1},  {{4, 1, 1}, 0},  {{6, 1, 1}, 0},  {{12, 1, 1}, 0},
      {{18, 1, 1}, 0}, {{42, 1, 1}, 0}, {{4, 1, 1}, 1},  {{42, 1, 1}, 1},
      {{7, 0, 1}, 1}, // x^2 + 7
  };
  for (const Case& c : cases) {
    IntPoly f = IntPoly::from_ints(c.coeffs);
    ring2::HenselResult res = ring2::hensel_solve(f, c.seed, 12);
    CAPTURE(f.to_string());
    CAPTURE(c.seed);

    // Self-check: f(root) = 0 mod 2^12, root canonical.
    CHECK(res.root >= 0);
    CHECK(res.root < pow2(12));
    CHECK(f.eval(res.root) % pow2(12) == 0);

    // Independent oracle: the reduction of the lifted root appears among the
    // exhaustively enumerated roots at every level up to 6.
    for (unsigned long lvl = 1; lvl <= 6; ++lvl) {
      std::set<unsigned long> rs = roots_mod(f, lvl);
      mpz_class red = res.root % pow2(lvl);
      CHECK(rs.count(red.get_ui()) == 1);
    }
  }
}

TEST_CASE("exact roots are returned unchanged") {
  IntPoly f = IntPoly::from_ints({-1, 0, 1}); // x^2 - 1
  ring2::HenselResult res = ring2::hensel_solve(f, 1, 10);
  CHECK(res.root == 1);
  CHECK(res.chain.empty());
}

TEST_CASE("unliftable seeds are rejected") {
  // x^2 + 1 = 2 mod 4 at every odd x: no dyadic root.
  CHECK_THROWS_AS(ring2::hensel_solve(IntPoly::from_ints({1, 0, 1}), 1, 12),
                  no_progress);
  // x^2 + 3 = 4 mod 8 at every odd x.
  CHECK_THROWS_AS(ring2::hensel_solve(IntPoly::from_ints({3, 0, 1}), 1, 12),
                  no_progress);
}

TEST_CASE("odd primes lift too") {
  IntPoly f = IntPoly::from_ints({-7, 0, 1}); // x^2 - 7, root 1 mod 3
  ring2::HenselResult res = ring2::hensel_solve(f, 1, 5, 3);
  mpz_class mod;
  mpz_ui_pow_ui(mod.get_mpz_t(), 3, 5);
  CHECK(f.eval(res.root) % mod == 0);
  CHECK(res.root < mod);
  // Exhaustive check mod 3^5 = 243.
  bool found = false;
  for (unsigned long x = 0; x < 243; ++x)
    if (f.eval(x) % mod == 0 && res.root == x) found = true;
  CHECK(found);
}

TEST_CASE("random even-constant quadratics lift when a small root exists") {
  std::mt19937 rng(777);
  int lifted = 0;
  for (int i = 0; i < 40; ++i) {
    long c = 2 * long(rng() % 1000);
    IntPoly f = IntPoly::from_ints({c, 1, 1}); // x^2 + x + c
    for (long seed : {0L, 1L}) {
      ring2::HenselResult res = ring2::hensel_solve(f, seed, 10);
      CHECK(f.eval(res.root) % pow2(10) == 0);
      CHECK(res.root % 2 == seed); // tau = 0: the seed parity is preserved
      ++lifted;
    }
  }
  CHECK(lifted == 80);
}
