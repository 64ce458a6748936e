#pragma once

// Finite-valued background sequences v1 : Z -> R. Every kind is a pure
// function of the index n, so windows can be generated independently.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "qplyap/digest.hpp"
#include "qplyap/errors.hpp"

namespace qplyap {

enum class BackgroundKind { constant, periodic, sturmian, bernoulli, explicit_list };

inline const char* to_string(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::constant: return "constant";
    case BackgroundKind::periodic: return "periodic";
    case BackgroundKind::sturmian: return "sturmian";
    case BackgroundKind::bernoulli: return "bernoulli";
    case BackgroundKind::explicit_list: return "explicit";
  }
  return "?";
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Uniform in [0, 1), keyed by (seed, n) with no sequential state.
inline double counter_uniform(std::uint64_t seed, std::int64_t n) {
  const std::uint64_t h = splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(n));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline std::size_t floor_mod(std::int64_t a, std::size_t m) {
  const auto mm = static_cast<std::int64_t>(m);
  const std::int64_t r = a % mm;
  return static_cast<std::size_t>(r < 0 ? r + mm : r);
}

}  // namespace detail

struct BackgroundSpec {
  BackgroundKind kind = BackgroundKind::constant;
  std::vector<double> alphabet{0.0};
  std::vector<std::size_t> pattern;  // periodic pattern or explicit index list
  double alpha = 0.0;                // sturmian rotation number
  double beta = 0.0;                 // sturmian offset
  std::uint64_t seed = 0;            // bernoulli
  std::vector<double> probs;         // bernoulli
  bool zero_extension = false;       // explicit: 0 outside 1..len instead of repeating

  static BackgroundSpec constant(double c) {
    BackgroundSpec s;
    s.alphabet = {c};
    return s;
  }
  static BackgroundSpec periodic(std::vector<double> alphabet, std::vector<std::size_t> pattern) {
    BackgroundSpec s;
    s.kind = BackgroundKind::periodic;
    s.alphabet = std::move(alphabet);
    s.pattern = std::move(pattern);
    return s;
  }
  static BackgroundSpec sturmian(std::vector<double> alphabet, double alpha, double beta = 0.0) {
    BackgroundSpec s;
    s.kind = BackgroundKind::sturmian;
    s.alphabet = std::move(alphabet);
    s.alpha = alpha;
    s.beta = beta;
    return s;
  }
  static BackgroundSpec bernoulli(std::vector<double> alphabet, std::vector<double> probs,
                                  std::uint64_t seed) {
    BackgroundSpec s;
    s.kind = BackgroundKind::bernoulli;
    s.alphabet = std::move(alphabet);
    s.probs = std::move(probs);
    s.seed = seed;
    return s;
  }
  static BackgroundSpec explicit_list(std::vector<double> alphabet, std::vector<std::size_t> indices,
                                      bool zero_extension = false) {
    BackgroundSpec s;
    s.kind = BackgroundKind::explicit_list;
    s.alphabet = std::move(alphabet);
    s.pattern = std::move(indices);
    s.zero_extension = zero_extension;
    return s;
  }

  /// Throws ConfigError on a malformed background.
  void validate() const {
    if (alphabet.empty()) throw ConfigError("background: empty alphabet");
    for (double a : alphabet)
      if (!std::isfinite(a)) throw ConfigError("background: non-finite alphabet entry");
    auto sorted = alphabet;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("background: alphabet entries must be distinct");
    auto check_indices = [&] {
      if (pattern.empty()) throw ConfigError("background: empty pattern");
      for (auto i : pattern)
        if (i >= alphabet.size()) throw ConfigError("background: pattern index out of range");
    };
    switch (kind) {
      case BackgroundKind::constant:
        if (alphabet.size() != 1) throw ConfigError("background: constant needs one letter");
        break;
      case BackgroundKind::periodic:
        check_indices();
        break;
      case BackgroundKind::sturmian:
        if (alphabet.size() != 2) throw ConfigError("background: sturmian needs a two-letter alphabet");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("background: sturmian alpha must lie in (0,1)");
        if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("background: sturmian beta must lie in [0,1)");
        break;
      case BackgroundKind::bernoulli: {
        if (probs.size() != alphabet.size())
          throw ConfigError("background: bernoulli probs must match the alphabet size");
        for (double p : probs)
          if (!(p >= 0.0)) throw ConfigError("background: negative probability");
        const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("background: probabilities must sum to 1");
        break;
      }
      case BackgroundKind::explicit_list:
        check_indices();
        if (zero_extension && std::find(alphabet.begin(), alphabet.end(), 0.0) == alphabet.end())
          throw ConfigError("background: zero extension requires 0 in the alphabet");
        break;
    }
  }

  /// Non-fatal remarks, e.g. a sturmian rotation number that is numerically rational.
  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (kind == BackgroundKind::sturmian) {
      for (int den = 1; den <= 100; ++den) {
        const double num = std::round(alpha * den);
        if (std::abs(alpha - num / den) <= 1e-12) {
          out.push_back("background: sturmian alpha is within 1e-12 of " +
                        std::to_string(static_cast<long long>(num)) + "/" + std::to_string(den) +
                        "; the coding is periodic");
          break;
        }
      }
    }
    return out;
  }

  std::size_t letter_at(std::int64_t n) const {
    switch (kind) {
      case BackgroundKind::constant:
        return 0;
      case BackgroundKind::periodic:
        return pattern[detail::floor_mod(n - 1, pattern.size())];
      case BackgroundKind::sturmian: {
        const long double a = alpha, b = beta, nn = static_cast<long double>(n);
        const auto cut = std::floor((nn + 1) * a + b) - std::floor(nn * a + b);
        return static_cast<std::size_t>(cut);
      }
      case BackgroundKind::bernoulli: {
        const double u = detail::counter_uniform(seed, n);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
          acc += probs[i];
          if (u < acc) return i;
        }
        return probs.size() - 1;
      }
      case BackgroundKind::explicit_list:
        if (zero_extension) {
          if (n < 1 || n > static_cast<std::int64_t>(pattern.size()))
            return static_cast<std::size_t>(
                std::find(alphabet.begin(), alphabet.end(), 0.0) - alphabet.begin());
          return pattern[static_cast<std::size_t>(n - 1)];
        }
        return pattern[detail::floor_mod(n - 1, pattern.size())];
    }
    return 0;
  }

  double value_at(std::int64_t n) const { return alphabet[letter_at(n)]; }

  std::string canonical() const {
    std::string s = std::string("kind=") + to_string(kind) + ";alphabet=";
    for (double a : alphabet) s += format_double(a) + ",";
    switch (kind) {
      case BackgroundKind::periodic:
      case BackgroundKind::explicit_list:
        s += ";pattern=";
        for (auto i : pattern) s += std::to_string(i) + ",";
        if (kind == BackgroundKind::explicit_list) s += zero_extension ? ";zero" : ";periodic";
        break;
      case BackgroundKind::sturmian:
        s += ";alpha=" + format_double(alpha) + ";beta=" + format_double(beta);
        break;
      case BackgroundKind::bernoulli:
        s += ";seed=" + std::to_string(seed) + ";probs=";
        for (double p : probs) s += format_double(p) + ",";
        break;
      case BackgroundKind::constant:
        break;
    }
    return s;
  }
};

/// v1(n) for n = n_start .. n_end inclusive.
inline std::vector<double> generate(const BackgroundSpec& spec, std::int64_t n_start, std::int64_t n_end) {
  if (n_start > n_end) throw DomainError("background: n_start > n_end");
  spec.validate();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_end - n_start + 1));
  for (std::int64_t n = n_start; n <= n_end; ++n) out.push_back(spec.value_at(n));
  return out;
}

struct AlphabetStats {
  std::size_t q = 0;
  double max_abs = 0.0;
};

inline AlphabetStats alphabet_stats(const BackgroundSpec& spec) {
  AlphabetStats s{spec.alphabet.size(), 0.0};
  for (double a : spec.alphabet) s.max_abs = std::max(s.max_abs, std::abs(a));
  return s;
}

}  // namespace qplyap
