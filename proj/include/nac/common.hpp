#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace nac {

using NodeId = std::uint32_t;
using Rng = std::mt19937_64;

// Error classes. Each maps onto a distinct CLI exit code (see exit_code()).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct InvalidActionError : Error {
  using Error::Error;
};
struct EpisodeOverError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct GenerationError : Error {
  using Error::Error;
};
struct ConvergenceError : Error {
  using Error::Error;
};
struct ContractError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

inline int exit_code(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const ParseError*>(&e)) return 3;
  if (dynamic_cast<const GenerationError*>(&e)) return 4;
  if (dynamic_cast<const ConvergenceError*>(&e)) return 5;
  if (dynamic_cast<const NumericError*>(&e)) return 6;
  if (dynamic_cast<const InvalidActionError*>(&e) || dynamic_cast<const EpisodeOverError*>(&e)) return 7;
  return 1;
}

namespace detail {

inline void append(std::ostringstream&) {}

template <typename T, typename... Rest>
void append(std::ostringstream& oss, T&& head, Rest&&... rest) {
  oss << std::forward<T>(head);
  append(oss, std::forward<Rest>(rest)...);
}

}  // namespace detail

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  detail::append(oss, std::forward<Args>(args)...);
  return oss.str();
}

template <typename E = ContractError, typename... Args>
void require(bool ok, Args&&... msg) {
  if (!ok) throw E(concat(std::forward<Args>(msg)...));
}

// Derives an independent stream seed from a base seed and a stream index
// (splitmix64 finalizer), so that per-agent / per-instance generators never
// share state.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Uniform integer in [0, bound).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(rng);
}

}  // namespace nac
