#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stance {

// Class order in every probability row is (against, neutral, supporting).
enum class Stance : std::int8_t { against = -1, neutral = 0, supporting = 1 };

inline constexpr int kNumClasses = 3;
inline constexpr std::array<Stance, kNumClasses> kAllStances = {
    Stance::against, Stance::neutral, Stance::supporting};

constexpr int column_of(Stance s) noexcept { return static_cast<int>(s) + 1; }
constexpr Stance stance_of_column(int col) noexcept {
  return static_cast<Stance>(col - 1);
}
constexpr int value_of(Stance s) noexcept { return static_cast<int>(s); }

std::optional<Stance> stance_from_int(long long v) noexcept;
std::string_view to_string(Stance s) noexcept;
// Accepts the class names and "-1", "0", "1", "+1".
std::optional<Stance> parse_stance(std::string_view name) noexcept;

// ---------------------------------------------------------------------------
// Error hierarchy. Data errors come from malformed inputs, parameter errors
// from out-of-contract arguments. The CLI maps them to exit codes 2 and 1.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class SeedingError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

class IsolatedNodeError : public DataError {
 public:
  IsolatedNodeError(std::size_t row, const std::string& what)
      : DataError(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class IngestError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace stance
