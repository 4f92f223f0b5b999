#pragma once

// Core domain types of the matching market: integer goods quantities,
// fixed-point money, calibrated market instances, flows and equilibria.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dapmap {

/// Integer value tagged with a dimension so quantities and money never mix
/// by accident. Arithmetic is exact 64-bit integer arithmetic.
template <class Tag>
struct Strong {
  std::int64_t value{0};

  constexpr Strong() = default;
  constexpr explicit Strong(std::int64_t v) : value(v) {}

  constexpr auto operator<=>(const Strong&) const = default;

  constexpr Strong& operator+=(Strong o) { value += o.value; return *this; }
  constexpr Strong& operator-=(Strong o) { value -= o.value; return *this; }
  friend constexpr Strong operator+(Strong a, Strong b) { return Strong{a.value + b.value}; }
  friend constexpr Strong operator-(Strong a, Strong b) { return Strong{a.value - b.value}; }
};

struct QuantityTag {};
struct MoneyTag {};

/// Goods count in base units (default 1 unit = 1 kt P2O5).
using Quantity = Strong<QuantityTag>;
/// Fixed-point money in minor units of the relative cost unit.
using Money = Strong<MoneyTag>;

constexpr Money operator*(Money m, Quantity q) { return Money{m.value * q.value}; }
constexpr Money operator*(Quantity q, Money m) { return m * q; }

/// Default number of minor money units per relative cost unit.
inline constexpr std::int64_t kDefaultMoneyScale = 100;

/// Dense row-major m x n table (suppliers x markets).
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), cells_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return cells_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t rows_{0};
  std::size_t cols_{0};
  std::vector<T> cells_;
};

/// One fully calibrated auction problem.
struct MarketInstance {
  std::vector<Quantity> capacity;      // s_i, one per international supplier
  std::vector<Quantity> demand;        // d_j, one per market
  Money congestion{0};                 // a, money per unit squared
  std::vector<Money> local_cost;       // c_oj, one per market
  Grid<std::optional<Money>> trade_cost;  // t_ij, present only on allowed pairs
  Grid<std::uint8_t> allowed;          // trade mask, 1 = supplier may serve market

  std::size_t suppliers() const { return capacity.size(); }
  std::size_t markets() const { return demand.size(); }

  bool is_allowed(std::size_t i, std::size_t j) const { return allowed(i, j) != 0; }
  /// Trade cost on an allowed pair. Throws ValidationError on a masked pair.
  Money cost(std::size_t i, std::size_t j) const;

  /// Builds an instance with every pair allowed.
  static MarketInstance full_mask(std::vector<std::int64_t> capacity,
                                  std::vector<std::int64_t> demand,
                                  std::int64_t congestion,
                                  std::vector<std::int64_t> local_cost,
                                  const std::vector<std::vector<std::int64_t>>& trade_cost);

  bool operator==(const MarketInstance&) const = default;
};

/// Integer flows x_i^j from international suppliers to markets. Local supply
/// x_o^j is always derived as d_j - sum_i x_i^j.
class FlowMatrix {
 public:
  FlowMatrix() = default;
  FlowMatrix(std::size_t suppliers, std::size_t markets) : x_(suppliers, markets, 0) {}

  std::size_t suppliers() const { return x_.rows(); }
  std::size_t markets() const { return x_.cols(); }

  std::int64_t& at(std::size_t i, std::size_t j) { return x_(i, j); }
  std::int64_t at(std::size_t i, std::size_t j) const { return x_(i, j); }

  std::int64_t sold(std::size_t i) const;
  std::int64_t imported(std::size_t j) const;
  std::int64_t local(std::size_t j, const MarketInstance& inst) const;

  bool operator==(const FlowMatrix&) const = default;

 private:
  Grid<std::int64_t> x_;
};

/// Supplier-wide markups p_i >= 0.
using MarkupVector = std::vector<Money>;

struct Equilibrium {
  MarkupVector markups;
  FlowMatrix flows;
};

/// Lists every violated instance invariant. Empty means valid.
std::vector<std::string> validate_instance(const MarketInstance& inst);

/// Lists every violated flow invariant (shape, non-negativity, capacity,
/// per-market demand cap, mask).
std::vector<std::string> validate_flows(const MarketInstance& inst, const FlowMatrix& flows);

/// Throws ValidationError with the joined report when the instance is invalid.
void require_valid(const MarketInstance& inst);

}  // namespace dapmap
