#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gendisc/model.hpp"

namespace gendisc {

/// General discount sequence phi(i), i >= 0.
///
/// Three families are supported:
///   - Hyperbolic: phi(i) = (1 + h i)^(-r/h) with h > 0, r > 0, r/h <= 1;
///   - Unit: phi == 1 (the undiscounted criterion);
///   - Tabulated: explicit values phi(0..L-1). Indices past the table are an
///     error. Divergence of the partial sums cannot be observed on a finite
///     table, so the caller must declare it with `tail_divergent`; every
///     asymptotic statement built on a tabulated schedule is conditional on
///     that declaration.
class DiscountSchedule {
public:
    struct Hyperbolic {
        double h;
        double r;
    };
    struct Unit {};
    struct Tabulated {
        std::vector<double> values;
        bool tail_divergent;
    };
    using Family = std::variant<Hyperbolic, Unit, Tabulated>;

    static DiscountSchedule hyperbolic(double h, double r);
    static DiscountSchedule unit();
    /// Only the shape is checked here (non-empty, finite); structural
    /// properties are reported by validate_schedule.
    static DiscountSchedule tabulated(std::vector<double> values, bool tail_divergent);

    double phi(Index i) const;
    double operator()(Index i) const { return phi(i); }

    const Family& family() const noexcept { return family_; }
    bool is_unit() const noexcept { return std::holds_alternative<Unit>(family_); }

    /// Largest admissible index + 1, or 0 when unbounded.
    Index table_length() const noexcept;

    std::string describe() const;

private:
    explicit DiscountSchedule(Family f) : family_(std::move(f)) {}
    Family family_;
};

/// sum_{i=k}^{k+n-1} phi(i); requires n >= 1.
double phi_partial_sum(const DiscountSchedule& schedule, Index k, Index n);

struct ScheduleViolation {
    enum class Kind { FirstNotOne, OutOfRange, Increasing, NotSuperadditive, DivergenceNotCertified, TableTooShort };
    Kind kind;
    Index i = 0;  ///< offending index (or first index of the pair)
    Index j = 0;  ///< second index for superadditivity, otherwise unused
    std::string message;
};

/// Checks phi(0) = 1, 0 <= phi <= 1, monotonicity, superadditivity
/// phi(n+k) >= phi(n) phi(k) for n + k <= N, and divergence of the partial
/// sums. An empty result means the schedule is valid up to N.
std::vector<ScheduleViolation> validate_schedule(const DiscountSchedule& schedule, Index N);

std::string to_string(ScheduleViolation::Kind kind);

} // namespace gendisc
