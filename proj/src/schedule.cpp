#include "gendisc/schedule.hpp"

#include <cmath>
#include <sstream>

#include "gendisc/numeric.hpp"

namespace gendisc {

DiscountSchedule DiscountSchedule::hyperbolic(double h, double r) {
    if (!(h > 0.0) || !(r > 0.0) || !std::isfinite(h) || !std::isfinite(r))
        throw Error(ErrorCode::InvalidSchedule, "hyperbolic schedule needs h > 0 and r > 0");
    if (r / h > 1.0)
        throw Error(ErrorCode::InvalidSchedule, "hyperbolic schedule needs r/h <= 1 for divergent partial sums");
    return DiscountSchedule(Hyperbolic{h, r});
}

DiscountSchedule DiscountSchedule::unit() { return DiscountSchedule(Unit{}); }

DiscountSchedule DiscountSchedule::tabulated(std::vector<double> values, bool tail_divergent) {
    if (values.empty())
        throw Error(ErrorCode::InvalidSchedule, "tabulated schedule needs at least one value");
    for (double v : values)
        if (!std::isfinite(v))
            throw Error(ErrorCode::InvalidSchedule, "tabulated schedule contains a non-finite value");
    return DiscountSchedule(Tabulated{std::move(values), tail_divergent});
}

double DiscountSchedule::phi(Index i) const {
    struct Visitor {
        Index i;
        double operator()(const Hyperbolic& s) const {
            return std::pow(1.0 + s.h * static_cast<double>(i), -s.r / s.h);
        }
        double operator()(const Unit&) const { return 1.0; }
        double operator()(const Tabulated& s) const {
            if (i >= s.values.size()) {
                std::ostringstream msg;
                msg << "index " << i << " beyond tabulated schedule of length " << s.values.size();
                throw Error(ErrorCode::InvalidSchedule, msg.str());
            }
            return s.values[i];
        }
    };
    return std::visit(Visitor{i}, family_);
}

Index DiscountSchedule::table_length() const noexcept {
    if (const auto* t = std::get_if<Tabulated>(&family_))
        return t->values.size();
    return 0;
}

std::string DiscountSchedule::describe() const {
    std::ostringstream out;
    out.precision(17);
    if (const auto* h = std::get_if<Hyperbolic>(&family_))
        out << "hyperbolic(h=" << h->h << ",r=" << h->r << ")";
    else if (is_unit())
        out << "unit";
    else {
        const auto& t = std::get<Tabulated>(family_);
        out << "tabulated(" << t.values.size() << " values" << (t.tail_divergent ? ",divergent" : "") << ")";
    }
    return out.str();
}

double phi_partial_sum(const DiscountSchedule& schedule, Index k, Index n) {
    if (n < 1)
        throw Error(ErrorCode::InvalidArgument, "phi_partial_sum needs n >= 1");
    if (schedule.is_unit())
        return static_cast<double>(n);
    CompensatedSum sum;
    for (Index i = k; i < k + n; ++i)
        sum.add(schedule.phi(i));
    return sum.value();
}

std::string to_string(ScheduleViolation::Kind kind) {
    using K = ScheduleViolation::Kind;
    switch (kind) {
    case K::FirstNotOne: return "first_not_one";
    case K::OutOfRange: return "out_of_range";
    case K::Increasing: return "increasing";
    case K::NotSuperadditive: return "not_superadditive";
    case K::DivergenceNotCertified: return "divergence_not_certified";
    case K::TableTooShort: return "table_too_short";
    }
    return "unknown";
}

std::vector<ScheduleViolation> validate_schedule(const DiscountSchedule& schedule, Index N) {
    if (N < 2)
        throw Error(ErrorCode::InvalidArgument, "validate_schedule needs N >= 2");
    using K = ScheduleViolation::Kind;
    std::vector<ScheduleViolation> report;

    Index last = N;
    if (const Index len = schedule.table_length(); len != 0 && len <= N) {
        last = len - 1;
        std::ostringstream msg;
        msg << "table has " << len << " values, checked indices 0.." << last << " only";
        report.push_back({K::TableTooShort, len, 0, msg.str()});
    }

    std::vector<double> phi(last + 1);
    for (Index i = 0; i <= last; ++i)
        phi[i] = schedule.phi(i);

    if (phi[0] != 1.0)
        report.push_back({K::FirstNotOne, 0, 0, "phi(0) != 1"});
    for (Index i = 0; i <= last; ++i) {
        if (phi[i] < 0.0 || phi[i] > 1.0) {
            std::ostringstream msg;
            msg << "phi(" << i << ") = " << phi[i] << " outside [0,1]";
            report.push_back({K::OutOfRange, i, 0, msg.str()});
        }
        if (i > 0 && phi[i] > phi[i - 1]) {
            std::ostringstream msg;
            msg << "phi(" << i << ") > phi(" << i - 1 << ")";
            report.push_back({K::Increasing, i, 0, msg.str()});
        }
    }

    // pow() rounding can make the hyperbolic equality case n=0 or k=0 miss by an ulp
    constexpr double rel_tol = 1e-13;
    for (Index n = 1; n <= last; ++n) {
        for (Index k = n; n + k <= last; ++k) {
            const double prod = phi[n] * phi[k];
            if (phi[n + k] < prod - rel_tol * prod) {
                std::ostringstream msg;
                msg << "phi(" << n + k << ") = " << phi[n + k] << " < phi(" << n << ") phi(" << k << ") = " << prod;
                report.push_back({K::NotSuperadditive, n, k, msg.str()});
            }
        }
    }

    if (const auto* t = std::get_if<DiscountSchedule::Tabulated>(&schedule.family()); t && !t->tail_divergent)
        report.push_back({K::DivergenceNotCertified, 0, 0, "tabulated schedule does not declare a divergent tail"});
    return report;
}

} // namespace gendisc
