#include "gendisc/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace gendisc::io {

namespace {

void reject_unknown(const json& doc, const std::set<std::string>& allowed, const std::string& what) {
    if (!doc.is_object())
        throw Error(ErrorCode::ConfigError, what + " must be an object");
    for (const auto& [key, value] : doc.items())
        if (!allowed.contains(key))
            throw Error(ErrorCode::ConfigError, what + ": unknown field '" + key + "'");
}

template <typename T>
T field(const json& doc, const std::string& key, const std::string& what) {
    if (!doc.contains(key))
        throw Error(ErrorCode::ConfigError, what + ": missing field '" + key + "'");
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, what + ": field '" + key + "' has the wrong type");
    }
}

// JSON has no infinity; non-finite values become strings.
json number(double v) {
    if (std::isfinite(v))
        return v;
    if (std::isnan(v))
        return "nan";
    return v > 0 ? "inf" : "-inf";
}

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(number(v(i)));
    return out;
}

} // namespace

Model model_from_json(const json& doc) {
    const std::string what = "model";
    reject_unknown(doc, {"n_states", "n_actions", "kernel", "reward"}, what);
    const auto S = field<std::size_t>(doc, "n_states", what);
    const auto A = field<std::size_t>(doc, "n_actions", what);
    const auto kernel = field<std::vector<std::vector<std::vector<double>>>>(doc, "kernel", what);
    const auto reward = field<std::vector<std::vector<double>>>(doc, "reward", what);
    if (S == 0 || A == 0)
        throw Error(ErrorCode::ConfigError, "model: n_states and n_actions must be positive");
    if (kernel.size() != A || reward.size() != S)
        throw Error(ErrorCode::ConfigError, "model: kernel/reward shape does not match n_states, n_actions");

    std::vector<Eigen::MatrixXd> P;
    for (const auto& mat : kernel) {
        if (mat.size() != S)
            throw Error(ErrorCode::ConfigError, "model: kernel matrix has the wrong number of rows");
        Eigen::MatrixXd M(S, S);
        for (std::size_t x = 0; x < S; ++x) {
            if (mat[x].size() != S)
                throw Error(ErrorCode::ConfigError, "model: kernel row has the wrong length");
            for (std::size_t y = 0; y < S; ++y)
                M(x, y) = mat[x][y];
        }
        P.push_back(std::move(M));
    }
    Eigen::MatrixXd c(S, A);
    for (std::size_t x = 0; x < S; ++x) {
        if (reward[x].size() != A)
            throw Error(ErrorCode::ConfigError, "model: reward row has the wrong length");
        for (std::size_t a = 0; a < A; ++a)
            c(x, a) = reward[x][a];
    }
    return Model(std::move(P), std::move(c));
}

json model_to_json(const Model& model) {
    json kernel = json::array();
    for (const auto& P : model.kernels()) {
        json mat = json::array();
        for (Eigen::Index x = 0; x < P.rows(); ++x) {
            json row = json::array();
            for (Eigen::Index y = 0; y < P.cols(); ++y)
                row.push_back(P(x, y));
            mat.push_back(std::move(row));
        }
        kernel.push_back(std::move(mat));
    }
    json reward = json::array();
    for (Eigen::Index x = 0; x < model.reward().rows(); ++x) {
        json row = json::array();
        for (Eigen::Index a = 0; a < model.reward().cols(); ++a)
            row.push_back(model.reward()(x, a));
        reward.push_back(std::move(row));
    }
    json doc;
    doc["n_states"] = model.n_states();
    doc["n_actions"] = model.n_actions();
    doc["kernel"] = std::move(kernel);
    doc["reward"] = std::move(reward);
    return doc;
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ConfigError, "cannot open model file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, "model file " + path.string() + " is not valid JSON");
    }
    return model_from_json(doc);
}

DiscountSchedule schedule_from_json(const json& doc) {
    const std::string what = "schedule";
    if (!doc.is_object())
        throw Error(ErrorCode::ConfigError, "schedule must be an object");
    const auto family = field<std::string>(doc, "family", what);
    if (family == "hyperbolic") {
        reject_unknown(doc, {"family", "h", "r"}, what);
        return DiscountSchedule::hyperbolic(field<double>(doc, "h", what), field<double>(doc, "r", what));
    }
    if (family == "unit") {
        reject_unknown(doc, {"family"}, what);
        return DiscountSchedule::unit();
    }
    if (family == "tabulated") {
        reject_unknown(doc, {"family", "values", "tail_divergent"}, what);
        return DiscountSchedule::tabulated(field<std::vector<double>>(doc, "values", what),
                                           field<bool>(doc, "tail_divergent", what));
    }
    throw Error(ErrorCode::ConfigError, "schedule: unknown family '" + family + "'");
}

json schedule_to_json(const DiscountSchedule& schedule) {
    json doc;
    if (const auto* h = std::get_if<DiscountSchedule::Hyperbolic>(&schedule.family())) {
        doc["family"] = "hyperbolic";
        doc["h"] = h->h;
        doc["r"] = h->r;
    } else if (schedule.is_unit()) {
        doc["family"] = "unit";
    } else {
        const auto& t = std::get<DiscountSchedule::Tabulated>(schedule.family());
        doc["family"] = "tabulated";
        doc["values"] = t.values;
        doc["tail_divergent"] = t.tail_divergent;
    }
    return doc;
}

DiscountSchedule parse_schedule(const std::string& spec) {
    const auto start = spec.find_first_not_of(" \t\n");
    if (start != std::string::npos && spec[start] == '{') {
        json doc;
        try {
            doc = json::parse(spec);
        } catch (const json::exception&) {
            throw Error(ErrorCode::ConfigError, "schedule spec is not valid JSON");
        }
        return schedule_from_json(doc);
    }
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ':');)
        parts.push_back(part);
    auto to_double = [](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size())
            throw Error(ErrorCode::ConfigError, "schedule spec: '" + s + "' is not a number");
        return v;
    };
    if (parts.size() == 1 && parts[0] == "unit")
        return DiscountSchedule::unit();
    if (parts.size() == 3 && parts[0] == "hyperbolic")
        return DiscountSchedule::hyperbolic(to_double(parts[1]), to_double(parts[2]));
    if ((parts.size() == 2 || parts.size() == 3) && parts[0] == "tabulated") {
        if (parts.size() == 3 && parts[2] != "divergent")
            throw Error(ErrorCode::ConfigError, "schedule spec: expected ':divergent' suffix");
        std::vector<double> values;
        std::stringstream vs(parts[1]);
        for (std::string v; std::getline(vs, v, ',');)
            values.push_back(to_double(v));
        return DiscountSchedule::tabulated(std::move(values), parts.size() == 3);
    }
    throw Error(ErrorCode::ConfigError, "unrecognized schedule spec '" + spec + "'");
}

json to_json(const StationaryPolicy& u) { return u.actions(); }

json to_json(const SpanSolution& sol) {
    json doc;
    doc["lambda"] = number(sol.lambda);
    doc["w"] = vector_json(sol.w);
    doc["policy"] = to_json(sol.policy);
    doc["span_residual"] = number(sol.span_residual);
    doc["iterations"] = sol.iterations;
    doc["bounds"] = {{"delta", number(sol.delta)}, {"w_span_bound", number(sol.w_span_bound)}};
    return doc;
}

json to_json(const CertificateInfo& cert) {
    json doc;
    doc["kind"] = to_string(cert.kind);
    doc["bound"] = number(cert.bound);
    doc["K"] = cert.K ? json(number(*cert.K)) : json(nullptr);
    doc["b2_margin"] = number(cert.margin);
    doc["r_gamma"] = cert.r_gamma ? json(number(*cert.r_gamma)) : json(nullptr);
    return doc;
}

json to_json(const RiskSolution& sol) {
    json doc;
    doc["gamma"] = number(sol.gamma);
    doc["lambda"] = number(sol.lambda);
    doc["w"] = vector_json(sol.w);
    doc["policy"] = to_json(sol.policy);
    doc["residual"] = number(sol.residual);
    doc["iterations"] = sol.iterations;
    doc["certificate"] = to_json(sol.certificate);
    return doc;
}

json to_json(const CheckReport& report) {
    json doc;
    doc["name"] = report.name;
    doc["passed"] = report.passed;
    json values = json::object();
    for (const auto& [key, v] : report.values)
        values[key] = number(v);
    doc["values"] = std::move(values);
    std::size_t violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    std::string worst_label;
    for (const auto& a : report.assertions) {
        if (!a.pass)
            ++violations;
        if (a.bound - a.value < worst) {
            worst = a.bound - a.value;
            worst_label = a.label;
        }
    }
    doc["assertions"] = report.assertions.size();
    doc["violations"] = violations;
    doc["tightest"] = {{"label", worst_label}, {"headroom", number(worst)}};
    json failed = json::array();
    for (const auto& a : report.assertions)
        if (!a.pass)
            failed.push_back({{"label", a.label}, {"value", number(a.value)}, {"bound", number(a.bound)}});
    doc["failed"] = std::move(failed);
    return doc;
}

json to_json(const RateReport& report) {
    json doc;
    doc["nu"] = vector_json(report.nu);
    doc["value"] = number(report.value);
    doc["f"] = vector_json(report.f);
    doc["d"] = report.d ? json(number(*report.d)) : json(nullptr);
    doc["restarts"] = report.restarts;
    doc["gradient_norm"] = number(report.gradient_norm);
    doc["converged"] = report.converged;
    doc["method"] = report.method;
    return doc;
}

json to_json(const LdpReport& report) {
    json doc;
    doc["d"] = number(report.d);
    doc["kappa"] = number(report.kappa);
    doc["inf_rate"] = number(report.inf_rate);
    doc["bound_pass"] = report.bound_pass;
    doc["trend_pass"] = report.trend_pass;
    doc["passed"] = report.passed;
    json rows = json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"n", r.n},
                        {"sum_phi", number(r.sum_phi)},
                        {"q_exact", number(r.q_exact)},
                        {"bound", number(r.bound)},
                        {"normalized_log_q", number(r.normalized_log_q)},
                        {"envelope", number(r.envelope)},
                        {"pass", r.pass}});
    doc["rows"] = std::move(rows);
    return doc;
}

json to_json(const Theorem5Report& r) {
    return {{"gamma", number(r.gamma)},         {"eps", number(r.eps)},
            {"lambda_u", number(r.lambda_u)},   {"mean", number(r.mean)},
            {"value", number(r.value)},         {"margin", number(r.margin)},
            {"lower_bound", number(r.lower_bound)}, {"slack", number(r.slack)},
            {"log_prob_bound", number(r.log_prob_bound)}, {"e", number(r.e)},
            {"gamma_limit", number(r.gamma_limit)}, {"pass", r.pass}};
}

json to_json(const DvResult& r) {
    return {{"lhs", number(r.lhs)}, {"d_f", number(r.d_f)}, {"pass", r.pass}};
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::string lambda_tilde_csv(const TimeExtendedSolution& sol, const DiscountSchedule& schedule) {
    std::ostringstream out;
    out << "i,phi_i,lambda_tilde_i\n";
    for (Index j = 0; j < sol.N; ++j)
        out << sol.k + j << ',' << format_double(schedule.phi(sol.k + j)) << ',' << format_double(sol.lambda_tilde[j])
            << '\n';
    return out.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "gamma,lambda,certificate,residual\n";
    for (const auto& r : rows)
        out << format_double(r.gamma) << ',' << format_double(r.lambda) << ',' << r.certificate << ','
            << format_double(r.residual) << '\n';
    return out.str();
}

std::string ldp_csv(const LdpReport& report) {
    std::ostringstream out;
    out << "n,Sum_phi,Q_exact,bound,normalized_log_Q\n";
    for (const auto& r : report.rows)
        out << r.n << ',' << format_double(r.sum_phi) << ',' << format_double(r.q_exact) << ','
            << format_double(r.bound) << ',' << format_double(r.normalized_log_q) << '\n';
    return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
    out << contents;
}

} // namespace gendisc::io
