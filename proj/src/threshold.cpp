#include "fthresh/threshold.hpp"

#include "fthresh/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace fthresh {

namespace {

std::string lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

double parse_value(std::string_view text, std::string_view key, std::string_view original) {
    // Accept both "a=3.7" and a bare "3.7".
    if (auto eq = text.find('='); eq != std::string_view::npos) {
        if (text.substr(0, eq) != key) {
            throw ParameterError("unknown rule parameter in '" + std::string(original) + "'");
        }
        text.remove_prefix(eq + 1);
    }
    double value = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParameterError("cannot parse rule parameter in '" + std::string(original) + "'");
    }
    return value;
}

}

ThresholdRule::ThresholdRule(RuleKind kind, double parameter) : kind_(kind), parameter_(parameter) {
    if (kind_ == RuleKind::Scad && !(parameter_ > 2.0)) {
        throw ParameterError("SCAD requires a > 2");
    }
    if (kind_ == RuleKind::AdaptiveLasso && !(parameter_ >= 0.0 && std::isfinite(parameter_))) {
        throw ParameterError("adaptive lasso requires eta >= 0");
    }
}

ThresholdRule ThresholdRule::parse(std::string_view text) {
    const std::string s = lower(text);
    const auto colon = s.find(':');
    const std::string name = s.substr(0, colon);
    const std::string_view rest = colon == std::string::npos ? std::string_view{} : std::string_view(s).substr(colon + 1);

    if (name == "hard" && rest.empty()) {
        return hard();
    }
    if (name == "soft" && rest.empty()) {
        return soft();
    }
    if (name == "scad") {
        return rest.empty() ? scad() : scad(parse_value(rest, "a", text));
    }
    if (name == "al" || name == "adaptive-lasso" || name == "adaptive_lasso") {
        return rest.empty() ? adaptive_lasso() : adaptive_lasso(parse_value(rest, "eta", text));
    }
    throw ParameterError("unknown thresholding rule '" + std::string(text) + "'");
}

std::string ThresholdRule::to_string() const {
    std::ostringstream out;
    switch (kind_) {
    case RuleKind::Hard:
        return "hard";
    case RuleKind::Soft:
        return "soft";
    case RuleKind::Scad:
        out << "scad:a=" << parameter_;
        return out.str();
    case RuleKind::AdaptiveLasso:
        out << "al:eta=" << parameter_;
        return out.str();
    }
    return "unknown";
}

double surface_norm(const Surface& z, NormKind kind) {
    return kind == NormKind::Supremum ? sup_norm(z) : hs_norm(z);
}

double shrinkage_factor(double norm, double lambda, const ThresholdRule& rule) {
    if (norm <= lambda) {
        return 0.0;
    }
    const double ratio = lambda / norm;
    switch (rule.kind()) {
    case RuleKind::Hard:
        return 1.0;
    case RuleKind::Soft:
        return 1.0 - ratio;
    case RuleKind::Scad: {
        const double a = rule.parameter();
        if (norm <= 2.0 * lambda) {
            return 1.0 - ratio;
        }
        if (norm <= a * lambda) {
            return ((a - 1.0) - a * ratio) / (a - 2.0);
        }
        return 1.0;
    }
    case RuleKind::AdaptiveLasso:
        return 1.0 - std::pow(ratio, rule.parameter() + 1.0);
    }
    return 0.0;
}

Surface apply_threshold(const Surface& z, double lambda, const ThresholdRule& rule, NormKind norm) {
    if (!(lambda >= 0.0)) {
        throw ParameterError("threshold level must be nonnegative");
    }
    const double c = shrinkage_factor(surface_norm(z, norm), lambda, rule);
    if (c == 0.0) {
        return Surface::zeros(z.row_grid(), z.col_grid());
    }
    return z.scaled(c);
}

}
