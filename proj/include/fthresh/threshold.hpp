#ifndef FTHRESH_THRESHOLD_HPP
#define FTHRESH_THRESHOLD_HPP

#include "fthresh/surface.hpp"

#include <string>
#include <string_view>

namespace fthresh {

enum class RuleKind { Hard, Soft, Scad, AdaptiveLasso };

/**
 * A functional thresholding rule s_lambda. Every rule acts on a surface Z as a
 * scalar multiple c(||Z||, lambda) * Z with c in [0, 1], where ||.|| is the
 * Hilbert–Schmidt norm (or the sup norm when selected).
 *
 * - Hard: keep Z when ||Z|| > lambda.
 * - Soft: (1 - lambda / ||Z||)_+.
 * - SCAD(a > 2): soft below 2 lambda, ((a - 1) - a lambda / ||Z||) / (a - 2)
 *   on (2 lambda, a lambda], identity above a lambda.
 * - Adaptive lasso(eta >= 0): (1 - (lambda / ||Z||)^(eta + 1))_+.
 */
class ThresholdRule {
  public:
    static ThresholdRule hard() { return ThresholdRule(RuleKind::Hard, 0.0); }
    static ThresholdRule soft() { return ThresholdRule(RuleKind::Soft, 0.0); }
    static ThresholdRule scad(double a = 3.7) { return ThresholdRule(RuleKind::Scad, a); }
    static ThresholdRule adaptive_lasso(double eta = 3.0) { return ThresholdRule(RuleKind::AdaptiveLasso, eta); }

    /// Parses "hard", "soft", "scad[:a=3.7]", "al[:eta=3]" (also "adaptive-lasso").
    static ThresholdRule parse(std::string_view text);

    RuleKind kind() const { return kind_; }
    /// SCAD's a or adaptive lasso's eta; 0 for hard and soft.
    double parameter() const { return parameter_; }

    /// Canonical text form, accepted back by parse().
    std::string to_string() const;

    bool operator==(const ThresholdRule&) const = default;

  private:
    ThresholdRule(RuleKind kind, double parameter);

    RuleKind kind_;
    double parameter_;
};

enum class NormKind { HilbertSchmidt, Supremum };

/// Norm of a surface under the selected kind.
double surface_norm(const Surface& z, NormKind kind);

/// Scalar c with s_lambda(Z) = c Z for a surface of norm `norm`; 0 whenever norm <= lambda.
double shrinkage_factor(double norm, double lambda, const ThresholdRule& rule);

/// Applies the rule to a whole surface. Throws ParameterError for negative lambda.
Surface apply_threshold(const Surface& z, double lambda, const ThresholdRule& rule,
                        NormKind norm = NormKind::HilbertSchmidt);

}

#endif
