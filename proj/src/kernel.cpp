#include "fthresh/kernel.hpp"

#include "fthresh/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fthresh {

KernelKind parse_kernel(std::string_view name) {
    if (name == "gaussian" || name == "gauss") {
        return KernelKind::Gaussian;
    }
    if (name == "epanechnikov" || name == "epa") {
        return KernelKind::Epanechnikov;
    }
    throw ParameterError("unknown kernel '" + std::string(name) + "'");
}

Kernel::Kernel(KernelKind kind, double bandwidth) : kind_(kind), h_(bandwidth) {
    if (!(h_ > 0.0) || !std::isfinite(h_)) {
        throw ParameterError("kernel bandwidth must be positive");
    }
}

double Kernel::operator()(double x) const {
    const double t = x / h_;
    switch (kind_) {
    case KernelKind::Gaussian:
        if (std::abs(t) > kGaussianTruncation) {
            return 0.0;
        }
        return std::exp(-0.5 * t * t) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2) / h_;
    case KernelKind::Epanechnikov:
        return std::abs(t) >= 1.0 ? 0.0 : 0.75 * (1.0 - t * t) / h_;
    }
    return 0.0;
}

double Kernel::support_radius() const {
    return kind_ == KernelKind::Gaussian ? kGaussianTruncation * h_ : h_;
}

}
